use jeans::modes::{integrate_mode_ode_with_stops, jeans_classify, ModeSolution, ModeSpec, ModeTrajectory};

use crate::config::RunConfig;
use crate::output::{num, Metadata, Table};

/// Per-mode numbers behind one row of the `modes` table.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRow {
    pub lambda: f64,
    pub lam_kt: f64,
    pub class: &'static str,
    pub mu_plus: Option<f64>,
    pub mu_minus: Option<f64>,
    /// `t^{2/3} f(t)` from the ODE at each requested time.
    pub amps: Vec<f64>,
    /// Largest relative gap between closed form and ODE over those times.
    pub ode_error: Option<f64>,
}

fn amp_at(traj: &ModeTrajectory, t: f64) -> f64 {
    let i = traj
        .t
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map(|(i, _)| i)
        .expect("trajectory is never empty");
    traj.amp(i)
}

pub fn mode_row(cfg: &RunConfig, lambda: f64, times: &[f64]) -> jeans::Result<ModeRow> {
    let mode = ModeSpec::new(lambda, cfg.params.kappa_tilde())?;
    let class = jeans_classify(&mode, &cfg.params)?;
    let t_end = times.iter().copied().fold(1.0, f64::max);
    let amps: Vec<f64> = if t_end > 1.0 {
        let traj = integrate_mode_ode_with_stops(&mode, t_end, cfg.tol, times)?;
        times.iter().map(|&t| amp_at(&traj, t)).collect()
    } else {
        times.iter().map(|_| 1.0).collect()
    };
    let closed = ModeSolution::new(&mode).ok();
    let ode_error = match &closed {
        Some(sol) if !times.is_empty() => {
            let mut worst: f64 = 0.0;
            for (&t, &a) in times.iter().zip(amps.iter()) {
                let c = sol.evaluate(t)?.amp;
                worst = worst.max((a - c).abs() / c.abs().max(1e-300));
            }
            Some(worst)
        }
        _ => None,
    };
    Ok(ModeRow {
        lambda,
        lam_kt: mode.lam_kt(),
        class: class.as_str(),
        mu_plus: closed.map(|s| s.mu_plus),
        mu_minus: closed.map(|s| s.mu_minus),
        amps,
        ode_error,
    })
}

pub fn modes_header(times: &[f64]) -> Vec<String> {
    let mut h: Vec<String> = ["lambda", "lambda_kappa_tilde", "class", "mu_plus", "mu_minus"]
        .map(String::from)
        .to_vec();
    h.extend(times.iter().map(|t| format!("amp_t{t}")));
    h.push("ode_error".into());
    h
}

/// The whole table. Fails on the first invalid mode, since all modes are
/// checked before any output is written.
pub fn cmd_modes(cfg: &RunConfig) -> jeans::Result<String> {
    let times = &cfg.modes.times;
    // the mode equation needs gamma = 4/3; test it even for an empty list
    jeans_classify(&ModeSpec::new(0.0, cfg.params.kappa_tilde())?, &cfg.params)?;
    for &t in times {
        if t.is_nan() || t < 1.0 {
            return Err(jeans::Error::TimeBeforeOrigin(t));
        }
    }
    let rows = cfg
        .modes
        .lambdas
        .iter()
        .map(|&l| mode_row(cfg, l, times))
        .collect::<jeans::Result<Vec<_>>>()?;
    let mut table = Table::new(&Metadata::new(cfg), &modes_header(times));
    for r in rows {
        let mut f = vec![num(Some(r.lambda)), num(Some(r.lam_kt)), r.class.to_string(), num(r.mu_plus), num(r.mu_minus)];
        f.extend(r.amps.iter().map(|&a| num(Some(a))));
        f.push(num(r.ode_error));
        table.row(&f);
    }
    Ok(table.finish())
}
