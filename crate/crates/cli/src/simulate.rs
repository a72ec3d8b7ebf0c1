use serde::Serialize;

use jeans::direct::{integrate_direct, DirectRunConfig};
use jeans::fuchsian::{
    admissible_beta0, assemble_matrices, energy, from_fuchsian, integrate, snapshot_margin, to_fuchsian,
    DensityState, FuchsianConfig, Outputs,
};
use jeans::initial::random_admissible_data;
use jeans::ode::{Stats, StepControl};

use crate::config::{RunConfig, Solver};
use crate::output::{num, Metadata, Table};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotRow {
    pub t: f64,
    pub tau: f64,
    pub mean: f64,
    pub min: f64,
    pub sup: f64,
    /// `mean / t^{2/3}`; `β/2` on the background.
    pub scaled_mean: f64,
    pub energy: f64,
    pub margin: f64,
    pub relative_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDump {
    pub t: f64,
    /// `[re, im]` per coefficient in grid order.
    pub rho: Vec<[f64; 2]>,
    pub rho_t: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub metadata: Metadata,
    pub beta0_used: f64,
    pub admissible_beta0: f64,
    pub advisories: Vec<String>,
    /// Physical time of the last snapshot.
    pub t_final: f64,
    /// Stepper counters; `t_reached` is in the solver's own time variable.
    pub stats: Stats,
    /// Largest relative increase of the energy between consecutive accepted
    /// steps (Fuchsian) or stored snapshots (direct).
    pub max_step_increase: f64,
    pub snapshots: Vec<SnapshotRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectra: Option<Vec<SpectralDump>>,
}

pub struct Run {
    pub states: Vec<DensityState>,
    pub stats: Stats,
    pub max_step_increase: f64,
}

/// `count` times from 1 to `t_end`, evenly spaced in `ln t`.
pub fn snapshot_times(t_end: f64, count: usize) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..count)
        .map(|i| (t_end.ln() * i as f64 / (count - 1) as f64).exp())
        .collect();
    ts[0] = 1.0;
    ts[count - 1] = t_end;
    ts
}

/// Random data of size `beta0` (the admissible bound when unset), the
/// bound itself and an advisory when the data exceeds it.
pub fn initial_data(cfg: &RunConfig) -> jeans::Result<(DensityState, f64, f64, Option<String>)> {
    let eps = if cfg.nonlinear { 1.0 } else { 0.0 };
    let bound = admissible_beta0(cfg.beta, &cfg.params, cfg.sobolev_s, cfg.cs, cfg.cm, eps)?;
    let beta0 = cfg.beta0.unwrap_or(bound);
    let note = (beta0 > bound).then(|| {
        format!("beta0 = {beta0} exceeds the admissible bound {bound:.6}; running anyway")
    });
    let d = random_admissible_data(cfg.grid.build()?, cfg.beta, beta0, cfg.sobolev_s, cfg.seed)?;
    Ok((d, beta0, bound, note))
}

pub fn run_from(cfg: &RunConfig, d: &DensityState) -> jeans::Result<Run> {
    let times = snapshot_times(cfg.t_end(), cfg.simulate.snapshots);
    let interior = times[1..times.len() - 1].to_vec();
    match cfg.solver {
        Solver::Fuchsian => {
            let m = assemble_matrices(cfg.params.gamma, cfg.params.kappa_tilde())?;
            let s0 = to_fuchsian(d, cfg.beta, &cfg.params)?;
            let mut fc = FuchsianConfig::new(cfg.params);
            fc.tau_min = cfg.tau_min();
            fc.nonlinear = cfg.nonlinear;
            fc.sobolev_s = cfg.sobolev_s;
            fc.ctrl = StepControl::with_tol(cfg.tol);
            fc.outputs = Outputs::Taus(interior.iter().map(|t| 1.0 / t).collect());
            let traj = integrate(&s0, &m, &fc)?;
            Ok(Run {
                states: traj.snapshots.iter().map(from_fuchsian).collect::<jeans::Result<_>>()?,
                stats: traj.stats,
                max_step_increase: traj.max_energy_increase(),
            })
        }
        Solver::Direct => {
            let mut dc = DirectRunConfig::new(cfg.params, cfg.grid.build()?, cfg.t_end());
            dc.beta = cfg.beta;
            dc.nonlinear = cfg.nonlinear;
            dc.tol = cfg.tol;
            dc.times = interior;
            let traj = integrate_direct(&dc, d)?;
            let energies = traj
                .snapshots
                .iter()
                .map(|s| state_energy(cfg, s))
                .collect::<jeans::Result<Vec<f64>>>()?;
            let max_step_increase = energies
                .windows(2)
                .map(|w| if w[0] > 0.0 { (w[1] - w[0]) / w[0] } else { w[1] })
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(Run {
                states: traj.snapshots,
                stats: traj.stats,
                max_step_increase,
            })
        }
    }
}

fn state_energy(cfg: &RunConfig, d: &DensityState) -> jeans::Result<f64> {
    let fs = to_fuchsian(d, cfg.beta, &cfg.params)?;
    Ok(energy(&fs, cfg.sobolev_s, cfg.params.kappa_tilde()))
}

pub fn snapshot_row(cfg: &RunConfig, d: &DensityState) -> jeans::Result<SnapshotRow> {
    let samples = d.rho.samples();
    let m = snapshot_margin(d, cfg.beta);
    let mean = d.rho.mean();
    Ok(SnapshotRow {
        t: d.t,
        tau: 1.0 / d.t,
        mean,
        min: samples.iter().copied().fold(f64::INFINITY, f64::min),
        sup: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        scaled_mean: mean / d.t.powf(2.0 / 3.0),
        energy: state_energy(cfg, d)?,
        margin: m.margin,
        relative_margin: m.relative_margin,
    })
}

fn dump(d: &DensityState) -> SpectralDump {
    let pairs = |f: &jeans::spectral::SpectralField| f.coeffs().iter().map(|c| [c.re, c.im]).collect();
    SpectralDump {
        t: d.t,
        rho: pairs(&d.rho),
        rho_t: pairs(&d.rho_t),
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> jeans::Result<TrajectoryRecord> {
    let (d, beta0, bound, note) = initial_data(cfg)?;
    let run = run_from(cfg, &d)?;
    let snapshots = run
        .states
        .iter()
        .map(|s| snapshot_row(cfg, s))
        .collect::<jeans::Result<Vec<_>>>()?;
    let mut resolved = cfg.clone();
    resolved.beta0 = Some(beta0);
    Ok(TrajectoryRecord {
        metadata: Metadata::new(&resolved),
        beta0_used: beta0,
        admissible_beta0: bound,
        advisories: note.into_iter().collect(),
        t_final: snapshots.last().map(|s| s.t).unwrap_or(1.0),
        stats: run.stats,
        max_step_increase: run.max_step_increase,
        snapshots,
        spectra: cfg.simulate.dump_spectra.then(|| run.states.iter().map(dump).collect()),
    })
}

pub fn snapshot_table(rec: &TrajectoryRecord) -> String {
    let header = ["t", "tau", "mean", "min", "sup", "scaled_mean", "energy", "margin", "relative_margin"];
    let mut table = Table::new(&rec.metadata, &header.map(String::from));
    for s in &rec.snapshots {
        let v = [s.t, s.tau, s.mean, s.min, s.sup, s.scaled_mean, s.energy, s.margin, s.relative_margin];
        table.row(&v.map(|x| num(Some(x))));
    }
    table.finish()
}
