//! Numerical checks of the quantitative claims, shared by the acceptance
//! test target and the `verify` command.
//!
//! Each check returns a [`CheckResult`] with the measured quantity and the
//! threshold it is held to. Solver failures inside a check turn into a
//! failed result rather than an error.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::background::{background_derivatives, background_state, friedmann_residual, PhysicalParams};
use crate::direct::{compare_trajectories, integrate_direct, DirectRunConfig};
use crate::fuchsian::{
    admissible_beta0, assemble_matrices, from_fuchsian, integrate, to_fuchsian, verify_density_bounds,
    DensityState, FuchsianConfig, Outputs,
};
use crate::initial::{constant_mode_data, random_admissible_data, random_band_limited, single_mode_data};
use crate::modes::{closed_form_mode, integrate_mode_ode, jeans_classify, mode_exponents, JeansClass, ModeSpec};
use crate::ode::StepControl;
use crate::spectral::{SpectralField, TorusGrid};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub params: PhysicalParams,
    pub beta: f64,
    /// Data size for the random runs; the admissible bound when absent.
    pub beta0: Option<f64>,
    pub grid_n: usize,
    pub sobolev_s: f64,
    pub tau_min: f64,
    pub seeds: usize,
    pub seed: u64,
    pub cs: f64,
    pub cm: f64,
    pub tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            params: PhysicalParams::default(),
            beta: 1.0,
            beta0: None,
            grid_n: 16,
            sobolev_s: 3.0,
            tau_min: 0.01,
            seeds: 10,
            seed: 0,
            cs: 2.0,
            cm: 10.0,
            tol: 1e-10,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        TorusGrid::cube(self.grid_n)?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", self.beta, "must be positive"));
        }
        if let Some(b) = self.beta0 {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::invalid("beta0", b, "must be non-negative"));
            }
        }
        if !(self.sobolev_s >= 3.0) {
            return Err(Error::invalid("sobolev_s", self.sobolev_s, "must be at least 3"));
        }
        if !(self.tau_min > 0.0 && self.tau_min < 1.0) {
            return Err(Error::invalid("tau_min", self.tau_min, "must lie in (0, 1)"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", self.tol, "must be positive"));
        }
        if !(self.cs > 0.0 && self.cm > 0.0) {
            return Err(Error::invalid("cs", self.cs.min(self.cm), "constants must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
    /// Wall-clock seconds; left out of serialized reports so they stay
    /// reproducible.
    #[serde(skip)]
    pub seconds: f64,
    #[serde(skip)]
    pub budget: f64,
}

impl CheckResult {
    pub fn within_budget(&self) -> bool {
        self.seconds <= self.budget
    }

    /// One line of the form `PASS [n] name: measured (threshold) ...`.
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: measured {:.3e}, threshold {:.3e}, {:.2}s of {:.0}s{}",
            if self.passed && self.within_budget() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.threshold,
            self.seconds,
            self.budget,
            if self.detail.is_empty() { String::new() } else { format!(" ({})", self.detail) },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub beta0_used: f64,
    pub advisories: Vec<String>,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Timer(Instant);

impl Timer {
    fn start() -> Self {
        Timer(Instant::now())
    }
}

fn finish(
    timer: Timer,
    id: u32,
    name: &str,
    budget: f64,
    outcome: std::result::Result<(f64, String), impl std::fmt::Display>,
    threshold: f64,
    passes: impl Fn(f64) -> bool,
) -> CheckResult {
    let seconds = timer.0.elapsed().as_secs_f64();
    let (measured, detail, passed) = match outcome {
        Ok((m, d)) => (m, d, passes(m)),
        Err(e) => (f64::NAN, format!("error: {e}"), false),
    };
    CheckResult {
        id,
        name: name.to_string(),
        passed,
        measured,
        threshold,
        detail,
        seconds,
        budget,
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn log_times(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn grid(cfg: &VerifyConfig) -> Result<TorusGrid> {
    TorusGrid::cube(cfg.grid_n)
}

fn fuchsian_density_run(
    d: &DensityState,
    cfg: &VerifyConfig,
    params: PhysicalParams,
    nonlinear: bool,
    taus: Vec<f64>,
    tau_min: f64,
) -> Result<Vec<DensityState>> {
    let m = assemble_matrices(params.gamma, params.kappa_tilde())?;
    let s0 = to_fuchsian(d, cfg.beta, &params)?;
    let mut fc = FuchsianConfig::new(params);
    fc.tau_min = tau_min;
    fc.nonlinear = nonlinear;
    fc.sobolev_s = cfg.sobolev_s;
    fc.ctrl = StepControl::with_tol(cfg.tol);
    fc.outputs = Outputs::Taus(taus);
    let traj = integrate(&s0, &m, &fc)?;
    traj.snapshots.iter().map(from_fuchsian).collect()
}

/// Slope of `log ϱ(t, q₀)` against `log t` on `[10, 100]` for the spatially
/// constant perturbation of size `β₀ = 0.01`, both solvers.
pub fn check_growth_exponent(cfg: &VerifyConfig) -> CheckResult {
    let timer = Timer::start();
    let outcome = (|| -> Result<(f64, String)> {
        let g = grid(cfg)?;
        let d = constant_mode_data(g, cfg.beta, 0.005, 0.005);
        let times = log_times(10.0, 100.0, 19);
        let mut dc = DirectRunConfig::new(cfg.params, g, 100.0);
        dc.tol = cfg.tol;
        dc.beta = cfg.beta;
        dc.times = times.clone();
        let direct = integrate_direct(&dc, &d)?.snapshots;
        let taus: Vec<f64> = times.iter().map(|t| 1.0 / t).collect();
        let fuchs = fuchsian_density_run(&d, cfg, cfg.params, false, taus, 0.01)?;
        let slope = |states: &[DensityState]| {
            let (x, y): (Vec<f64>, Vec<f64>) = states
                .iter()
                .filter(|s| s.t >= 10.0 - 1e-9)
                .map(|s| (s.t.ln(), s.rho.samples()[0].ln()))
                .unzip();
            ls_slope(&x, &y)
        };
        let (a, b) = (slope(&direct), slope(&fuchs));
        let dev = (a - 2.0 / 3.0).abs().max((b - 2.0 / 3.0).abs());
        Ok((dev, format!("slopes direct {a:.6}, fuchsian {b:.6}")))
    })();
    finish(timer, 1, "growth exponent 2/3 (both solvers)", 30.0, outcome, 1e-3, |m| m <= 1e-3)
}

/// Mode ODE against the closed form for 20 values of `λκ̃` in `(-0.69, 0]`.
pub fn check_closed_form_oracle(cfg: &VerifyConfig) -> CheckResult {
    let timer = Timer::start();
    let outcome = (|| -> Result<(f64, String)> {
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(2));
        let mut worst = 0.0f64;
        for i in 0..20 {
            let lk = if i == 0 { 0.0 } else { -rng.gen_range(0.0..0.69) };
            let mode = ModeSpec::with_product(lk, 0.5)?;
            let traj = integrate_mode_ode(&mode, 100.0, 1e-10)?;
            for (t, f) in traj.t.iter().zip(&traj.f) {
                let exact = closed_form_mode(&mode, *t)?.f;
                worst = worst.max((f - exact).abs() / exact.abs());
            }
        }
        Ok((worst, String::new()))
    })();
    finish(timer, 2, "closed-form mode oracle", 5.0, outcome, 1e-8, |m| m <= 1e-8)
}

/// Classifier against the threshold `-(6πG)^{1/3}/(2κ)` and the sign of
/// `μ+` for 200 random `λ ∈ [-3, 0]` at `G = κ = 1`.
pub fn check_jeans_criterion(cfg: &VerifyConfig) -> CheckResult {
    let timer = Timer::start();
    let outcome = (|| -> Result<(f64, String)> {
        let params = PhysicalParams::default();
        let threshold = params.jeans_threshold();
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(3));
        let mut mismatches = 0usize;
        for i in 0..200 {
            let lam = if i == 0 { 0.0 } else { -rng.gen_range(0.0..=3.0) };
            let mode = ModeSpec::new(lam, params.kappa_tilde())?;
            let growing = jeans_classify(&mode, &params)? == JeansClass::Growing;
            let exponent_positive = match mode_exponents(&mode) {
                Ok((mu_plus, _)) => mu_plus > 0.0,
                Err(_) => false,
            };
            if growing != (lam > threshold) || growing != exponent_positive {
                mismatches += 1;
            }
        }
        Ok((mismatches as f64, format!("threshold {threshold:.6}")))
    })();
    finish(timer, 3, "Jeans criterion classification", 1.0, outcome, 0.0, |m| m == 0.0)
}

/// Structural identities of the system matrices for 50 random `(γ, κ̃)`.
pub fn check_matrix_algebra(cfg: &VerifyConfig) -> CheckResult {
    let timer = Timer::start();
    let outcome = (|| -> Result<(f64, String)> {
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(4));
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let gamma = 1.0 + rng.gen_range(f64::EPSILON..=2.0);
            let kt = rng.gen_range(f64::EPSILON..=4.0);
            worst = worst.max(assemble_matrices(gamma, kt)?.identity_defects().max());
        }
        Ok((worst, String::new()))
    })();
    finish(timer, 4, "matrix identities", 1.0, outcome, 1e-14, |m| m <= 1e-14)
}

/// Outcome of the random-data Fuchsian runs behind checks 5 and 6.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomRunSummary {
    pub seed: u64,
    pub gamma: f64,
    pub nonlinear: bool,
    pub max_step_increase: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub worst_bound_margin: f64,
    pub bound_holds: bool,
    pub steps: usize,
}

/// The `β₀` used for the random runs and any advisory about it.
pub fn beta0_for(cfg: &VerifyConfig, params: &PhysicalParams, nonlinear: bool) -> Result<(f64, Option<String>)> {
    let eps = if nonlinear { 1.0 } else { 0.0 };
    let bound = admissible_beta0(cfg.beta, params, cfg.sobolev_s, cfg.cs, cfg.cm, eps)?;
    Ok(match cfg.beta0 {
        None => (bound, None),
        Some(b) if b > bound => (
            b,
            Some(format!(
                "beta0 = {b} exceeds the admissible bound {bound:.6} (gamma {:.4}, eps {eps}); running anyway",
                params.gamma
            )),
        ),
        Some(b) => (b, None),
    })
}

pub fn random_run(
    cfg: &VerifyConfig,
    params: PhysicalParams,
    nonlinear: bool,
    seed: u64,
    beta0: f64,
) -> Result<RandomRunSummary> {
    let g = grid(cfg)?;
    let d = random_admissible_data(g, cfg.beta, beta0, cfg.sobolev_s, seed)?;
    let m = assemble_matrices(params.gamma, params.kappa_tilde())?;
    let s0 = to_fuchsian(&d, cfg.beta, &params)?;
    let mut fc = FuchsianConfig::new(params);
    fc.tau_min = cfg.tau_min;
    fc.nonlinear = nonlinear;
    fc.sobolev_s = cfg.sobolev_s;
    fc.ctrl = StepControl::with_tol(cfg.tol);
    fc.outputs = Outputs::EveryStep;
    let traj = integrate(&s0, &m, &fc)?;
    let bounds = verify_density_bounds(&traj, cfg.beta)?;
    Ok(RandomRunSummary {
        seed,
        gamma: params.gamma,
        nonlinear,
        max_step_increase: traj.max_energy_increase(),
        initial_energy: traj.energy_log[0].energy,
        final_energy: traj.energy_log.last().map(|e| e.energy).unwrap_or(f64::NAN),
        worst_bound_margin: bounds.worst_margin,
        bound_holds: bounds.holds,
        steps: traj.stats.accepted,
    })
}

/// Runs every random case of checks 5 and 6: `cfg.seeds` seeds, `γ ∈ {4/3,
/// 5/3}`, linear and nonlinear.
pub fn random_runs(cfg: &VerifyConfig) -> (Vec<Result<RandomRunSummary>>, Vec<String>) {
    let mut out = Vec::new();
    let mut advisories = Vec::new();
    for gamma in [4.0 / 3.0, 5.0 / 3.0] {
        let params = PhysicalParams { gamma, ..cfg.params };
        for nonlinear in [false, true] {
            let beta0 = match beta0_for(cfg, &params, nonlinear) {
                Ok((b, note)) => {
                    advisories.extend(note);
                    b
                }
                Err(e) => {
                    out.push(Err(e));
                    continue;
                }
            };
            for i in 0..cfg.seeds as u64 {
                out.push(random_run(cfg, params, nonlinear, cfg.seed.wrapping_add(i), beta0));
            }
        }
    }
    (out, advisories)
}

fn first_error(runs: &[Result<RandomRunSummary>]) -> Option<String> {
    runs.iter().find_map(|r| r.as_ref().err().map(|e| e.to_string()))
}

pub fn check_energy_monotonicity(runs: &[Result<RandomRunSummary>], seconds: f64) -> CheckResult {
    let timer = Timer::start();
    let outcome = match first_error(runs) {
        Some(e) => Err(e),
        None => {
            let ok: Vec<&RandomRunSummary> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
            let worst = ok.iter().map(|r| r.max_step_increase).fold(f64::NEG_INFINITY, f64::max);
            let grew = ok.iter().filter(|r| r.final_energy > r.initial_energy).count();
            // a final energy above the initial one fails the check outright
            let measured = if grew > 0 { f64::INFINITY } else { worst };
            Ok((measured, format!("{} runs, {grew} with final > initial energy", ok.len())))
        }
    };
    let mut c = finish(timer, 5, "H^s energy non-increasing", 300.0, outcome, 1e-8, |m| m <= 1e-8);
    c.seconds += seconds;
    c
}

pub fn check_density_sandwich(runs: &[Result<RandomRunSummary>]) -> CheckResult {
    let timer = Timer::start();
    let outcome = match first_error(runs) {
        Some(e) => Err(e),
        None => {
            let worst = runs
                .iter()
                .filter_map(|r| r.as_ref().ok())
                .map(|r| r.worst_bound_margin)
                .fold(f64::INFINITY, f64::min);
            Ok((worst, "smallest margin relative to beta t^(2/3)".to_string()))
        }
    };
    finish(timer, 6, "density sandwich bound", 300.0, outcome, 0.0, |m| m >= 0.0)
}

/// Direct and Fuchsian integrations of one linear mode at `t = 100`.
pub fn check_cross_solver(cfg: &VerifyConfig) -> CheckResult {
    let timer = Timer::start();
    let outcome = (|| -> Result<(f64, String)> {
        let g = grid(cfg)?;
        let d = single_mode_data(g, cfg.beta, [1, 0, 0], 0.1);
        let mut dc = DirectRunConfig::new(cfg.params, g, 100.0);
        dc.tol = cfg.tol;
        let direct = integrate_direct(&dc, &d)?.snapshots;
        let fuchs = fuchsian_density_run(&d, cfg, cfg.params, false, Vec::new(), 0.01)?;
        let cmp = compare_trajectories(&fuchs, &direct, &[100.0])?;
        Ok((cmp[0].rel_sup, format!("relative L2 {:.3e}", cmp[0].rel_l2)))
    })();
    finish(timer, 7, "direct vs Fuchsian agreement", 60.0, outcome, 1e-5, |m| m <= 1e-5)
}

/// `‖ϱ_nonlinear - ϱ_linear‖_{L²}` at `t = 10` for amplitudes
/// `10⁻², 5·10⁻³, 2.5·10⁻³, 1.25·10⁻³`.
pub fn nonlinear_gaps(cfg: &VerifyConfig, amplitudes: &[f64]) -> Result<Vec<f64>> {
    let g = grid(cfg)?;
    amplitudes
        .iter()
        .map(|&a| {
            let d = single_mode_data(g, cfg.beta, [1, 1, 0], a);
            let mut dc = DirectRunConfig::new(cfg.params, g, 10.0);
            dc.tol = cfg.tol.min(1e-11);
            let lin = integrate_direct(&dc, &d)?;
            dc.nonlinear = true;
            let nl = integrate_direct(&dc, &d)?;
            Ok(nl.final_state().rho.sub(&lin.final_state().rho).l2_norm())
        })
        .collect()
}

pub fn check_nonlinear_scaling(cfg: &VerifyConfig) -> CheckResult {
    let timer = Timer::start();
    let outcome = (|| -> Result<(f64, String)> {
        let gaps = nonlinear_gaps(cfg, &[1e-2, 5e-3, 2.5e-3, 1.25e-3])?;
        let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0] / w[1]).collect();
        let worst = ratios.iter().map(|r| (r - 4.0).abs()).fold(0.0, f64::max);
        Ok((worst, format!("ratios {ratios:.4?}")))
    })();
    finish(timer, 8, "O(amplitude^2) nonlinear gap", 120.0, outcome, 0.5, |m| m <= 0.5)
}

/// Parseval, the Laplacian eigenrelation and the transform round trip.
pub fn check_spectral_layer(cfg: &VerifyConfig) -> CheckResult {
    let timer = Timer::start();
    let outcome = (|| -> Result<(f64, String)> {
        let g = grid(cfg)?;
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(9));
        let mut parseval = 0.0f64;
        let mut roundtrip = 0.0f64;
        for _ in 0..5 {
            let samples: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = SpectralField::from_samples(g, &samples)?;
            let coeff_sum: f64 = f.coeffs().iter().map(|z| z.norm_sqr()).sum();
            let grid_mean = samples.iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
            parseval = parseval.max((coeff_sum - grid_mean).abs() / grid_mean);
            let back = f.samples();
            let err = back.iter().zip(&samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            roundtrip = roundtrip.max(err);
        }
        let small = TorusGrid::cube(8)?;
        let scale = small.wavenumber_scale();
        let mut eigen = 0.0f64;
        for idx in 0..small.len() {
            let k = small.mode(idx);
            let amp = num_complex::Complex64::new(0.3, -0.7);
            let f = SpectralField::plane_wave(small, k, amp)?;
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64 * scale * scale;
            let lap = f.laplacian();
            let expect = amp * (-k2);
            eigen = eigen.max((lap.coeff(k) - expect).norm() / amp.norm());
            let rest: f64 = lap.coeffs().iter().map(|z| z.norm()).sum::<f64>() - lap.coeff(k).norm();
            eigen = eigen.max(rest);
        }
        let w = random_band_limited(g, g.n() as f64 / 4.0, &mut rng);
        let d = DensityState::new(2.0, w.add_constant(1.0), w.scale(0.3).add_constant(0.1))?;
        let back = from_fuchsian(&to_fuchsian(&d, cfg.beta, &cfg.params)?)?;
        let fuchs = back.rho.sub(&d.rho).sup_norm().max(back.rho_t.sub(&d.rho_t).sup_norm());
        let worst = parseval.max(eigen).max(roundtrip).max(fuchs);
        Ok((
            worst,
            format!("parseval {parseval:.1e}, eigen {eigen:.1e}, fft {roundtrip:.1e}, fuchsian {fuchs:.1e}"),
        ))
    })();
    finish(timer, 9, "spectral layer", 5.0, outcome, 1e-12, |m| m <= 1e-12)
}

/// Friedmann residuals on a log grid of `t ∈ [1, 10⁴]`.
pub fn check_background_layer(cfg: &VerifyConfig) -> CheckResult {
    let timer = Timer::start();
    let outcome = (|| -> Result<(f64, String)> {
        let mut worst = 0.0f64;
        for params in [cfg.params, PhysicalParams::new(2.0, 0.5, 5.0 / 3.0)?] {
            for t in log_times(1.0, 1e4, 200) {
                let (r1, r2) = friedmann_residual(t, &params)?;
                let bg = background_state(t, &params)?;
                let (rho_dot, h_dot) = background_derivatives(t, &params);
                let s1 = rho_dot.abs().max(3.0 * bg.hubble * bg.rho0);
                let s2 = h_dot.abs().max(bg.hubble * bg.hubble);
                worst = worst.max(r1.abs() / s1).max(r2.abs() / s2);
            }
        }
        Ok((worst, String::new()))
    })();
    finish(timer, 10, "Friedmann residuals", 1.0, outcome, 1e-12, |m| m <= 1e-12)
}

/// Every check in order. Only an invalid configuration is an error.
pub fn run_all(cfg: &VerifyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let params = cfg.params;
    let (beta0_used, _) = beta0_for(cfg, &params, false)?;
    let mut checks = vec![
        check_growth_exponent(cfg),
        check_closed_form_oracle(cfg),
        check_jeans_criterion(cfg),
        check_matrix_algebra(cfg),
    ];
    let start = Instant::now();
    let (runs, advisories) = random_runs(cfg);
    let run_seconds = start.elapsed().as_secs_f64();
    checks.push(check_energy_monotonicity(&runs, run_seconds));
    checks.push(check_density_sandwich(&runs));
    checks.push(check_cross_solver(cfg));
    checks.push(check_nonlinear_scaling(cfg));
    checks.push(check_spectral_layer(cfg));
    checks.push(check_background_layer(cfg));
    Ok(VerifyReport {
        config: cfg.clone(),
        beta0_used,
        advisories,
        checks,
    })
}
