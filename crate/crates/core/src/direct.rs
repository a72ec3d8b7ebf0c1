//! Method-of-lines integration of the second-order density equation in
//! physical time,
//!
//! ```text
//! ϱ_tt = -(4/(3t)) ϱ_t + κ̃ t^{-2γ+2/3} Δϱ + (2/(3t²)) ϱ
//!        + ε (γ-1) κ̃ t^{-2γ+2/3} |∇ϱ|² / (1+ϱ)
//! ```
//!
//! It shares nothing with the Fuchsian path beyond the spectral toolbox and
//! the time stepper, which makes it usable as an independent check.

use serde::{Deserialize, Serialize};

use crate::background::PhysicalParams;
use crate::fuchsian::{unflatten, DensityState};
use crate::ode::{self, Stats, StepControl};
use crate::spectral::{SpectralField, TorusGrid};
use crate::{Error, Result};

/// Smallest admissible value of `1 + ϱ` in nonlinear runs.
pub const POSITIVITY_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectRunConfig {
    pub params: PhysicalParams,
    pub beta: f64,
    pub t_end: f64,
    pub nonlinear: bool,
    pub grid: TorusGrid,
    pub tol: f64,
    pub cfl: f64,
    /// Output times in `(1, t_end)`; the initial and final states are always
    /// stored.
    pub times: Vec<f64>,
    /// Uniform steps without error control, for convergence studies.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
}

impl DirectRunConfig {
    pub fn new(params: PhysicalParams, grid: TorusGrid, t_end: f64) -> Self {
        DirectRunConfig {
            params,
            beta: 1.0,
            t_end,
            nonlinear: false,
            grid,
            tol: 1e-10,
            cfl: 0.5,
            times: Vec::new(),
            fixed_step: None,
            max_steps: 2_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.t_end > 1.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end", self.t_end, "must exceed 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", self.tol, "must be positive"));
        }
        if !(self.cfl > 0.0) {
            return Err(Error::invalid("cfl", self.cfl, "must be positive"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::invalid("beta", self.beta, "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectTrajectory {
    /// Stored states in increasing time.
    pub snapshots: Vec<DensityState>,
    pub stats: Stats,
}

impl DirectTrajectory {
    pub fn final_state(&self) -> &DensityState {
        self.snapshots.last().expect("trajectory stores the final state")
    }
}

fn check_floor(rho: &SpectralField, t: f64) -> Result<()> {
    for (index, v) in rho.samples().into_iter().enumerate() {
        let value = 1.0 + v;
        if !(value >= POSITIVITY_FLOOR) {
            return Err(Error::Positivity { index, value, time: t });
        }
    }
    Ok(())
}

fn second_derivative(
    t: f64,
    rho: &SpectralField,
    rho_t: &SpectralField,
    params: &PhysicalParams,
    nonlinear: bool,
) -> Result<SpectralField> {
    let kt = params.kappa_tilde();
    let wave = kt * t.powf(-2.0 * params.gamma + 2.0 / 3.0);
    let mut out = rho_t
        .scale(-4.0 / (3.0 * t))
        .axpy(wave, &rho.laplacian())
        .axpy(2.0 / (3.0 * t * t), rho);
    if nonlinear {
        check_floor(rho, t)?;
        let g = rho.gradient();
        let q = g[0].product(&g[0]).add(&g[1].product(&g[1])).add(&g[2].product(&g[2]));
        let den = rho.samples();
        let vals: Vec<f64> = q
            .samples()
            .iter()
            .zip(&den)
            .map(|(qv, r)| qv / (1.0 + r))
            .collect();
        let quotient = SpectralField::from_samples(*rho.grid(), &vals)?;
        out = out.axpy((params.gamma - 1.0) * wave, &quotient);
    }
    Ok(out)
}

/// `(∂_tϱ, ∂_t²ϱ)` at the state `d`.
pub fn direct_rhs(
    d: &DensityState,
    params: &PhysicalParams,
    nonlinear: bool,
) -> Result<(SpectralField, SpectralField)> {
    params.validate()?;
    let tt = second_derivative(d.t, &d.rho, &d.rho_t, params, nonlinear)?;
    Ok((d.rho_t.clone(), tt))
}

fn to_flat(d: &DensityState) -> Vec<f64> {
    let mut out = Vec::with_capacity(4 * d.grid().len());
    for f in [&d.rho, &d.rho_t] {
        for z in f.coeffs() {
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

fn from_flat(grid: TorusGrid, t: f64, y: &[f64]) -> DensityState {
    let [rho, rho_t] = unflatten::<2>(grid, y);
    DensityState { t, rho, rho_t }
}

/// Advance `initial` (at `t = 1`) to `cfg.t_end`.
///
/// Steps are capped by `Δt ≤ C·Δq / (√κ̃ t^{1/3-γ})`.
pub fn integrate_direct(cfg: &DirectRunConfig, initial: &DensityState) -> Result<DirectTrajectory> {
    cfg.validate()?;
    if initial.t != 1.0 {
        return Err(Error::invalid("t", initial.t, "initial state must sit at t = 1"));
    }
    if *initial.grid() != cfg.grid {
        return Err(Error::GridMismatch);
    }
    if cfg.nonlinear {
        check_floor(&initial.rho, 1.0)?;
    }
    let grid = cfg.grid;
    let params = cfg.params;
    let len = grid.len();
    let speed = params.kappa_tilde().sqrt();
    let dq = grid.spacing();
    let exponent = 1.0 / 3.0 - params.gamma;
    let cfl = cfg.cfl;
    let ctrl = StepControl {
        fixed_step: cfg.fixed_step,
        max_steps: cfg.max_steps,
        ..StepControl::with_tol(cfg.tol)
    };

    let mut snapshots = vec![initial.clone()];
    let (_, stats) = ode::integrate(
        |t, y, dy| {
            let [rho, rho_t] = unflatten::<2>(grid, y);
            let tt = second_derivative(t, &rho, &rho_t, &params, cfg.nonlinear)?;
            dy[..2 * len].copy_from_slice(&y[2 * len..]);
            for (i, z) in tt.coeffs().iter().enumerate() {
                dy[2 * (len + i)] = z.re;
                dy[2 * (len + i) + 1] = z.im;
            }
            Ok(())
        },
        1.0,
        &to_flat(initial),
        cfg.t_end,
        &ctrl,
        &cfg.times,
        |t| cfl * dq / (speed * t.powf(exponent)),
        |t, y, stop| {
            if stop {
                snapshots.push(from_flat(grid, t, y));
            }
            Ok(())
        },
    )?;
    Ok(DirectTrajectory { snapshots, stats })
}

/// Errors of one trajectory against a reference at a single time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonPoint {
    pub t: f64,
    /// `‖a - b‖_{L²} / ‖b‖_{L²}`.
    pub rel_l2: f64,
    /// `‖a - b‖_∞ / ‖b‖_∞`.
    pub rel_sup: f64,
}

/// `ϱ` at time `t` by cubic Hermite interpolation on the bracketing
/// snapshots, using both `ϱ` and `∂_tϱ`.
pub fn interpolate_density(states: &[DensityState], t: f64) -> Result<SpectralField> {
    let (start, end) = match (states.first(), states.last()) {
        (Some(a), Some(b)) => (a.t.min(b.t), a.t.max(b.t)),
        _ => {
            return Err(Error::TimeOutOfRange {
                t,
                start: f64::NAN,
                end: f64::NAN,
            })
        }
    };
    let slack = 1e-12 * end.abs().max(1.0);
    if !(t >= start - slack && t <= end + slack) {
        return Err(Error::TimeOutOfRange { t, start, end });
    }
    let mut sorted: Vec<&DensityState> = states.iter().collect();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    if let Some(exact) = sorted.iter().find(|d| (d.t - t).abs() <= slack) {
        return Ok(exact.rho.clone());
    }
    let j = sorted.partition_point(|d| d.t < t).clamp(1, sorted.len() - 1);
    let (a, b) = (sorted[j - 1], sorted[j]);
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
    let h10 = s * s * s - 2.0 * s * s + s;
    let h01 = -2.0 * s * s * s + 3.0 * s * s;
    let h11 = s * s * s - s * s;
    Ok(a.rho
        .scale(h00)
        .axpy(h10 * h, &a.rho_t)
        .axpy(h01, &b.rho)
        .axpy(h11 * h, &b.rho_t))
}

/// Relative `L²` and sup errors of `a` against the reference `b` at each of
/// `times`.
pub fn compare_trajectories(
    a: &[DensityState],
    b: &[DensityState],
    times: &[f64],
) -> Result<Vec<ComparisonPoint>> {
    if let (Some(x), Some(y)) = (a.first(), b.first()) {
        if x.grid() != y.grid() {
            return Err(Error::GridMismatch);
        }
    }
    times
        .iter()
        .map(|&t| {
            let fa = interpolate_density(a, t)?;
            let fb = interpolate_density(b, t)?;
            let diff = fa.sub(&fb);
            let rel = |num: f64, den: f64| if den > 0.0 { num / den } else { num };
            Ok(ComparisonPoint {
                t,
                rel_l2: rel(diff.l2_norm(), fb.l2_norm()),
                rel_sup: rel(diff.sup_norm(), fb.sup_norm()),
            })
        })
        .collect()
}
