//! Time stepping of the Fuchsian system towards `τ = 0` and its energy.
//!
//! Steps are taken in `σ = -ln τ`, where the singular coefficient `1/τ`
//! becomes a constant and the spatial coefficient is `τ^{γ-4/3}`. Every
//! step is capped by the CFL limit `Δτ ≤ C·Δq / (√κ̃ τ^{γ-7/3})`, that is
//! `Δσ ≤ C·Δq / (√κ̃ τ^{γ-4/3})`.

use serde::{Deserialize, Serialize};

use super::{rhs_sigma, FuchsianState, SystemMatrices};
use crate::background::PhysicalParams;
use crate::ode::{self, Stats, StepControl};
use crate::spectral::TorusGrid;
use crate::{Error, Result};

/// Which states to keep besides the initial and the final one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outputs {
    EveryStep,
    /// Times in `(tau_min, τ₀)` the stepper lands on exactly.
    Taus(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuchsianConfig {
    pub params: PhysicalParams,
    pub tau_min: f64,
    pub nonlinear: bool,
    pub sobolev_s: f64,
    pub ctrl: StepControl,
    pub cfl: f64,
    pub outputs: Outputs,
}

impl FuchsianConfig {
    pub fn new(params: PhysicalParams) -> Self {
        FuchsianConfig {
            params,
            tau_min: 1e-2,
            nonlinear: false,
            sobolev_s: 3.0,
            ctrl: StepControl::with_tol(1e-8),
            cfl: 0.5,
            outputs: Outputs::Taus(Vec::new()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub tau: f64,
    /// `B⁰`-weighted `H^s` energy, see [`energy`].
    pub energy: f64,
    /// Plain sum of component norms, see [`energy_unweighted`].
    pub energy_unweighted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuchsianTrajectory {
    /// Stored states ordered by decreasing `τ`.
    pub snapshots: Vec<FuchsianState>,
    /// One entry for the initial state and one per accepted step.
    pub energy_log: Vec<EnergySample>,
    pub stats: Stats,
}

impl FuchsianTrajectory {
    /// Largest relative energy increase between consecutive accepted steps.
    pub fn max_energy_increase(&self) -> f64 {
        self.energy_log
            .windows(2)
            .map(|w| {
                if w[0].energy > 0.0 {
                    (w[1].energy - w[0].energy) / w[0].energy
                } else {
                    w[1].energy
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn final_state(&self) -> &FuchsianState {
        self.snapshots.last().expect("trajectory stores the final state")
    }
}

fn weights(grid: &TorusGrid, s: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let k = grid.mode(i);
            (1.0 + (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).powf(s)
        })
        .collect()
}

fn flat_energy(y: &[f64], w: &[f64], comp_weight: &[f64; 5]) -> f64 {
    let len = w.len();
    let mut total = 0.0;
    for (c, cw) in comp_weight.iter().enumerate() {
        let block = &y[2 * c * len..2 * (c + 1) * len];
        let sum: f64 = block
            .chunks_exact(2)
            .zip(w)
            .map(|(p, wk)| (p[0] * p[0] + p[1] * p[1]) * wk)
            .sum();
        total += cw * sum;
    }
    total.sqrt()
}

fn component_weights(kappa_tilde: f64) -> [f64; 5] {
    [1.0, kappa_tilde, kappa_tilde, kappa_tilde, 1.0]
}

/// `H^s` energy weighted by `B⁰ = diag(1, κ̃, κ̃, κ̃, 1)`:
/// `(‖u₀‖² + κ̃ Σᵢ‖uᵢ‖² + ‖u‖²)^{1/2}` with Fourier-side norms.
///
/// This is the quantity the symmetric hyperbolic structure controls: the
/// spatial terms cancel from its derivative exactly.
pub fn energy(s: &FuchsianState, sobolev_s: f64, kappa_tilde: f64) -> f64 {
    let cw = component_weights(kappa_tilde);
    s.components()
        .iter()
        .zip(cw)
        .map(|(c, w)| w * c.sobolev_norm_sq(sobolev_s))
        .sum::<f64>()
        .sqrt()
}

/// `(Σ_c ‖U_c‖²_{H^s})^{1/2}` without the `B⁰` weight.
pub fn energy_unweighted(s: &FuchsianState, sobolev_s: f64) -> f64 {
    s.components()
        .iter()
        .map(|c| c.sobolev_norm_sq(sobolev_s))
        .sum::<f64>()
        .sqrt()
}

/// Advance `s0` from its `τ` down to `cfg.tau_min`.
pub fn integrate(
    s0: &FuchsianState,
    m: &SystemMatrices,
    cfg: &FuchsianConfig,
) -> Result<FuchsianTrajectory> {
    let params = cfg.params;
    params.validate()?;
    if !(cfg.tau_min > 0.0 && cfg.tau_min < s0.tau) {
        return Err(Error::invalid("tau_min", cfg.tau_min, "must lie in (0, tau0)"));
    }
    if !(s0.tau > 0.0 && s0.tau <= 1.0) {
        return Err(Error::invalid("tau", s0.tau, "must lie in (0, 1]"));
    }
    if !(cfg.cfl > 0.0) {
        return Err(Error::invalid("cfl", cfg.cfl, "must be positive"));
    }
    if cfg.nonlinear {
        s0.check_denominator()?;
    }
    let grid = *s0.grid();
    let beta = s0.beta;
    let kt = params.kappa_tilde();
    let w = weights(&grid, cfg.sobolev_s);
    let cw = component_weights(kt);
    let ones = [1.0; 5];

    let sigma0 = -s0.tau.ln();
    let sigma_end = -cfg.tau_min.ln();
    let stops: Vec<f64> = match &cfg.outputs {
        Outputs::EveryStep => Vec::new(),
        Outputs::Taus(taus) => taus.iter().map(|t| -t.ln()).collect(),
    };
    let every = matches!(cfg.outputs, Outputs::EveryStep);

    let y0 = s0.to_flat();
    let mut snapshots = vec![s0.clone()];
    let mut energy_log = vec![EnergySample {
        tau: s0.tau,
        energy: flat_energy(&y0, &w, &cw),
        energy_unweighted: flat_energy(&y0, &w, &ones),
    }];

    let speed = kt.sqrt();
    let dq = grid.spacing();
    let exponent = params.gamma - 4.0 / 3.0;
    let cfl = cfg.cfl;
    let stable = |sigma: f64| {
        let tau = (-sigma).exp();
        cfl * dq / (speed * tau.powf(exponent))
    };

    let result = ode::integrate(
        |sigma, y, dy| {
            let tau = (-sigma).exp();
            let state = FuchsianState::from_flat(grid, tau, beta, y);
            let rate = rhs_sigma(&state, m, &params, cfg.nonlinear)?;
            let len = grid.len();
            for (c, f) in rate.iter().enumerate() {
                for (i, z) in f.coeffs().iter().enumerate() {
                    dy[2 * (c * len + i)] = z.re;
                    dy[2 * (c * len + i) + 1] = z.im;
                }
            }
            Ok(())
        },
        sigma0,
        &y0,
        sigma_end,
        &cfg.ctrl,
        &stops,
        stable,
        |sigma, y, stop| {
            let tau = (-sigma).exp();
            let e = flat_energy(y, &w, &cw);
            if !e.is_finite() {
                return Err(Error::EnergyOverflow(tau));
            }
            energy_log.push(EnergySample {
                tau,
                energy: e,
                energy_unweighted: flat_energy(y, &w, &ones),
            });
            if every || stop {
                let tau = if sigma >= sigma_end { cfg.tau_min } else { tau };
                snapshots.push(FuchsianState::from_flat(grid, tau, beta, y));
            }
            Ok(())
        },
    );
    // report reached times as τ rather than σ
    let (_, stats) = result.map_err(|e| match e {
        Error::CflUnderflow { reached, bound } => Error::CflUnderflow {
            reached: (-reached).exp(),
            bound,
        },
        Error::StepSizeUnderflow { reached, h } => Error::StepSizeUnderflow {
            reached: (-reached).exp(),
            h,
        },
        Error::MaxSteps { reached } => Error::MaxSteps {
            reached: (-reached).exp(),
        },
        other => other,
    })?;
    Ok(FuchsianTrajectory {
        snapshots,
        energy_log,
        stats,
    })
}
