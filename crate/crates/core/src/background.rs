//! Exact homogeneous expanding background.
//!
//! The background is the matter-dominated solution of the mass-conservation
//! and Friedmann equations with time origin `t = 1` and `a(1) = 1`:
//!
//! ```text
//! ρ₀ = 1 / (6πG t²),   H = 2 / (3t),   a = t^{2/3},   p₀ = κ ρ₀^γ
//! ```
//!
//! Spatial derivatives elsewhere in the crate are taken in comoving
//! coordinates `q` with `x = a(t) q`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Gravitational constant and polytropic equation of state `p = κ ρ^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalParams {
    pub big_g: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            big_g: 1.0,
            kappa: 1.0,
            gamma: 4.0 / 3.0,
        }
    }
}

impl PhysicalParams {
    pub fn new(big_g: f64, kappa: f64, gamma: f64) -> Result<Self> {
        let params = PhysicalParams {
            big_g,
            kappa,
            gamma,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.big_g > 0.0 && self.big_g.is_finite()) {
            return Err(Error::invalid("G", self.big_g, "must be positive"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("kappa", self.kappa, "must be positive"));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", self.gamma, "must exceed 1"));
        }
        Ok(())
    }

    /// `κ̃ = γκ (1/(6πG))^{γ-1}`, the coefficient of the pressure term
    /// after linearisation around the background.
    pub fn kappa_tilde(&self) -> f64 {
        self.gamma * self.kappa * (1.0 / (6.0 * PI * self.big_g)).powf(self.gamma - 1.0)
    }

    /// Eigenvalue threshold `-(6πG)^{1/3} / (2κ)` of the Jeans criterion at
    /// `γ = 4/3`: modes with `λ` strictly above it grow.
    pub fn jeans_threshold(&self) -> f64 {
        -(6.0 * PI * self.big_g).cbrt() / (2.0 * self.kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BackgroundState {
    pub t: f64,
    pub rho0: f64,
    pub hubble: f64,
    pub a: f64,
    pub p0: f64,
    pub kappa_tilde: f64,
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 1.0 {
        return Err(Error::TimeBeforeOrigin(t));
    }
    Ok(())
}

pub fn background_state(t: f64, params: &PhysicalParams) -> Result<BackgroundState> {
    check_time(t)?;
    params.validate()?;
    let rho0 = 1.0 / (6.0 * PI * params.big_g * t * t);
    Ok(BackgroundState {
        t,
        rho0,
        hubble: 2.0 / (3.0 * t),
        a: t.powf(2.0 / 3.0),
        p0: params.kappa * rho0.powf(params.gamma),
        kappa_tilde: params.kappa_tilde(),
    })
}

/// Residuals of `ρ̇₀ + 3Hρ₀ = 0` and `Ḣ + H² + (4πG/3)ρ₀ = 0`, evaluated with
/// the analytic time derivatives of the closed forms.
pub fn friedmann_residual(t: f64, params: &PhysicalParams) -> Result<(f64, f64)> {
    let bg = background_state(t, params)?;
    let (rho_dot, h_dot) = background_derivatives(t, params);
    let r1 = rho_dot + 3.0 * bg.hubble * bg.rho0;
    let r2 = h_dot + bg.hubble * bg.hubble + 4.0 * PI * params.big_g / 3.0 * bg.rho0;
    Ok((r1, r2))
}

/// `(ρ̇₀, Ḣ)` from differentiating the closed forms.
pub fn background_derivatives(t: f64, params: &PhysicalParams) -> (f64, f64) {
    let rho_dot = -2.0 / (6.0 * PI * params.big_g * t * t * t);
    let h_dot = -2.0 / (3.0 * t * t);
    (rho_dot, h_dot)
}

/// Background potential `φ₀ = (2/3)πGρ₀|x|²` at a point of physical space.
///
/// It grows quadratically in `|x|` and has no periodic counterpart, so it is
/// only ever evaluated pointwise.
pub fn background_potential(t: f64, x: [f64; 3], params: &PhysicalParams) -> Result<f64> {
    let bg = background_state(t, params)?;
    let r2: f64 = x.iter().map(|c| c * c).sum();
    Ok(2.0 / 3.0 * PI * params.big_g * bg.rho0 * r2)
}
