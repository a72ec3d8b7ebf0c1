//! Fuchsian formulation of the (slightly nonlinear) Jeans equation.
//!
//! With `τ = 1/t` and a background amplitude `β > 0`, the density `ϱ` is
//! traded for the rescaled deviations from the growing background mode
//! `(β/2) t^{2/3}`:
//!
//! ```text
//! u  = (√6/3) t^{-2/3} ϱ - (√6/6) β
//! u₀ = t^{1/3} ∂_tϱ - β/3
//! uᵢ = t^{2/3-γ} ∂ᵢϱ
//! ```
//!
//! The background itself maps to `U = 0`. In these variables the equation
//! becomes a symmetric hyperbolic system with a singular `1/τ` damping term
//! whose energy does not grow as `τ → 0`.

mod bounds;
mod matrices;
mod solver;

use num_complex::Complex64;

use crate::background::PhysicalParams;
use crate::spectral::{SpectralField, TorusGrid};
use crate::{Error, Result};

pub use bounds::{
    admissible_beta0, density_bound_report, lambda0, snapshot_margin, verify_density_bounds,
    DensityBoundReport, SnapshotMargin,
};
pub use matrices::{assemble_matrices, matmul, max_abs_diff, transpose, IdentityDefects, Mat5, SystemMatrices};
pub use solver::{
    energy, energy_unweighted, integrate, EnergySample, FuchsianConfig, FuchsianTrajectory, Outputs,
};

const SQRT6: f64 = 2.449_489_742_783_178;

/// Density perturbation and its time derivative at physical time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub t: f64,
    pub rho: SpectralField,
    pub rho_t: SpectralField,
}

impl DensityState {
    pub fn new(t: f64, rho: SpectralField, rho_t: SpectralField) -> Result<Self> {
        if t.is_nan() || t < 1.0 {
            return Err(Error::TimeBeforeOrigin(t));
        }
        if rho.grid() != rho_t.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(DensityState { t, rho, rho_t })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.rho.grid()
    }
}

/// The five rescaled fields at time `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuchsianState {
    pub tau: f64,
    pub u0: SpectralField,
    pub ui: [SpectralField; 3],
    pub u: SpectralField,
    pub beta: f64,
}

impl FuchsianState {
    pub fn zeros(grid: TorusGrid, tau: f64, beta: f64) -> Self {
        let z = SpectralField::zeros(grid);
        FuchsianState {
            tau,
            u0: z.clone(),
            ui: [z.clone(), z.clone(), z.clone()],
            u: z,
            beta,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.u.grid()
    }

    /// Components in system order `(u₀, u₁, u₂, u₃, u)`.
    pub fn components(&self) -> [&SpectralField; 5] {
        [&self.u0, &self.ui[0], &self.ui[1], &self.ui[2], &self.u]
    }

    pub fn from_components(tau: f64, beta: f64, c: [SpectralField; 5]) -> Self {
        let [u0, u1, u2, u3, u] = c;
        FuchsianState {
            tau,
            u0,
            ui: [u1, u2, u3],
            u,
            beta,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let c = self.components().map(|f| f.scale(a));
        Self::from_components(self.tau, self.beta, c)
    }

    /// Grid values of `√6 u + β + 2τ^{2/3}`, the denominator of the
    /// nonlinear term.
    pub fn denominator(&self) -> Vec<f64> {
        let shift = self.beta + 2.0 * self.tau.powf(2.0 / 3.0);
        self.u.samples().into_iter().map(|v| SQRT6 * v + shift).collect()
    }

    /// Fails with the offending grid point when the denominator is not
    /// positive everywhere.
    pub fn check_denominator(&self) -> Result<()> {
        check_positive(&self.denominator(), self.tau)
    }

    /// Flatten to interleaved `(re, im)` pairs, component-major.
    pub(crate) fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(10 * self.grid().len());
        for c in self.components() {
            for z in c.coeffs() {
                out.push(z.re);
                out.push(z.im);
            }
        }
        out
    }

    pub(crate) fn from_flat(grid: TorusGrid, tau: f64, beta: f64, y: &[f64]) -> Self {
        let c = unflatten::<5>(grid, y);
        Self::from_components(tau, beta, c)
    }
}

pub(crate) fn check_positive(values: &[f64], time: f64) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::Positivity { index, value, time });
        }
    }
    Ok(())
}

pub(crate) fn unflatten<const N: usize>(grid: TorusGrid, y: &[f64]) -> [SpectralField; N] {
    let len = grid.len();
    std::array::from_fn(|c| {
        let block = &y[2 * c * len..2 * (c + 1) * len];
        let coeffs = block
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        SpectralField::from_coeffs(grid, coeffs).expect("block length matches grid")
    })
}

pub fn to_fuchsian(d: &DensityState, beta: f64, params: &PhysicalParams) -> Result<FuchsianState> {
    params.validate()?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", beta, "must be positive"));
    }
    if d.t.is_nan() || d.t < 1.0 {
        return Err(Error::TimeBeforeOrigin(d.t));
    }
    let t = d.t;
    let u = d
        .rho
        .scale(SQRT6 / 3.0 * t.powf(-2.0 / 3.0))
        .add_constant(-SQRT6 / 6.0 * beta);
    let u0 = d.rho_t.scale(t.cbrt()).add_constant(-beta / 3.0);
    let gscale = t.powf(2.0 / 3.0 - params.gamma);
    let ui = d.rho.gradient().map(|g| g.scale(gscale));
    Ok(FuchsianState {
        tau: 1.0 / t,
        u0,
        ui,
        u,
        beta,
    })
}

/// Inverse of [`to_fuchsian`]; `uᵢ` is redundant and not used.
pub fn from_fuchsian(s: &FuchsianState) -> Result<DensityState> {
    if !(s.tau > 0.0 && s.tau <= 1.0) {
        return Err(Error::invalid("tau", s.tau, "must lie in (0, 1]"));
    }
    let t = 1.0 / s.tau;
    let rho = s
        .u
        .scale(3.0 / SQRT6)
        .add_constant(s.beta / 2.0)
        .scale(t.powf(2.0 / 3.0));
    let rho_t = s.u0.add_constant(s.beta / 3.0).scale(t.powf(-1.0 / 3.0));
    DensityState::new(t, rho, rho_t)
}

/// Nonlinear source `H₀ = -2κ̃(γ-1) δ^{ij}uᵢuⱼ / (√6 u + β + 2τ^{2/3})`.
///
/// The quadratic form is dealiased when the grid asks for it; the quotient
/// is formed pointwise.
pub fn nonlinear_source(s: &FuchsianState, params: &PhysicalParams) -> Result<SpectralField> {
    let kt = params.kappa_tilde();
    let q = s.ui[0]
        .product(&s.ui[0])
        .add(&s.ui[1].product(&s.ui[1]))
        .add(&s.ui[2].product(&s.ui[2]));
    let den = s.denominator();
    check_positive(&den, s.tau)?;
    let coef = -2.0 * kt * (params.gamma - 1.0);
    let vals: Vec<f64> = q
        .samples()
        .iter()
        .zip(&den)
        .map(|(qv, dv)| coef * qv / dv)
        .collect();
    SpectralField::from_samples(*s.grid(), &vals)
}

/// Right-hand side in `σ = -ln τ`:
/// `∂_σU = (B⁰)⁻¹ [τ^{γ-4/3} Bⁱ ∂ᵢU - 𝓑ℙU - εH]`.
pub(crate) fn rhs_sigma(
    s: &FuchsianState,
    m: &SystemMatrices,
    params: &PhysicalParams,
    nonlinear: bool,
) -> Result<[SpectralField; 5]> {
    let comps = s.components();
    let grid = *s.grid();
    let spatial_coef = s.tau.powf(params.gamma - 4.0 / 3.0);
    let bp = m.singular_coefficient();
    let b0_inv = m.b0_inv();
    let mut out: [SpectralField; 5] = std::array::from_fn(|_| SpectralField::zeros(grid));

    for (axis, b) in m.bi.iter().enumerate() {
        for col in 0..5 {
            if (0..5).all(|row| b[row][col] == 0.0) {
                continue;
            }
            let d = comps[col].derivative(axis);
            for row in 0..5 {
                if b[row][col] != 0.0 {
                    out[row] = out[row].axpy(spatial_coef * b[row][col], &d);
                }
            }
        }
    }
    for row in 0..5 {
        for col in 0..5 {
            if bp[row][col] != 0.0 {
                out[row] = out[row].axpy(-bp[row][col], comps[col]);
            }
        }
    }
    if nonlinear {
        let h0 = nonlinear_source(s, params)?;
        out[0] = out[0].sub(&h0);
    }
    for (row, f) in out.iter_mut().enumerate() {
        *f = f.scale(b0_inv[row][row]);
    }
    Ok(out)
}

/// `∂_τU` for the linear (`nonlinear = false`) or nonlinear system,
/// components ordered `(u₀, u₁, u₂, u₃, u)`.
pub fn rhs(
    s: &FuchsianState,
    m: &SystemMatrices,
    params: &PhysicalParams,
    nonlinear: bool,
) -> Result<[SpectralField; 5]> {
    let ds = rhs_sigma(s, m, params, nonlinear)?;
    let factor = -1.0 / s.tau;
    Ok(ds.map(|f| f.scale(factor)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> TorusGrid {
        TorusGrid::cube(8).unwrap()
    }

    fn sample_state() -> FuchsianState {
        let g = grid();
        FuchsianState {
            tau: 0.6,
            u0: SpectralField::from_fn(g, |q| 0.02 * q[0].sin() + 0.01),
            ui: [
                SpectralField::from_fn(g, |q| 0.03 * (q[1] + q[2]).cos()),
                SpectralField::from_fn(g, |q| -0.01 * q[0].cos()),
                SpectralField::from_fn(g, |q| 0.02 * (2.0 * q[2]).sin()),
            ],
            u: SpectralField::from_fn(g, |q| 0.05 * (q[0] - q[1]).cos()),
            beta: 1.0,
        }
    }

    #[test]
    fn background_maps_to_origin() {
        let g = grid();
        let params = PhysicalParams::default();
        let beta = 1.3;
        for t in [1.0, 4.0, 30.0] {
            let d = DensityState::new(
                t,
                SpectralField::constant(g, beta / 2.0 * t.powf(2.0 / 3.0)),
                SpectralField::constant(g, beta / 3.0 * t.powf(-1.0 / 3.0)),
            )
            .unwrap();
            let s = to_fuchsian(&d, beta, &params).unwrap();
            for c in s.components() {
                assert!(c.sobolev_norm(0.0) < 1e-15);
            }
        }
    }

    #[test]
    fn constant_density_example() {
        let g = grid();
        let d = DensityState::new(1.0, SpectralField::constant(g, 0.6), SpectralField::zeros(g)).unwrap();
        let s = to_fuchsian(&d, 1.0, &PhysicalParams::default()).unwrap();
        assert_relative_eq!(s.u.mean(), SQRT6 / 3.0 * 0.6 - SQRT6 / 6.0, max_relative = 1e-14);
        assert!((s.u.mean() - 0.08165).abs() < 1e-5);
    }

    #[test]
    fn round_trip() {
        let g = grid();
        let params = PhysicalParams::new(1.0, 1.0, 1.6).unwrap();
        let d = DensityState::new(
            3.0,
            SpectralField::from_fn(g, |q| 1.0 + 0.1 * q[0].cos() * q[2].sin()),
            SpectralField::from_fn(g, |q| 0.2 - 0.1 * q[1].sin()),
        )
        .unwrap();
        let back = from_fuchsian(&to_fuchsian(&d, 0.8, &params).unwrap()).unwrap();
        assert_relative_eq!(back.t, 3.0, max_relative = 1e-15);
        assert!(back.rho.sub(&d.rho).sup_norm() < 1e-12);
        assert!(back.rho_t.sub(&d.rho_t).sup_norm() < 1e-12);
    }

    #[test]
    fn origin_is_stationary() {
        let params = PhysicalParams::default();
        let m = assemble_matrices(params.gamma, params.kappa_tilde()).unwrap();
        let s = FuchsianState::zeros(grid(), 0.3, 1.0);
        for nl in [false, true] {
            for c in rhs(&s, &m, &params, nl).unwrap() {
                assert!(c.coeffs().iter().all(|z| *z == Complex64::new(0.0, 0.0)));
            }
        }
    }

    #[test]
    fn nonlinear_source_example() {
        // γ = 4/3, κ̃ = 1/2 requires κ = (1/2)(3/4)(6πG)^{1/3}
        let kappa = 0.5 * 0.75 * (6.0 * std::f64::consts::PI).cbrt();
        let params = PhysicalParams::new(1.0, kappa, 4.0 / 3.0).unwrap();
        assert_relative_eq!(params.kappa_tilde(), 0.5, max_relative = 1e-14);
        let g = grid();
        let mut s = FuchsianState::zeros(g, 1.0, 1.0);
        s.ui[0] = SpectralField::constant(g, 0.1);
        let h0 = nonlinear_source(&s, &params).unwrap();
        assert_relative_eq!(h0.mean(), -2.0 * 0.5 * (1.0 / 3.0) * 0.01 / 3.0, max_relative = 1e-12);
        assert!((h0.mean() + 1.1111e-3).abs() < 1e-7);

        let m = assemble_matrices(params.gamma, 0.5).unwrap();
        let r = rhs(&s, &m, &params, true).unwrap();
        assert_relative_eq!(r[0].mean(), h0.mean(), max_relative = 1e-12);
    }

    #[test]
    fn matrix_form_matches_component_equations() {
        let params = PhysicalParams::new(1.0, 0.7, 1.5).unwrap();
        let kt = params.kappa_tilde();
        let gamma = params.gamma;
        let m = assemble_matrices(gamma, kt).unwrap();
        let s = sample_state();
        let tau = s.tau;
        let p = tau.powf(gamma - 7.0 / 3.0);
        for nl in [false, true] {
            let r = rhs(&s, &m, &params, nl).unwrap();
            let div = crate::spectral::divergence(&s.ui);
            let mut du0 = div
                .scale(-kt * p)
                .add(&s.u0.axpy(-SQRT6 / 3.0, &s.u).scale(1.0 / tau));
            if nl {
                du0 = du0.axpy(1.0 / tau, &nonlinear_source(&s, &params).unwrap());
            }
            assert!(r[0].sub(&du0).sup_norm() < 1e-13);
            for i in 0..3 {
                let dui = s.u0
                    .derivative(i)
                    .scale(-p)
                    .axpy((gamma - 2.0 / 3.0) / tau, &s.ui[i]);
                assert!(r[i + 1].sub(&dui).sup_norm() < 1e-13);
            }
            let du = s.u.scale(2.0 / 3.0).axpy(-SQRT6 / 3.0, &s.u0).scale(1.0 / tau);
            assert!(r[4].sub(&du).sup_norm() < 1e-13);
        }
    }

    #[test]
    fn denominator_violation_is_reported() {
        let g = grid();
        let mut s = FuchsianState::zeros(g, 1.0, 0.1);
        s.u = SpectralField::from_fn(g, |q| if q[0] > 3.0 { -5.0 } else { 0.0 });
        s.ui[0] = SpectralField::constant(g, 0.1);
        let params = PhysicalParams::default();
        match nonlinear_source(&s, &params) {
            Err(Error::Positivity { value, .. }) => assert!(value < 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flat_round_trip() {
        let s = sample_state();
        let back = FuchsianState::from_flat(grid(), s.tau, s.beta, &s.to_flat());
        assert_eq!(back, s);
    }
}
