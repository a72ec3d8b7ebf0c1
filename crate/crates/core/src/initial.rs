//! Initial data at `t = 1` near the growing background `ϱ = β/2`,
//! `∂_tϱ = β/3`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::fuchsian::DensityState;
use crate::spectral::{SpectralField, TorusGrid};
use crate::{Error, Result};

/// `‖ϱ̊ - β/2‖_{H^s} + ‖ϱ̊₀ - β/3‖_{H^s} + ‖∇ϱ̊‖_{H^s}`, the gradient norm
/// taken as `(Σᵢ ‖∂ᵢϱ̊‖²_{H^s})^{1/2}`.
pub fn data_norm(d: &DensityState, beta: f64, s: f64) -> f64 {
    let a = d.rho.add_constant(-beta / 2.0).sobolev_norm(s);
    let b = d.rho_t.add_constant(-beta / 3.0).sobolev_norm(s);
    let c = d
        .rho
        .gradient()
        .iter()
        .map(|g| g.sobolev_norm_sq(s))
        .sum::<f64>()
        .sqrt();
    a + b + c
}

/// Real field with random coefficients on `|k| ≤ k_max` (Euclidean norm of
/// the integer index), damped like `(1+|k|²)^{-1}`. Nyquist modes are left
/// empty since they have no conjugate partner on the grid.
pub fn random_band_limited<R: Rng>(grid: TorusGrid, k_max: f64, rng: &mut R) -> SpectralField {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    let nyquist = -(grid.n() as i64 / 2);
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let k = grid.mode(idx);
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        if k2.sqrt() <= k_max && !k.contains(&nyquist) {
            let damp = 1.0 / (1.0 + k2);
            *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * damp;
        }
    }
    // symmetrise so the field is real
    let mut sym = coeffs.clone();
    for (idx, c) in sym.iter_mut().enumerate() {
        let k = grid.mode(idx);
        let partner = grid
            .lattice_index([-k[0], -k[1], -k[2]])
            .map(|j| coeffs[j].conj())
            .unwrap_or(Complex64::new(0.0, 0.0));
        *c = 0.5 * (coeffs[idx] + partner);
    }
    SpectralField::from_coeffs(grid, sym).expect("length matches grid")
}

/// Random data `ϱ̊ = β/2 + w`, `ϱ̊₀ = β/3 + w₀` with `w`, `w₀` band-limited
/// to `|k| ≤ n/4` and scaled so that [`data_norm`] equals `beta0` exactly.
/// The same seed always produces the same data.
pub fn random_admissible_data(
    grid: TorusGrid,
    beta: f64,
    beta0: f64,
    s: f64,
    seed: u64,
) -> Result<DensityState> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", beta, "must be positive"));
    }
    if !(beta0 >= 0.0 && beta0.is_finite()) {
        return Err(Error::invalid("beta0", beta0, "must be non-negative"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let k_max = grid.n() as f64 / 4.0;
    let w = random_band_limited(grid, k_max, &mut rng);
    let w0 = random_band_limited(grid, k_max, &mut rng);
    let unit = DensityState::new(1.0, w.add_constant(beta / 2.0), w0.add_constant(beta / 3.0))?;
    let norm = data_norm(&unit, beta, s);
    let scale = if norm > 0.0 { beta0 / norm } else { 0.0 };
    DensityState::new(
        1.0,
        w.scale(scale).add_constant(beta / 2.0),
        w0.scale(scale).add_constant(beta / 3.0),
    )
}

/// Spatially constant data `ϱ̊ = β/2 + a`, `ϱ̊₀ = β/3 + b`.
pub fn constant_mode_data(grid: TorusGrid, beta: f64, a: f64, b: f64) -> DensityState {
    DensityState {
        t: 1.0,
        rho: SpectralField::constant(grid, beta / 2.0 + a),
        rho_t: SpectralField::constant(grid, beta / 3.0 + b),
    }
}

/// Background plus one cosine mode riding on the growing branch:
/// `ϱ̊ = β/2 + δ cos(k·q)`, `ϱ̊₀ = β/3 + (2/3) δ cos(k·q)`.
///
/// For `β = 0` this is the eigenmode datum `ϱ = g`, `ϱ_t = (2/3) g` whose
/// evolution is `t^{2/3} f(t) g`.
pub fn single_mode_data(grid: TorusGrid, beta: f64, k: [i64; 3], delta: f64) -> DensityState {
    let w = grid.wavenumber_scale();
    let shape = move |q: [f64; 3]| (w * (k[0] as f64 * q[0] + k[1] as f64 * q[1] + k[2] as f64 * q[2])).cos();
    DensityState {
        t: 1.0,
        rho: SpectralField::from_fn(grid, |q| beta / 2.0 + delta * shape(q)),
        rho_t: SpectralField::from_fn(grid, |q| beta / 3.0 + 2.0 / 3.0 * delta * shape(q)),
    }
}
