//! Fourier fields on the periodic box `[0, L)³`.
//!
//! A [`SpectralField`] stores the coefficients `ĉ(k)` of a real field on an
//! `n³` grid, normalised so that `ĉ(0)` is the spatial mean:
//!
//! ```text
//! f(q) = Σ_k ĉ(k) exp(i (2π/L) k·q),   k ∈ {-n/2, …, n/2-1}³
//! ```
//!
//! Sobolev norms always weight by the integer lattice index `k`, whatever
//! the box length. With the default `L = 2π` the index and the physical
//! wavenumber coincide.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    n: usize,
    period: f64,
    dealias: bool,
}

impl TorusGrid {
    /// Grid with `n` points per axis on a box of side `period`. Dealiasing
    /// of products is on by default.
    pub fn new(n: usize, period: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::invalid(
                "n",
                n as f64,
                "points per axis must be a power of two >= 8",
            ));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::invalid("period", period, "must be positive"));
        }
        Ok(TorusGrid {
            n,
            period,
            dealias: true,
        })
    }

    /// `n³` grid on the `2π` box.
    pub fn cube(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `Δq = L/n`.
    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Factor `2π/L` turning a lattice index into a physical wavenumber.
    pub fn wavenumber_scale(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Largest index kept per axis by the two-thirds rule (`3K < n`).
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.n - 1) / 3) as i64
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    fn signed(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Lattice vector stored at a flat coefficient index.
    #[inline]
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        [self.signed(idx / (n * n)), self.signed((idx / n) % n), self.signed(idx % n)]
    }

    /// Flat index of a lattice vector, if it is resolved by the grid.
    pub fn lattice_index(&self, k: [i64; 3]) -> Option<usize> {
        let half = (self.n / 2) as i64;
        let mut out = [0usize; 3];
        for d in 0..3 {
            if k[d] < -half || k[d] >= half {
                return None;
            }
            out[d] = k[d].rem_euclid(self.n as i64) as usize;
        }
        Some(self.flat(out[0], out[1], out[2]))
    }

    /// Coordinates of a grid point.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        let h = self.spacing();
        [(idx / (n * n)) as f64 * h, ((idx / n) % n) as f64 * h, (idx % n) as f64 * h]
    }

    fn is_nyquist(&self, k: i64) -> bool {
        k == -((self.n / 2) as i64)
    }
}

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Unnormalised in-place 3-D transform, one axis at a time.
fn fft3(data: &mut [Complex64], n: usize, direction: FftDirection) {
    let (fwd, inv) = plans(n);
    let plan = match direction {
        FftDirection::Forward => fwd,
        FftDirection::Inverse => inv,
    };
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    // contiguous axis
    plan.process_with_scratch(data, &mut scratch);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for stride in [n, n * n] {
        for base in 0..n * n {
            // base enumerates the n² lines orthogonal to the axis with `stride`
            let start = if stride == n {
                (base / n) * n * n + base % n
            } else {
                base
            };
            for (m, slot) in line.iter_mut().enumerate() {
                *slot = data[start + m * stride];
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for (m, v) in line.iter().enumerate() {
                data[start + m * stride] = *v;
            }
        }
    }
}

/// Real scalar field on the torus held as Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(c, 0.0);
        f
    }

    /// Forward transform of grid samples laid out as `flat(i, j, k)`.
    pub fn from_samples(grid: TorusGrid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: samples.len(),
            });
        }
        let mut coeffs: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft3(&mut coeffs, grid.n, FftDirection::Forward);
        let norm = 1.0 / grid.len() as f64;
        for c in &mut coeffs {
            *c *= norm;
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let samples: Vec<f64> = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::from_samples(grid, &samples).expect("sample count matches grid")
    }

    /// Wrap raw coefficients. No Hermitian symmetry is imposed, so complex
    /// plane waves can be represented for testing operators.
    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: coeffs.len(),
            });
        }
        Ok(SpectralField { grid, coeffs })
    }

    /// Single complex exponential `amplitude · exp(i (2π/L) k·q)`.
    pub fn plane_wave(grid: TorusGrid, k: [i64; 3], amplitude: Complex64) -> Result<Self> {
        let idx = grid
            .lattice_index(k)
            .ok_or(Error::invalid("k", k[0] as f64, "wave vector not resolved by grid"))?;
        let mut f = Self::zeros(grid);
        f.coeffs[idx] = amplitude;
        Ok(f)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of lattice vector `k` (zero if unresolved).
    pub fn coeff(&self, k: [i64; 3]) -> Complex64 {
        self.grid
            .lattice_index(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Complex grid values (the imaginary part vanishes for real fields).
    pub fn complex_samples(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        fft3(&mut data, self.grid.n, FftDirection::Inverse);
        data
    }

    /// Real grid values.
    pub fn samples(&self) -> Vec<f64> {
        self.complex_samples().into_iter().map(|c| c.re).collect()
    }

    /// Largest deviation from `ĉ(-k) = conj(ĉ(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n;
        let mut worst = 0.0f64;
        for idx in 0..self.grid.len() {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            let mirror = self.grid.flat((n - i) % n, (n - j) % n, (n - k) % n);
            worst = worst.max((self.coeffs[idx] - self.coeffs[mirror].conj()).norm());
        }
        worst
    }

    fn map_modes(&self, f: impl Fn([i64; 3], Complex64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| f(self.grid.mode(i), c))
            .collect();
        SpectralField {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn laplacian(&self) -> Self {
        let s2 = self.grid.wavenumber_scale().powi(2);
        self.map_modes(|k, c| {
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            c * (-k2 * s2)
        })
    }

    /// `∂/∂q_axis`. The Nyquist coefficient of an odd derivative is dropped.
    pub fn derivative(&self, axis: usize) -> Self {
        assert!(axis < 3, "axis {axis} out of range");
        let scale = self.grid.wavenumber_scale();
        let grid = self.grid;
        self.map_modes(|k, c| {
            if grid.is_nyquist(k[axis]) {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, k[axis] as f64 * scale)
            }
        })
    }

    pub fn gradient(&self) -> [SpectralField; 3] {
        [self.derivative(0), self.derivative(1), self.derivative(2)]
    }

    /// `Σ_k |ĉ(k)|² (1+|k|²)^s` with the integer index `k`.
    pub fn sobolev_norm_sq(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.grid.mode(i);
                let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                c.norm_sqr() * (1.0 + k2).powf(s)
            })
            .sum()
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_norm_sq(s).sqrt()
    }

    /// Grid maximum of `|f|`.
    pub fn sup_norm(&self) -> f64 {
        self.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Root mean square over the grid, `(mean |f|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        SpectralField {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
        }
    }

    pub fn add(&self, other: &SpectralField) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Zero every mode with some `|k_d|` above the two-thirds cutoff.
    pub fn truncated_two_thirds(&self) -> Self {
        let cut = self.grid.dealias_cutoff();
        self.map_modes(|k, c| {
            if k.iter().any(|kd| kd.abs() > cut) {
                Complex64::new(0.0, 0.0)
            } else {
                c
            }
        })
    }

    fn maybe_dealiased(&self) -> Self {
        if self.grid.dealias {
            self.truncated_two_thirds()
        } else {
            self.clone()
        }
    }

    /// Pointwise product, dealiased by the two-thirds rule when the grid
    /// asks for it.
    pub fn product(&self, other: &SpectralField) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let a = self.maybe_dealiased().samples();
        let b = other.maybe_dealiased().samples();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        SpectralField::from_samples(self.grid, &prod)
            .expect("sample count matches grid")
            .maybe_dealiased()
    }
}

/// `Σ_i ∂_i v_i` for a spectral vector field.
pub fn divergence(v: &[SpectralField; 3]) -> SpectralField {
    v[0].derivative(0).add(&v[1].derivative(1)).add(&v[2].derivative(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> TorusGrid {
        TorusGrid::cube(8).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(12, 1.0).is_err());
        assert!(TorusGrid::new(4, 1.0).is_err());
        assert!(TorusGrid::new(16, 0.0).is_err());
        let g = TorusGrid::cube(16).unwrap();
        assert_eq!(g.dealias_cutoff(), 5);
        assert_eq!(g.len(), 4096);
    }

    #[test]
    fn lattice_round_trip() {
        let g = grid();
        for idx in 0..g.len() {
            assert_eq!(g.lattice_index(g.mode(idx)), Some(idx));
        }
        assert_eq!(g.lattice_index([4, 0, 0]), None);
    }

    #[test]
    fn constant_field() {
        let f = SpectralField::from_samples(grid(), &vec![2.5; 512]).unwrap();
        assert_relative_eq!(f.coeff([0, 0, 0]).re, 2.5, max_relative = 1e-14);
        let rest: f64 = f.coeffs()[1..].iter().map(|c| c.norm()).sum();
        assert!(rest < 1e-13);
        assert!(f.laplacian().coeffs().iter().all(|c| c.norm() < 1e-15));
        assert!(f.gradient().iter().all(|d| d.sup_norm() < 1e-15));
    }

    #[test]
    fn cosine_coefficients() {
        let f = SpectralField::from_fn(grid(), |q| q[0].cos());
        assert_relative_eq!(f.coeff([1, 0, 0]).re, 0.5, epsilon = 1e-14);
        assert_relative_eq!(f.coeff([-1, 0, 0]).re, 0.5, epsilon = 1e-14);
        assert!(f.hermitian_defect() < 1e-14);
    }

    #[test]
    fn shape_mismatch() {
        assert_eq!(
            SpectralField::from_samples(grid(), &[1.0; 10]),
            Err(Error::ShapeMismatch {
                expected: 512,
                found: 10
            })
        );
    }

    #[test]
    fn plane_wave_laplacian() {
        let g = grid();
        for (k, ev) in [([1, 0, 0], -1.0), ([1, 2, 2], -9.0)] {
            let f = SpectralField::plane_wave(g, k, Complex64::new(1.0, 0.0)).unwrap();
            let lap = f.laplacian();
            assert_eq!(lap.coeff(k), Complex64::new(ev, 0.0));
        }
    }

    #[test]
    fn period_one_wavenumbers() {
        let g = TorusGrid::new(8, 1.0).unwrap();
        let f = SpectralField::plane_wave(g, [1, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(f.laplacian().coeff([1, 0, 0]).re, -4.0 * PI * PI, max_relative = 1e-14);
        // Sobolev weight uses the integer index regardless of the period
        assert_relative_eq!(f.sobolev_norm(2.0), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn sine_gradient() {
        let g = grid();
        let f = SpectralField::from_fn(g, |q| q[0].sin());
        let [dx, dy, dz] = f.gradient();
        let expected = SpectralField::from_fn(g, |q| q[0].cos());
        assert!(dx.sub(&expected).sup_norm() < 1e-13);
        assert!(dy.sup_norm() < 1e-14 && dz.sup_norm() < 1e-14);
        assert_relative_eq!(f.sup_norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn plane_wave_gradient() {
        let g = grid();
        let k = [1, -2, 3];
        let f = SpectralField::plane_wave(g, k, Complex64::new(1.0, 0.0)).unwrap();
        for (axis, d) in f.gradient().iter().enumerate() {
            assert_eq!(d.coeff(k), Complex64::new(0.0, k[axis] as f64));
        }
    }

    #[test]
    fn sobolev_examples() {
        let g = grid();
        assert_relative_eq!(SpectralField::constant(g, -3.0).sobolev_norm(5.0), 3.0);
        let f = SpectralField::plane_wave(g, [1, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(f.sobolev_norm(2.0), 2.0, max_relative = 1e-15);
        let h = SpectralField::plane_wave(g, [0, 2, 1], Complex64::new(0.0, 0.5)).unwrap();
        let sum = f.add(&h);
        assert_relative_eq!(
            sum.sobolev_norm_sq(3.0),
            f.sobolev_norm_sq(3.0) + h.sobolev_norm_sq(3.0),
            max_relative = 1e-15
        );
    }

    #[test]
    fn dealiased_product_of_low_modes_is_exact() {
        let g = TorusGrid::cube(16).unwrap();
        let a = SpectralField::from_fn(g, |q| (2.0 * q[0]).cos());
        let b = SpectralField::from_fn(g, |q| (3.0 * q[0]).cos() + q[1].sin());
        let exact = SpectralField::from_fn(g, |q| (2.0 * q[0]).cos() * ((3.0 * q[0]).cos() + q[1].sin()));
        assert!(a.product(&b).sub(&exact).sup_norm() < 1e-13);
    }

    #[test]
    fn two_thirds_truncation() {
        let g = TorusGrid::cube(16).unwrap();
        let f = SpectralField::from_fn(g, |q| (6.0 * q[2]).cos() + q[0].cos());
        let t = f.truncated_two_thirds();
        assert!(t.coeff([0, 0, 6]).norm() == 0.0);
        assert_relative_eq!(t.coeff([1, 0, 0]).re, 0.5, epsilon = 1e-14);
    }
}
