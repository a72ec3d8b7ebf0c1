//! Separated-variable eigenmodes of the linear equation at `γ = 4/3`.
//!
//! For data `ϱ(1) = g`, `∂_tϱ(1) = (2/3) g` with `Δg = λg`, the solution is
//! `ϱ = t^{2/3} f(t) g(q)` where `f` solves
//!
//! ```text
//! f'' + (8/(3t)) f' - λκ̃ f / t² = 0,   f(1) = 1,  f'(1) = 0.
//! ```
//!
//! With `D = 25 + 36λκ̃ > 0` the two power laws of `t^{2/3} f` have exponents
//! `μ± = 2/3 - (5 ∓ √D)/6`. The sign of `μ+` separates growing modes from
//! the others; that is the Jeans criterion `λκ̃ > -2/3`.

use serde::Serialize;

use crate::background::PhysicalParams;
use crate::ode::{self, StepControl};
use crate::{Error, Result};

const CLASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSpec {
    pub lam: f64,
    pub k: Option<[i64; 3]>,
    pub kappa_tilde: f64,
}

impl ModeSpec {
    pub fn new(lam: f64, kappa_tilde: f64) -> Result<Self> {
        if lam > 0.0 || lam.is_nan() {
            return Err(Error::PositiveEigenvalue(lam));
        }
        if !(kappa_tilde > 0.0) {
            return Err(Error::invalid("kappa_tilde", kappa_tilde, "must be positive"));
        }
        Ok(ModeSpec {
            lam,
            k: None,
            kappa_tilde,
        })
    }

    /// Plane wave `exp(i k·q)` on the `2π` box, `λ = -|k|²`.
    pub fn from_lattice(k: [i64; 3], params: &PhysicalParams) -> Result<Self> {
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        let mut mode = Self::new(-k2, params.kappa_tilde())?;
        mode.k = Some(k);
        Ok(mode)
    }

    /// Mode with a prescribed product `λκ̃`.
    pub fn with_product(lam_kt: f64, kappa_tilde: f64) -> Result<Self> {
        Self::new(lam_kt / kappa_tilde, kappa_tilde)
    }

    pub fn lam_kt(&self) -> f64 {
        self.lam * self.kappa_tilde
    }

    /// `25 + 36λκ̃`.
    pub fn discriminant(&self) -> f64 {
        25.0 + 36.0 * self.lam_kt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum JeansClass {
    /// `λκ̃ > -2/3`: the leading exponent is positive.
    Growing,
    /// `λκ̃ = -2/3`: the leading exponent vanishes.
    Critical,
    /// `-25/36 < λκ̃ < -2/3`: two real, negative exponents.
    DecayingReal,
    /// `λκ̃ = -25/36`: repeated exponent, closed form undefined.
    Degenerate,
    /// `λκ̃ < -25/36`: complex exponents.
    Oscillatory,
}

impl JeansClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            JeansClass::Growing => "growing",
            JeansClass::Critical => "critical",
            JeansClass::DecayingReal => "decaying-real",
            JeansClass::Degenerate => "degenerate",
            JeansClass::Oscillatory => "oscillatory",
        }
    }
}

fn require_four_thirds(params: &PhysicalParams) -> Result<()> {
    params.validate()?;
    if (params.gamma - 4.0 / 3.0).abs() > 1e-12 {
        return Err(Error::invalid(
            "gamma",
            params.gamma,
            "closed-form modes require gamma = 4/3",
        ));
    }
    Ok(())
}

pub fn jeans_classify(mode: &ModeSpec, params: &PhysicalParams) -> Result<JeansClass> {
    require_four_thirds(params)?;
    if mode.lam > 0.0 {
        return Err(Error::PositiveEigenvalue(mode.lam));
    }
    let x = mode.lam_kt();
    let critical = -2.0 / 3.0;
    let degenerate = -25.0 / 36.0;
    Ok(if (x - critical).abs() <= CLASS_TOL {
        JeansClass::Critical
    } else if x > critical {
        JeansClass::Growing
    } else if (x - degenerate).abs() <= CLASS_TOL {
        JeansClass::Degenerate
    } else if x > degenerate {
        JeansClass::DecayingReal
    } else {
        JeansClass::Oscillatory
    })
}

fn root(mode: &ModeSpec) -> Result<f64> {
    let d = mode.discriminant();
    if d.abs() <= 36.0 * CLASS_TOL {
        return Err(Error::OutOfValidity("degenerate: zero discriminant"));
    }
    if d < 0.0 {
        return Err(Error::OutOfValidity("oscillatory: negative discriminant"));
    }
    Ok(d.sqrt())
}

/// `(μ+, μ-)` with `μ± = 2/3 - (5 ∓ √D)/6`.
pub fn mode_exponents(mode: &ModeSpec) -> Result<(f64, f64)> {
    let r = root(mode)?;
    Ok((2.0 / 3.0 - (5.0 - r) / 6.0, 2.0 / 3.0 - (5.0 + r) / 6.0))
}

/// Exponents and amplitudes of the two power laws of `t^{2/3} f(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSolution {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub discriminant: f64,
    lam_kt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeValue {
    pub f: f64,
    pub f0: f64,
    /// `ϱ / g = t^{2/3} f(t)`.
    pub amp: f64,
}

impl ModeSolution {
    pub fn new(mode: &ModeSpec) -> Result<Self> {
        let r = root(mode)?;
        let (mu_plus, mu_minus) = mode_exponents(mode)?;
        Ok(ModeSolution {
            mu_plus,
            mu_minus,
            c_plus: 0.5 + 5.0 / (2.0 * r),
            c_minus: 0.5 - 5.0 / (2.0 * r),
            discriminant: mode.discriminant(),
            lam_kt: mode.lam_kt(),
        })
    }

    pub fn evaluate(&self, t: f64) -> Result<ModeValue> {
        if t.is_nan() || t < 1.0 {
            return Err(Error::TimeBeforeOrigin(t));
        }
        let r = self.discriminant.sqrt();
        let f = self.c_minus * t.powf(-(5.0 + r) / 6.0) + self.c_plus * t.powf(-(5.0 - r) / 6.0);
        let f0 = -3.0 * self.lam_kt / r
            * (t.powf(-(11.0 + r) / 6.0) - t.powf(-(11.0 - r) / 6.0));
        Ok(ModeValue {
            f,
            f0,
            amp: t.powf(2.0 / 3.0) * f,
        })
    }
}

pub fn closed_form_mode(mode: &ModeSpec, t: f64) -> Result<ModeValue> {
    ModeSolution::new(mode)?.evaluate(t)
}

/// Accepted steps of the numerical mode solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeTrajectory {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub f0: Vec<f64>,
}

impl ModeTrajectory {
    pub fn amp(&self, i: usize) -> f64 {
        self.t[i].powf(2.0 / 3.0) * self.f[i]
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Integrate `∂_t f₀ = -(8/(3t)) f₀ + λκ̃ f / t²`, `∂_t f = f₀` from
/// `(f, f₀)(1) = (1, 0)` with an adaptive Dormand–Prince pair. Valid for
/// every sign of the discriminant.
pub fn integrate_mode_ode(mode: &ModeSpec, t_end: f64, tol: f64) -> Result<ModeTrajectory> {
    integrate_mode_ode_with_stops(mode, t_end, tol, &[])
}

/// As [`integrate_mode_ode`], additionally landing exactly on `stops`.
pub fn integrate_mode_ode_with_stops(
    mode: &ModeSpec,
    t_end: f64,
    tol: f64,
    stops: &[f64],
) -> Result<ModeTrajectory> {
    if !(t_end > 1.0) {
        return Err(Error::invalid("t_end", t_end, "must exceed 1"));
    }
    let lk = mode.lam_kt();
    let mut traj = ModeTrajectory {
        t: vec![1.0],
        f: vec![1.0],
        f0: vec![0.0],
    };
    let ctrl = StepControl::with_tol(tol);
    ode::integrate(
        |t, y, dy| {
            // y = (f, f0)
            dy[0] = y[1];
            dy[1] = -8.0 / (3.0 * t) * y[1] + lk * y[0] / (t * t);
            Ok(())
        },
        1.0,
        &[1.0, 0.0],
        t_end,
        &ctrl,
        stops,
        |_| f64::INFINITY,
        |t, y, _| {
            traj.t.push(t);
            traj.f.push(y[0]);
            traj.f0.push(y[1]);
            Ok(())
        },
    )?;
    Ok(traj)
}

/// Observed drift of the two quantities conserved by the diagonalised
/// first-order system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftReport {
    /// Initial values of `τ^{-(5+√D)/6} h₁` and `τ^{-(5-√D)/6} h₂`.
    pub initial: [f64; 2],
    /// Largest departure from the initial value, relative to it when it is
    /// nonzero and absolute otherwise.
    pub drift: [f64; 2],
}

/// With `τ = 1/t`, `𝐟₀ = -t f₀`, `𝐟 = f`, the combinations
/// `h₁ = 𝐟₀ + ((-5+√D)/6) 𝐟` and `h₂ = 𝐟₀ + ((-5-√D)/6) 𝐟` evolve as pure
/// powers of `τ`; this measures how well a numerical trajectory keeps them
/// on those powers.
pub fn fuchsian_2x2_invariants(traj: &ModeTrajectory, mode: &ModeSpec) -> Result<DriftReport> {
    let r = root(mode)?;
    let a1 = (-5.0 + r) / 6.0;
    let a2 = (-5.0 - r) / 6.0;
    let invariants = |i: usize| {
        let t = traj.t[i];
        let tau = 1.0 / t;
        let bf0 = -t * traj.f0[i];
        let bf = traj.f[i];
        let h1 = bf0 + a1 * bf;
        let h2 = bf0 + a2 * bf;
        [tau.powf(-(5.0 + r) / 6.0) * h1, tau.powf(-(5.0 - r) / 6.0) * h2]
    };
    let initial = invariants(0);
    let mut drift = [0.0f64; 2];
    for i in 0..traj.len() {
        let cur = invariants(i);
        for c in 0..2 {
            let d = (cur[c] - initial[c]).abs();
            let d = if initial[c] != 0.0 { d / initial[c].abs() } else { d };
            drift[c] = drift[c].max(d);
        }
    }
    Ok(DriftReport { initial, drift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> PhysicalParams {
        PhysicalParams::default()
    }

    #[test]
    fn classification_examples() {
        let p = params();
        let kt = p.kappa_tilde();
        let zero = ModeSpec::new(0.0, kt).unwrap();
        assert_eq!(jeans_classify(&zero, &p).unwrap(), JeansClass::Growing);
        let one = ModeSpec::new(-1.0, kt).unwrap();
        assert_eq!(jeans_classify(&one, &p).unwrap(), JeansClass::Growing);
        let crit = ModeSpec::with_product(-2.0 / 3.0, kt).unwrap();
        assert_eq!(jeans_classify(&crit, &p).unwrap(), JeansClass::Critical);
        let osc = ModeSpec::with_product(-0.7, kt).unwrap();
        assert_eq!(jeans_classify(&osc, &p).unwrap(), JeansClass::Oscillatory);
        let dec = ModeSpec::with_product(-0.68, kt).unwrap();
        assert_eq!(jeans_classify(&dec, &p).unwrap(), JeansClass::DecayingReal);
        let deg = ModeSpec::with_product(-25.0 / 36.0, kt).unwrap();
        assert_eq!(jeans_classify(&deg, &p).unwrap(), JeansClass::Degenerate);
    }

    #[test]
    fn classify_rejects_other_gamma_and_positive_lambda() {
        let p = PhysicalParams::new(1.0, 1.0, 5.0 / 3.0).unwrap();
        let m = ModeSpec::new(-1.0, 0.5).unwrap();
        assert!(jeans_classify(&m, &p).is_err());
        assert_eq!(ModeSpec::new(0.5, 1.0), Err(Error::PositiveEigenvalue(0.5)));
    }

    #[test]
    fn exponent_examples() {
        let m = ModeSpec::with_product(0.0, 0.5).unwrap();
        let (p, q) = mode_exponents(&m).unwrap();
        assert_relative_eq!(p, 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(q, -1.0, max_relative = 1e-15);

        let m = ModeSpec::with_product(-0.5, 0.5).unwrap();
        let (p, q) = mode_exponents(&m).unwrap();
        let s7 = 7f64.sqrt();
        assert_relative_eq!(p, 2.0 / 3.0 - (5.0 - s7) / 6.0, max_relative = 1e-14);
        assert!((p - 0.27430).abs() < 1e-5 && (q + 0.60763).abs() < 1e-5);

        let m = ModeSpec::with_product(-2.0 / 3.0, 0.5).unwrap();
        let (p, q) = mode_exponents(&m).unwrap();
        assert!(p.abs() < 1e-14);
        // D = 1 gives μ- = 2/3 - 1
        assert_relative_eq!(q, -1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn exponents_out_of_validity() {
        let deg = ModeSpec::with_product(-25.0 / 36.0, 0.5).unwrap();
        assert!(matches!(mode_exponents(&deg), Err(Error::OutOfValidity(_))));
        let osc = ModeSpec::with_product(-1.0, 0.5).unwrap();
        assert!(matches!(closed_form_mode(&osc, 2.0), Err(Error::OutOfValidity(_))));
    }

    #[test]
    fn zero_mode_grows_as_two_thirds() {
        let m = ModeSpec::new(0.0, 0.5).unwrap();
        let sol = ModeSolution::new(&m).unwrap();
        assert_eq!(sol.c_minus, 0.0);
        assert_eq!(sol.c_plus, 1.0);
        for t in [1.0, 3.0, 50.0] {
            let v = sol.evaluate(t).unwrap();
            assert_relative_eq!(v.amp, t.powf(2.0 / 3.0), max_relative = 1e-14);
        }
    }

    #[test]
    fn unit_time_initial_conditions() {
        for x in [0.0, -0.2, -0.5, -0.68] {
            let v = closed_form_mode(&ModeSpec::with_product(x, 0.5).unwrap(), 1.0).unwrap();
            assert_relative_eq!(v.f, 1.0, max_relative = 1e-14);
            assert!(v.f0.abs() < 1e-15);
            assert_relative_eq!(v.amp, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn half_product_at_ten() {
        let m = ModeSpec::with_product(-0.5, 0.5).unwrap();
        let s7 = 7f64.sqrt();
        let cp = 0.5 + 5.0 / (2.0 * s7);
        let cm = 0.5 - 5.0 / (2.0 * s7);
        let (mp, mm) = mode_exponents(&m).unwrap();
        let expected = cp * 10f64.powf(mp) + cm * 10f64.powf(mm);
        let v = closed_form_mode(&m, 10.0).unwrap();
        assert_relative_eq!(v.amp, expected, max_relative = 1e-13);
    }

    #[test]
    fn closed_form_derivative_matches_finite_difference() {
        let m = ModeSpec::with_product(-0.3, 0.5).unwrap();
        let sol = ModeSolution::new(&m).unwrap();
        for t in [1.5, 7.0, 40.0] {
            let h = 1e-5 * t;
            let fd = (sol.evaluate(t + h).unwrap().f - sol.evaluate(t - h).unwrap().f) / (2.0 * h);
            assert_relative_eq!(sol.evaluate(t).unwrap().f0, fd, max_relative = 1e-7);
        }
    }

    #[test]
    fn zero_mode_ode_is_static() {
        let m = ModeSpec::new(0.0, 0.5).unwrap();
        let traj = integrate_mode_ode(&m, 100.0, 1e-10).unwrap();
        assert!(traj.f.iter().all(|&f| f == 1.0));
        assert!(traj.f0.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn ode_matches_closed_form() {
        let m = ModeSpec::with_product(-0.5, 0.5).unwrap();
        let sol = ModeSolution::new(&m).unwrap();
        let traj = integrate_mode_ode(&m, 100.0, 1e-10).unwrap();
        for i in 0..traj.len() {
            let v = sol.evaluate(traj.t[i]).unwrap();
            assert_relative_eq!(traj.f[i], v.f, max_relative = 1e-8);
        }
    }

    #[test]
    fn degenerate_ode_stays_finite() {
        let m = ModeSpec::with_product(-25.0 / 36.0, 0.5).unwrap();
        let traj = integrate_mode_ode(&m, 100.0, 1e-10).unwrap();
        assert!(traj.f.iter().chain(&traj.f0).all(|v| v.is_finite() && v.abs() < 10.0));
        // repeated root: f = t^{-5/6} (1 + (5/6) ln t)
        let t = *traj.t.last().unwrap();
        let expected = t.powf(-5.0 / 6.0) * (1.0 + 5.0 / 6.0 * t.ln());
        assert_relative_eq!(*traj.f.last().unwrap(), expected, max_relative = 1e-8);
    }

    #[test]
    fn invariants_drift() {
        let m = ModeSpec::new(0.0, 0.5).unwrap();
        let traj = integrate_mode_ode(&m, 100.0, 1e-10).unwrap();
        let rep = fuchsian_2x2_invariants(&traj, &m).unwrap();
        assert!(rep.drift[1] <= 1e-8);

        let m = ModeSpec::with_product(-0.5, 0.5).unwrap();
        let traj = integrate_mode_ode(&m, 100.0, 1e-10).unwrap();
        let rep = fuchsian_2x2_invariants(&traj, &m).unwrap();
        assert!(rep.drift[0] <= 1e-7 && rep.drift[1] <= 1e-7, "{rep:?}");
    }

    #[test]
    fn invariants_initial_values_exact() {
        let m = ModeSpec::with_product(-0.5, 0.5).unwrap();
        let traj = ModeTrajectory {
            t: vec![1.0],
            f: vec![1.0],
            f0: vec![0.0],
        };
        let rep = fuchsian_2x2_invariants(&traj, &m).unwrap();
        assert_eq!(rep.drift, [0.0, 0.0]);
        let r = 7f64.sqrt();
        assert_relative_eq!(rep.initial[0], (-5.0 + r) / 6.0);
        assert_relative_eq!(rep.initial[1], (-5.0 - r) / 6.0);
    }

    #[test]
    fn lattice_modes_on_default_box() {
        let p = params();
        for k in [[1, 0, 0], [0, -1, 0], [1, 1, 0], [1, 1, 1], [2, 0, 0]] {
            let m = ModeSpec::from_lattice(k, &p).unwrap();
            let grows = jeans_classify(&m, &p).unwrap() == JeansClass::Growing;
            let k2 = k.iter().map(|v| v * v).sum::<i64>();
            assert_eq!(grows, k2 == 1, "k = {k:?}");
        }
    }
}
