use serde::Serialize;

use super::{from_fuchsian, DensityState, FuchsianTrajectory};
use crate::background::PhysicalParams;
use crate::{Error, Result};

/// `λ₀ = min{5/3, γ - 2/3} / max{1, 1/κ̃}`.
pub fn lambda0(gamma: f64, kappa_tilde: f64) -> Result<f64> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma", gamma, "must exceed 1"));
    }
    if !(kappa_tilde > 0.0 && kappa_tilde.is_finite()) {
        return Err(Error::invalid("kappa_tilde", kappa_tilde, "must be positive"));
    }
    Ok((5.0f64 / 3.0).min(gamma - 2.0 / 3.0) / 1f64.max(1.0 / kappa_tilde))
}

/// Size bound on the initial data below which the energy estimate applies:
/// `min{ β/(8Cs), ½ (λ₀/(ε Cm))^{1/(s+1)} }`, the second entry dropped for
/// `ε = 0`.
///
/// ```
/// use jeans::background::PhysicalParams;
/// use jeans::fuchsian::admissible_beta0;
///
/// let b = admissible_beta0(1.0, &PhysicalParams::default(), 3.0, 2.0, 10.0, 0.0).unwrap();
/// assert_eq!(b, 1.0 / 16.0);
/// ```
pub fn admissible_beta0(
    beta: f64,
    params: &PhysicalParams,
    s: f64,
    cs: f64,
    cm: f64,
    eps: f64,
) -> Result<f64> {
    params.validate()?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", beta, "must be positive"));
    }
    if !(s >= 3.0 && s.is_finite()) {
        return Err(Error::invalid("sobolev_s", s, "must be at least 3"));
    }
    if !(cs > 0.0 && cs.is_finite()) {
        return Err(Error::invalid("cs", cs, "must be positive"));
    }
    if !(cm > 0.0 && cm.is_finite()) {
        return Err(Error::invalid("cm", cm, "must be positive"));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps", eps, "must be non-negative"));
    }
    let first = beta / (8.0 * cs);
    if eps == 0.0 {
        return Ok(first);
    }
    let l0 = lambda0(params.gamma, params.kappa_tilde())?;
    let second = 0.5 * (l0 / (eps * cm)).powf(1.0 / (s + 1.0));
    Ok(first.min(second))
}

/// Distance of one snapshot from the band `[β/4, 3β/4]·t^{2/3}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnapshotMargin {
    pub t: f64,
    /// `min_q min(ϱ - βt^{2/3}/4, 3βt^{2/3}/4 - ϱ)`; negative on violation.
    pub margin: f64,
    /// `margin / (β t^{2/3})`, at most `1/4`.
    pub relative_margin: f64,
    /// Grid index where the margin is attained.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityBoundReport {
    pub holds: bool,
    /// Smallest relative margin over all snapshots.
    pub worst_margin: f64,
    /// Time and grid index of the worst margin.
    pub location: (f64, usize),
    pub snapshots: Vec<SnapshotMargin>,
}

pub fn snapshot_margin(d: &DensityState, beta: f64) -> SnapshotMargin {
    let scale = beta * d.t.powf(2.0 / 3.0);
    let (lo, hi) = (0.25 * scale, 0.75 * scale);
    let mut margin = f64::INFINITY;
    let mut index = 0;
    for (i, v) in d.rho.samples().into_iter().enumerate() {
        let m = (v - lo).min(hi - v);
        // NaN counts as a violation
        let m = if m.is_nan() { f64::NEG_INFINITY } else { m };
        if m < margin {
            margin = m;
            index = i;
        }
    }
    SnapshotMargin {
        t: d.t,
        margin,
        relative_margin: margin / scale,
        index,
    }
}

/// Sandwich check on arbitrary density snapshots.
pub fn density_bound_report(states: &[DensityState], beta: f64) -> DensityBoundReport {
    let snapshots: Vec<SnapshotMargin> = states.iter().map(|d| snapshot_margin(d, beta)).collect();
    let worst = snapshots
        .iter()
        .min_by(|a, b| a.relative_margin.total_cmp(&b.relative_margin));
    match worst {
        Some(w) => DensityBoundReport {
            holds: w.relative_margin >= 0.0,
            worst_margin: w.relative_margin,
            location: (w.t, w.index),
            snapshots,
        },
        None => DensityBoundReport {
            holds: true,
            worst_margin: f64::INFINITY,
            location: (f64::NAN, 0),
            snapshots,
        },
    }
}

/// Checks `(1/4)βt^{2/3} ≤ ϱ ≤ (3/4)βt^{2/3}` at every stored snapshot.
pub fn verify_density_bounds(traj: &FuchsianTrajectory, beta: f64) -> Result<DensityBoundReport> {
    let states = traj
        .snapshots
        .iter()
        .map(from_fuchsian)
        .collect::<Result<Vec<_>>>()?;
    Ok(density_bound_report(&states, beta))
}
