//! Explicit Dormand–Prince 5(4) integrator with embedded error control.
//!
//! This is the single time stepper used by the mode oracle and both field
//! solvers. States are flat `f64` slices; callers flatten complex spectral
//! coefficients as interleaved `(re, im)` pairs. On top of the accuracy
//! controller, an optional stability bound (the CFL limit for the field
//! solvers) caps every step, and a list of stop times forces the stepper to
//! land exactly on requested output times.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; estimated from the initial derivative when absent.
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Take uniform steps of this size and skip error control.
    pub fixed_step: Option<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-8,
            atol: 1e-8,
            h_init: None,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
            fixed_step: None,
        }
    }
}

impl StepControl {
    pub fn with_tol(tol: f64) -> Self {
        StepControl {
            rtol: tol,
            atol: tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) {
            return Err(Error::invalid("rtol", self.rtol, "must be positive"));
        }
        if !(self.atol > 0.0) {
            return Err(Error::invalid("atol", self.atol, "must be positive"));
        }
        if let Some(h) = self.fixed_step {
            if !(h > 0.0) {
                return Err(Error::invalid("fixed_step", h, "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub t_reached: f64,
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `y' = rhs(t, y)` from `t0` to `t_end` (`t_end > t0`).
///
/// * `stops`: times (in `(t0, t_end]`) the stepper must land on exactly.
/// * `stable_step`: largest admissible step at a given time
///   (`f64::INFINITY` when unconstrained).
/// * `observer`: called after every accepted step with the new time, the
///   new state and whether the time is one of `stops` (or `t_end`).
///
/// Returns the final state.
pub fn integrate<F, B, O>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    ctrl: &StepControl,
    stops: &[f64],
    stable_step: B,
    mut observer: O,
) -> Result<(Vec<f64>, Stats)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    B: Fn(f64) -> f64,
    O: FnMut(f64, &[f64], bool) -> Result<()>,
{
    ctrl.validate()?;
    if !(t_end > t0) {
        return Err(Error::invalid("t_end", t_end, "must exceed the start time"));
    }
    let mut stops: Vec<f64> = stops.iter().copied().filter(|&s| s > t0 && s < t_end).collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops.push(t_end);

    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];

    let mut stats = Stats {
        t_reached: t0,
        ..Default::default()
    };
    let mut t = t0;
    rhs(t, &y, &mut k1)?;
    stats.rhs_evals += 1;

    let mut h = match (ctrl.fixed_step, ctrl.h_init) {
        (Some(h), _) => h,
        (None, Some(h)) => h,
        (None, None) => initial_step(&y, &k1, ctrl),
    };
    h = h.min(ctrl.h_max);
    let mut next_stop = 0;

    while next_stop < stops.len() {
        if stats.accepted + stats.rejected >= ctrl.max_steps {
            return Err(Error::MaxSteps { reached: t });
        }
        let target = stops[next_stop];
        let bound = stable_step(t).min(ctrl.h_max);
        let mut step = h.min(bound);
        // also respect the bound at the far end of the step
        step = step.min(stable_step(t + step));
        if step < ctrl.h_min && target - t > ctrl.h_min {
            return Err(Error::CflUnderflow {
                reached: t,
                bound: step,
            });
        }
        let mut lands = false;
        if t + step >= target - 1e-12 * target.abs().max(1.0) {
            step = target - t;
            lands = true;
        } else if t + 1.5 * step > target && ctrl.fixed_step.is_none() {
            // avoid leaving a sliver before the stop
            step = 0.5 * (target - t);
        }

        let tn = t + step;
        for i in 0..dim {
            tmp[i] = y[i] + step * A21 * k1[i];
        }
        rhs(t + C2 * step, &tmp, &mut k2)?;
        for i in 0..dim {
            tmp[i] = y[i] + step * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * step, &tmp, &mut k3)?;
        for i in 0..dim {
            tmp[i] = y[i] + step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * step, &tmp, &mut k4)?;
        for i in 0..dim {
            tmp[i] = y[i] + step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * step, &tmp, &mut k5)?;
        for i in 0..dim {
            tmp[i] = y[i]
                + step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(tn, &tmp, &mut k6)?;
        for i in 0..dim {
            y_new[i] =
                y[i] + step * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        rhs(tn, &y_new, &mut k7)?;
        stats.rhs_evals += 6;

        let accept;
        if let Some(fixed) = ctrl.fixed_step {
            accept = true;
            h = fixed;
        } else {
            let mut err = 0.0f64;
            for i in 0..dim {
                let e = step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = ctrl.atol + ctrl.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max(e.abs() / sc);
            }
            if !err.is_finite() {
                return Err(Error::EnergyOverflow(tn));
            }
            accept = err <= 1.0;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            let proposal = step * if accept { factor } else { factor.min(1.0) };
            // after a forced landing keep the larger of the two proposals
            h = if accept && lands { proposal.max(h) } else { proposal };
            h = h.min(ctrl.h_max);
            if !accept && h < ctrl.h_min {
                return Err(Error::StepSizeUnderflow { reached: t, h });
            }
        }

        if accept {
            t = if lands { target } else { tn };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            stats.accepted += 1;
            stats.t_reached = t;
            if lands {
                next_stop += 1;
            }
            observer(t, &y, lands)?;
        } else {
            stats.rejected += 1;
        }
    }
    Ok((y, stats))
}

fn initial_step(y: &[f64], dy: &[f64], ctrl: &StepControl) -> f64 {
    let mut d0 = 0.0f64;
    let mut d1 = 0.0f64;
    for (a, b) in y.iter().zip(dy) {
        let sc = ctrl.atol + ctrl.rtol * a.abs();
        d0 = d0.max(a.abs() / sc);
        d1 = d1.max(b.abs() / sc);
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.max(ctrl.h_min * 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_bound(_: f64) -> f64 {
        f64::INFINITY
    }

    #[test]
    fn exponential_decay() {
        let ctrl = StepControl::with_tol(1e-10);
        let (y, stats) = integrate(
            |_, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            5.0,
            &ctrl,
            &[],
            no_bound,
            |_, _, _| Ok(()),
        )
        .unwrap();
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-10);
        assert_eq!(stats.t_reached, 5.0);
    }

    #[test]
    fn harmonic_oscillator_hits_stops() {
        let ctrl = StepControl::with_tol(1e-11);
        let mut seen = Vec::new();
        integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0, 0.0],
            10.0,
            &ctrl,
            &[1.0, 2.5, 7.0],
            no_bound,
            |t, y, stop| {
                if stop {
                    seen.push((t, y[0]));
                }
                Ok(())
            },
        )
        .unwrap();
        let times: Vec<f64> = seen.iter().map(|s| s.0).collect();
        assert_eq!(times, vec![1.0, 2.5, 7.0, 10.0]);
        for (t, x) in seen {
            assert!((x - t.cos()).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn fixed_step_fifth_order() {
        // y' = y on [0, 1] with uniform steps
        let run = |h: f64| {
            let ctrl = StepControl {
                fixed_step: Some(h),
                ..Default::default()
            };
            let (y, _) = integrate(
                |_, y, dy| {
                    dy[0] = y[0];
                    Ok(())
                },
                0.0,
                &[1.0],
                1.0,
                &ctrl,
                &[],
                no_bound,
                |_, _, _| Ok(()),
            )
            .unwrap();
            (y[0] - 1f64.exp()).abs()
        };
        let order = (run(0.1) / run(0.05)).log2();
        assert!(order > 4.5, "observed order {order}");
    }

    #[test]
    fn stability_bound_caps_steps() {
        let ctrl = StepControl::with_tol(1e-3);
        let mut last = 0.0;
        let mut max_h = 0.0f64;
        integrate(
            |_, _, dy| {
                dy[0] = 0.0;
                Ok(())
            },
            0.0,
            &[1.0],
            1.0,
            &ctrl,
            &[],
            |_| 0.01,
            |t, _, _| {
                max_h = max_h.max(t - last);
                last = t;
                Ok(())
            },
        )
        .unwrap();
        assert!(max_h <= 0.01 + 1e-12);
    }

    #[test]
    fn underflowing_bound_is_reported() {
        let ctrl = StepControl::with_tol(1e-6);
        let err = integrate(
            |_, _, dy| {
                dy[0] = 0.0;
                Ok(())
            },
            0.0,
            &[1.0],
            1.0,
            &ctrl,
            &[],
            |t| if t > 0.5 { 1e-15 } else { 0.1 },
            |_, _, _| Ok(()),
        )
        .unwrap_err();
        match err {
            Error::CflUnderflow { reached, .. } => assert!(reached >= 0.4 && reached <= 0.6),
            other => panic!("unexpected {other:?}"),
        }
    }
}
