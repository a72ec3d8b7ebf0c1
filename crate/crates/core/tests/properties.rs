use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use jeans::background::{background_state, friedmann_residual, PhysicalParams};
use jeans::direct::{integrate_direct, DirectRunConfig};
use jeans::fuchsian::{assemble_matrices, from_fuchsian, integrate, to_fuchsian, FuchsianConfig, FuchsianState};
use jeans::initial::{random_band_limited, single_mode_data};
use jeans::modes::{closed_form_mode, integrate_mode_ode, jeans_classify, mode_exponents, JeansClass, ModeSpec};
use jeans::ode::StepControl;
use jeans::spectral::{SpectralField, TorusGrid};

fn field(n: usize, seed: u64, k_max: f64) -> SpectralField {
    let g = TorusGrid::cube(n).unwrap();
    random_band_limited(g, k_max, &mut ChaCha20Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(seed in any::<u64>()) {
        let f = field(8, seed, 4.0);
        let coeff: f64 = f.coeffs().iter().map(|z| z.norm_sqr()).sum();
        let s = f.samples();
        let grid = s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64;
        prop_assert!((coeff - grid).abs() <= 1e-12 * grid);
    }

    #[test]
    fn laplacian_eigenrelation(k0 in -4i64..4, k1 in -4i64..4, k2 in -4i64..4, period in 0.5f64..10.0) {
        let g = TorusGrid::new(8, period).unwrap();
        let amp = Complex64::new(0.4, 0.9);
        let f = SpectralField::plane_wave(g, [k0, k1, k2], amp).unwrap();
        let k2sum = (k0 * k0 + k1 * k1 + k2 * k2) as f64;
        let got = f.laplacian().coeff([k0, k1, k2]);
        prop_assert_eq!(got, amp * (-k2sum * g.wavenumber_scale().powi(2)));
        let w = 2.0 * std::f64::consts::PI / period;
        prop_assert!((got - amp * (-k2sum * w * w)).norm() <= 1e-14 * (k2sum * w * w).max(1.0));
    }

    #[test]
    fn classifier_matches_exponents(x in -0.6944f64..=0.0) {
        let params = PhysicalParams::default();
        let mode = ModeSpec::with_product(x, params.kappa_tilde()).unwrap();
        let (mu_plus, mu_minus) = mode_exponents(&mode).unwrap();
        prop_assert!(mu_plus >= mu_minus);
        let cls = jeans_classify(&mode, &params).unwrap();
        if (x + 2.0 / 3.0).abs() > 1e-12 {
            prop_assert_eq!(cls == JeansClass::Growing, mu_plus > 0.0);
        }
    }

    #[test]
    fn matrix_identities(gamma in 1.0001f64..=3.0, kt in 1e-6f64..=4.0) {
        prop_assert!(assemble_matrices(gamma, kt).unwrap().identity_defects().max() <= 1e-15);
    }

    #[test]
    fn friedmann_residuals(log_t in 0.0f64..(1e4f64).ln(), big_g in 0.05f64..10.0) {
        let p = PhysicalParams::new(big_g, 1.0, 4.0 / 3.0).unwrap();
        let t = log_t.exp();
        let (r1, r2) = friedmann_residual(t, &p).unwrap();
        let bg = background_state(t, &p).unwrap();
        prop_assert!(r1.abs() <= 1e-12 * 3.0 * bg.hubble * bg.rho0);
        prop_assert!(r2.abs() <= 1e-12 * bg.hubble * bg.hubble);
        let c = background_state(1.0, &p).unwrap().rho0;
        prop_assert!((bg.rho0 * t * t - c).abs() <= 1e-14 * c);
    }

    #[test]
    fn kappa_tilde_monotonicity(big_g in 1.0 / (6.0 * std::f64::consts::PI)..20.0, gamma in 1.01f64..3.0, kappa in 0.1f64..5.0) {
        let kt = |k: f64, g: f64| PhysicalParams::new(big_g, k, g).unwrap().kappa_tilde();
        prop_assert!(kt(kappa * 1.01, gamma) > kt(kappa, gamma));
        // in γ the direction flips where γ ln(6πG) = 1
        let slope = 1.0 - gamma * (6.0 * std::f64::consts::PI * big_g).ln();
        let dg = 1e-6;
        let diff = kt(kappa, gamma + dg) - kt(kappa, gamma);
        if slope.abs() > 1e-3 {
            prop_assert_eq!(diff > 0.0, slope > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn closed_form_matches_ode(x in -0.69f64..=0.0) {
        let mode = ModeSpec::with_product(x, 0.5).unwrap();
        let traj = integrate_mode_ode(&mode, 100.0, 1e-10).unwrap();
        for (t, f) in traj.t.iter().zip(&traj.f) {
            let exact = closed_form_mode(&mode, *t).unwrap().f;
            prop_assert!((f - exact).abs() <= 1e-8 * exact.abs());
        }
    }
}

#[test]
fn sampled_embedding_constant() {
    // sup|f| ≤ Σ|ĉ(k)| ≤ (Σ (1+|k|²)^{-3})^{1/2} ‖f‖_{H³}
    let g = TorusGrid::cube(16).unwrap();
    let bound: f64 = (0..g.len())
        .map(|i| {
            let k = g.mode(i);
            (1.0 + (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).powi(-3)
        })
        .sum::<f64>()
        .sqrt();
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let f = field(16, seed, 4.0);
        worst = worst.max(f.sup_norm() / f.sobolev_norm(3.0));
    }
    println!("empirical embedding constant {worst:.4} (analytic bound {bound:.4})");
    assert!(worst.is_finite() && worst <= bound);
}

#[test]
fn sampled_moser_constant() {
    let g = TorusGrid::cube(16).unwrap().with_dealias(false);
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let f = random_band_limited(g, 4.0, &mut rng);
        let h = random_band_limited(g, 4.0, &mut rng);
        let ratio = f.product(&h).sobolev_norm(3.0) / (f.sobolev_norm(3.0) * h.sobolev_norm(3.0));
        worst = worst.max(ratio);
    }
    println!("empirical Moser constant {worst:.4}");
    assert!(worst.is_finite() && worst > 0.0 && worst < 10.0);
}

#[test]
fn torus_growing_modes() {
    let p = PhysicalParams::default();
    for k0 in -3i64..=3 {
        for k1 in -3i64..=3 {
            for k2 in -3i64..=3 {
                let k2sum = k0 * k0 + k1 * k1 + k2 * k2;
                if k2sum == 0 {
                    continue;
                }
                let mode = ModeSpec::from_lattice([k0, k1, k2], &p).unwrap();
                let growing = jeans_classify(&mode, &p).unwrap() == JeansClass::Growing;
                assert_eq!(growing, k2sum == 1, "k = {:?}", [k0, k1, k2]);
            }
        }
    }
}

#[test]
fn amplitude_continuous_across_critical() {
    let amp = |x: f64| {
        let mode = ModeSpec::with_product(x, 0.5).unwrap();
        let traj = integrate_mode_ode(&mode, 100.0, 1e-11).unwrap();
        traj.amp(traj.len() - 1)
    };
    let c = -2.0 / 3.0;
    let xs: Vec<f64> = (-20..=20).map(|i| c + i as f64 * 1e-4).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| amp(x)).collect();
    let jumps: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let max = jumps.iter().cloned().fold(0.0, f64::max);
    let min = jumps.iter().cloned().fold(f64::INFINITY, f64::min);
    // a smooth sweep has near-uniform increments
    assert!(max <= 1.5 * min + 1e-9, "jumps between {min:e} and {max:e}");
}

#[test]
fn spatial_terms_cancel_in_energy() {
    // d(E²)/dτ from the spatial part alone should vanish for the weighted energy
    let g = TorusGrid::cube(8).unwrap();
    let p = PhysicalParams::new(1.0, 0.8, 1.5).unwrap();
    let kt = p.kappa_tilde();
    let m = assemble_matrices(p.gamma, kt).unwrap();
    let s = 3.0;
    for seed in 0..10 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut st = FuchsianState::zeros(g, 0.3, 1.0);
        st.u0 = random_band_limited(g, 3.0, &mut rng);
        for i in 0..3 {
            st.ui[i] = random_band_limited(g, 3.0, &mut rng);
        }
        st.u = random_band_limited(g, 3.0, &mut rng);
        let comps = st.components();
        let b0_inv = m.b0_inv();
        let mut spatial: Vec<SpectralField> = (0..5).map(|_| SpectralField::zeros(g)).collect();
        for (axis, b) in m.bi.iter().enumerate() {
            for row in 0..5 {
                for col in 0..5 {
                    if b[row][col] != 0.0 {
                        let d = comps[col].derivative(axis);
                        spatial[row] = spatial[row].axpy(-b0_inv[row][row] * b[row][col], &d);
                    }
                }
            }
        }
        let weights = [1.0, kt, kt, kt, 1.0];
        let inner = |a: &SpectralField, b: &SpectralField| -> f64 {
            a.coeffs()
                .iter()
                .zip(b.coeffs())
                .enumerate()
                .map(|(i, (x, y))| {
                    let k = g.mode(i);
                    let w = (1.0 + (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).powf(s);
                    (x.conj() * y).re * w
                })
                .sum()
        };
        let mut total = 0.0;
        let mut scale = 0.0;
        for c in 0..5 {
            total += weights[c] * inner(comps[c], &spatial[c]);
            scale += weights[c] * inner(comps[c], comps[c]).sqrt() * inner(&spatial[c], &spatial[c]).sqrt();
        }
        assert!(total.abs() <= 1e-10 * scale, "seed {seed}: {total:e} vs {scale:e}");
    }
}

fn fuchsian_gap(amplitude: f64) -> f64 {
    let g = TorusGrid::cube(8).unwrap();
    let p = PhysicalParams::default();
    let m = assemble_matrices(p.gamma, p.kappa_tilde()).unwrap();
    let d = single_mode_data(g, 1.0, [1, 0, 1], amplitude);
    let s0 = to_fuchsian(&d, 1.0, &p).unwrap();
    let mut cfg = FuchsianConfig::new(p);
    cfg.tau_min = 0.1;
    cfg.ctrl = StepControl::with_tol(1e-12);
    let lin = integrate(&s0, &m, &cfg).unwrap();
    cfg.nonlinear = true;
    let nl = integrate(&s0, &m, &cfg).unwrap();
    nl.final_state()
        .components()
        .iter()
        .zip(lin.final_state().components())
        .map(|(a, b)| a.sub(b).sobolev_norm_sq(0.0))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn fuchsian_nonlinear_gap_is_quadratic() {
    let gaps: Vec<f64> = [1e-2, 5e-3, 2.5e-3].iter().map(|&a| fuchsian_gap(a)).collect();
    for w in gaps.windows(2) {
        let r = w[0] / w[1];
        assert!((3.5..=4.5).contains(&r), "ratio {r}, gaps {gaps:?}");
    }
}

#[test]
fn nonlinear_paths_agree() {
    // the Fuchsian and direct nonlinear runs describe the same solution
    let g = TorusGrid::cube(8).unwrap();
    let p = PhysicalParams::new(1.0, 1.0, 5.0 / 3.0).unwrap();
    let d = single_mode_data(g, 1.0, [1, 1, 0], 0.05);
    let mut dc = DirectRunConfig::new(p, g, 10.0);
    dc.nonlinear = true;
    dc.tol = 1e-11;
    let direct = integrate_direct(&dc, &d).unwrap();
    let m = assemble_matrices(p.gamma, p.kappa_tilde()).unwrap();
    let mut fc = FuchsianConfig::new(p);
    fc.tau_min = 0.1;
    fc.nonlinear = true;
    fc.ctrl = StepControl::with_tol(1e-11);
    let f = integrate(&to_fuchsian(&d, 1.0, &p).unwrap(), &m, &fc).unwrap();
    let fd = from_fuchsian(f.final_state()).unwrap();
    let a = &direct.final_state().rho;
    assert!(fd.rho.sub(a).sup_norm() <= 1e-7 * a.sup_norm());
}

fn embed(f: &SpectralField, fine: TorusGrid) -> SpectralField {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); fine.len()];
    let coarse = *f.grid();
    let half = coarse.n() as i64 / 2;
    for i in 0..coarse.len() {
        let k = coarse.mode(i);
        if k.iter().any(|&kd| kd == -half) {
            continue;
        }
        coeffs[fine.lattice_index(k).unwrap()] = f.coeffs()[i];
    }
    SpectralField::from_coeffs(fine, coeffs).unwrap()
}

#[test]
fn grid_refinement_is_spectral() {
    let p = PhysicalParams::default();
    let coarse = TorusGrid::cube(8).unwrap();
    let fine = TorusGrid::cube(16).unwrap();
    for nonlinear in [false, true] {
        let run = |g: TorusGrid| {
            let d = single_mode_data(g, 1.0, [1, 0, 0], 1e-3);
            let mut c = DirectRunConfig::new(p, g, 10.0);
            c.nonlinear = nonlinear;
            c.tol = 1e-12;
            integrate_direct(&c, &d).unwrap().final_state().rho.clone()
        };
        let a = embed(&run(coarse), fine);
        let b = run(fine);
        let rel = a.sub(&b).sup_norm() / b.sup_norm();
        assert!(rel <= 1e-8, "nonlinear {nonlinear}: {rel:e}");
    }
}
