use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use bolza_core::fields::Bump;
use bolza_core::group::GroupElement;
use bolza_core::quadrature::OctagonQuadrature;
use bolza_core::sampling::{batch_rng, sample_liouville};
use bolza_core::stats::mean_std;
use bolza_core::tensor::{
    binom, c1_norm, divergence_fiber, fiber_constant, fiber_polynomial, from_fourier, random_tensor_bumps, rotate_components,
    solenoidal_project, sym_derivative_fiber, tensor_dot, to_fourier, TensorBump,
};
use bolza_core::{build_bolza, Complex64, Flow, LabError, PhasePoint, SurfaceGroup, SymmetricTensor};
use proptest::prelude::*;

fn grp() -> Arc<SurfaceGroup> {
    Arc::new(build_bolza().unwrap())
}

fn probes() -> Vec<Complex64> {
    vec![
        Complex64::new(0.1, 0.2),
        Complex64::new(-0.35, 0.05),
        Complex64::new(0.42, -0.3),
        Complex64::new(-0.05, -0.55),
        Complex64::new(0.6, 0.1),
    ]
}

fn random_tensor(g: &Arc<SurfaceGroup>, m: usize, seed: u64, n: usize) -> SymmetricTensor {
    let mut rng = batch_rng(seed, m as u64);
    let bumps = random_tensor_bumps(&mut rng, g, m, n);
    SymmetricTensor::periodic_bumps(g.clone(), m, &format!("t{m}"), bumps)
}

fn norm(c: &[f64]) -> f64 {
    tensor_dot(c, c).sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d)
}

#[test]
fn trace_examples() {
    let g = grp();
    let z = Complex64::new(0.2, 0.1);
    assert_eq!(SymmetricTensor::metric(g.clone()).trace().unwrap().components(z), vec![2.0]);
    let e11 = SymmetricTensor::from_fn(g.clone(), 2, "e11", |_| vec![1.0, 0.0, 0.0]);
    assert_eq!(e11.trace().unwrap().components(z), vec![1.0]);
    for m in 2..=4 {
        let f = random_tensor(&g, m, 3, 4);
        let tf = f.trace_free_part();
        for p in probes() {
            assert!(norm(&tf.trace().unwrap().components(p)) < 1e-10);
        }
    }
    let f1 = random_tensor(&g, 1, 3, 2);
    assert!(matches!(f1.trace(), Err(LabError::Degree(_))));
}

#[test]
fn trace_matches_full_index_contraction() {
    let g = grp();
    let f = random_tensor(&g, 3, 8, 4);
    let t = f.trace().unwrap();
    for z in probes() {
        for a in [1u8, 2] {
            let direct = f.full_component(z, &[1, 1, a]) + f.full_component(z, &[2, 2, a]);
            assert!((direct - t.full_component(z, &[a])).abs() < 1e-14);
        }
        assert_eq!(f.full_component(z, &[1, 2, 1]), f.full_component(z, &[2, 1, 1]));
    }
}

#[test]
fn pi_star_up_examples() {
    let g = grp();
    let metric = SymmetricTensor::metric(g.clone()).pi_star_up();
    let e1 = SymmetricTensor::from_fn(g.clone(), 1, "e1", |_| vec![1.0, 0.0]).pi_star_up();
    let h = random_tensor(&g, 0, 1, 3);
    let h_up = h.pi_star_up();
    for z in probes() {
        for th in [0.0, 0.7, 2.5, 4.0] {
            let p = PhasePoint::from_disk(z, th, &g).unwrap();
            assert!((metric.eval(&p).re - 1.0).abs() < 1e-14);
            assert!((e1.eval(&p).re - th.cos()).abs() < 1e-12);
            assert!((h_up.eval(&p).re - h.components(z)[0]).abs() < 1e-12);
        }
    }
}

#[test]
fn pi_star_up_fiber_support() {
    let g = grp();
    for m in 0..=4 {
        let u = random_tensor(&g, m, 11, 5).pi_star_up();
        for z in probes() {
            let p = PhasePoint::from_disk(z, 0.3, &g).unwrap();
            let mut on = 0.0;
            let mut off = 0.0;
            for (k, c) in u.spectrum(&p) {
                if k.unsigned_abs() as usize <= m && (k - m as i64) % 2 == 0 {
                    on += c.norm_sqr();
                } else {
                    off += c.norm_sqr();
                }
            }
            assert!(off <= 1e-12 * on.max(1e-300), "m={m} off={off} on={on}");
        }
    }
}

#[test]
fn periodic_tensors_are_gamma_invariant() {
    let g = grp();
    let f = random_tensor(&g, 3, 5, 4);
    for z in probes() {
        for k in [0usize, 3, 6] {
            let gamma = g.generators[k] * g.generators[(k + 1) % 8];
            let w = gamma.act_disk(z);
            let pulled = rotate_components(&f.components(w), gamma.rotation_at(z));
            assert!(diff(&pulled, &f.components(z)) < 1e-10);
        }
    }
}

#[test]
fn sym_derivative_of_parallel_tensors_vanishes() {
    let g = grp();
    let c = SymmetricTensor::from_fn(g.clone(), 0, "1", |_| vec![1.0]);
    let metric = SymmetricTensor::metric(g.clone());
    for z in probes() {
        assert!(norm(&c.sym_derivative().components(z)) < 1e-8);
        assert!(norm(&metric.sym_derivative().components(z)) < 1e-6);
        assert!(norm(&metric.divergence().unwrap().components(z)) < 1e-6);
    }
}

#[test]
fn gradient_matches_directional_derivatives() {
    // (Dh)(v) = d/dt h(γ_v(t)) at t = 0: compare against flows in two directions.
    let g = grp();
    let h = random_tensor(&g, 0, 2, 4);
    let dh = h.sym_derivative();
    for z in probes() {
        let d = dh.components(z);
        for (th, expect) in [(0.0, d[0]), (PI / 2.0, d[1])] {
            let p = PhasePoint::from_disk(z, th, &g).unwrap();
            let s = 1e-4;
            let a = p.flow(s, Flow::Geodesic, &g).unwrap();
            let b = p.flow(-s, Flow::Geodesic, &g).unwrap();
            let fd = (h.components(a.z)[0] - h.components(b.z)[0]) / (2.0 * s);
            assert!((fd - expect).abs() < 1e-6, "{fd} {expect}");
        }
    }
}

#[test]
fn christoffel_and_fiber_routes_agree_for_d() {
    let g = grp();
    for m in 0..=3 {
        let f = random_tensor(&g, m, 20, 5);
        let d = f.sym_derivative();
        let scale = c1_norm(&f, &probes());
        for z in probes() {
            let a = d.components(z);
            let b = sym_derivative_fiber(&f, z);
            assert!(diff(&a, &b) < 1e-4 * scale, "m={m} {a:?} {b:?}");
            assert!(diff(&a, &b) < 1e-6 * scale, "m={m} {}", diff(&a, &b));
        }
    }
}

#[test]
fn christoffel_and_fiber_routes_agree_for_divergence() {
    let g = grp();
    for m in 1..=4 {
        let f = random_tensor(&g, m, 21, 5);
        let d = f.divergence().unwrap();
        let scale = c1_norm(&f, &probes());
        for z in probes() {
            let a = d.components(z);
            let b = divergence_fiber(&f, z);
            assert!(diff(&a, &b) < 1e-5 * scale, "m={m} {a:?} {b:?}");
        }
    }
    let h = random_tensor(&g, 0, 22, 4);
    let ddh = h.sym_derivative();
    for z in probes() {
        let a = ddh.divergence().unwrap().components(z);
        let b = divergence_fiber(&ddh, z);
        assert!(diff(&a, &b) < 1e-5 * (1.0 + norm(&a)), "{a:?} {b:?}");
    }
    assert!(matches!(h.divergence(), Err(LabError::Degree(_))));
}

#[test]
fn splitting_identity_on_trace_free_tensors() {
    // X π^*f = π^*(tf Df) − ½ π^*(D*f) for trace-free f.
    let g = grp();
    for m in 1..=3 {
        let f = random_tensor(&g, m, 30, 4).trace_free_part();
        let u = f.pi_star_up();
        let tf_d = f.sym_derivative().trace_free_part();
        let div = f.divergence().unwrap();
        let scale = c1_norm(&f, &probes());
        for z in probes() {
            let a = tf_d.components(z);
            let b = div.components(z);
            for th in [0.2, 1.9, 4.4] {
                let p = PhasePoint::from_disk(z, th, &g).unwrap();
                // the fiber polynomials are evaluated in the frame at z
                let dir = Complex64::from_polar(1.0, th);
                let xu = u.derivative_at(&p, Flow::Geodesic).re;
                let rhs = fiber_polynomial(&a, dir) - 0.5 * fiber_polynomial(&b, dir);
                assert!((xu - rhs).abs() < 1e-4 * scale, "m={m} {xu} {rhs}");
            }
        }
    }
}

#[test]
fn trace_of_d_versus_divergence() {
    // For trace-free f: −𝒯(Df) = 2/(m+1) · D*f, so −𝒯∘D and −𝒯∇ agree only at m = 1.
    let g = grp();
    for m in 1..=4 {
        let f = random_tensor(&g, m, 40, 4).trace_free_part();
        let d = f.sym_derivative();
        let t = if m + 1 >= 2 { Some(d.trace().unwrap()) } else { None };
        let div = f.divergence().unwrap();
        for z in probes() {
            let lhs: Vec<f64> = t.as_ref().unwrap().components(z).iter().map(|x| -x).collect();
            let rhs: Vec<f64> = div.components(z).iter().map(|x| x * 2.0 / (m as f64 + 1.0)).collect();
            assert!(diff(&lhs, &rhs) < 1e-7 * (1.0 + norm(&rhs)), "m={m}");
            if m > 1 {
                let dz = div.components(z);
                assert!(diff(&lhs, &dz) >= 0.3 * norm(&dz));
            }
        }
    }
}

#[test]
fn adjointness_by_quadrature() {
    let g = grp();
    let quad = OctagonQuadrature::new(&g, 24, 32);
    for m in 0..=2 {
        let f = random_tensor(&g, m, 50, 4);
        let h = random_tensor(&g, m + 1, 51, 4);
        let lhs = quad.integrate(|z| tensor_dot(&f.sym_derivative().components(z), &h.components(z)));
        let rhs = quad.integrate(|z| tensor_dot(&f.components(z), &h.divergence().unwrap().components(z)));
        assert!((lhs - rhs).abs() < 1e-6 * (lhs.abs() + rhs.abs() + 1.0), "m={m} {lhs} {rhs}");
    }
}

#[test]
fn adjointness_by_monte_carlo() {
    let g = grp();
    let f = random_tensor(&g, 1, 60, 4);
    let h = random_tensor(&g, 2, 61, 4);
    let df = f.sym_derivative();
    let dh = h.divergence().unwrap();
    let pts = sample_liouville(20_000, 7, &g);
    let xs: Vec<f64> = pts
        .iter()
        .map(|p| tensor_dot(&df.components(p.z), &h.components(p.z)) - tensor_dot(&f.components(p.z), &dh.components(p.z)))
        .collect();
    let (mu, sd) = mean_std(&xs);
    assert!(mu.abs() < 3.0 * sd / (xs.len() as f64).sqrt() + 1e-12, "{mu} {sd}");
}

#[test]
fn pi_star_down_of_scalar() {
    let g = grp();
    let h = random_tensor(&g, 0, 70, 3);
    let back = SymmetricTensor::pi_star_down(&h.pi_star_up(), 0);
    for z in probes() {
        assert!((back.components(z)[0] - TAU * h.components(z)[0]).abs() < 1e-12);
    }
}

#[test]
fn pi_star_down_is_fiberwise_adjoint() {
    let g = grp();
    let mut rng = batch_rng(71, 0);
    let parts = bolza_core::fields::random_mode_bumps(&mut rng, &g, 5, 4, true);
    let u = bolza_core::fields::BumpField::new(&g, parts).into_field(g.clone(), "u");
    for m in 0..=4 {
        let psi = random_tensor(&g, m, 72, 4);
        let down = SymmetricTensor::pi_star_down(&u, m);
        for z in probes() {
            let lhs = tensor_dot(&down.components(z), &psi.components(z));
            // brute-force fiber integral of u · π^*ψ
            let n = 2000;
            let pc = psi.components(z);
            let mut rhs = 0.0;
            for q in 0..n {
                let th = TAU * (q as f64 + 0.5) / n as f64;
                let p = PhasePoint::from_disk(z, th, &g).unwrap();
                rhs += u.eval(&p).re * fiber_polynomial(&pc, Complex64::from_polar(1.0, th));
            }
            rhs *= TAU / n as f64;
            assert!((lhs - rhs).abs() < 1e-8 * (1.0 + lhs.abs()), "m={m} {lhs} {rhs}");
        }
    }
}

#[test]
fn fiber_constant_matches_brute_force_oracle() {
    let g = grp();
    for m in 1..=5 {
        // oracle: c_m = ∫ cos(mθ) cos^m θ dθ by a midpoint rule
        let n = 20_000;
        let oracle: f64 = (0..n)
            .map(|q| {
                let th = TAU * (q as f64 + 0.5) / n as f64;
                (m as f64 * th).cos() * th.cos().powi(m as i32)
            })
            .sum::<f64>()
            * TAU
            / n as f64;
        assert!((oracle - fiber_constant(m)).abs() < 1e-10, "m={m} {oracle}");

        // measured on a pure mode q = bump · cos(m θ + 0.4)
        let b = Bump::new(Complex64::new(0.15, -0.1), 1.1);
        let per = Arc::new(bolza_core::fields::PeriodicModeBump::new(&g, bolza_core::fields::pure_mode_bump(b.center, b.radius, m as i32)));
        let q = bolza_core::FiberField::new(g.clone(), m, "q", move |p| {
            Complex64::new((per.eval(p) * Complex64::from_polar(1.0, 0.4)).re, 0.0)
        });
        let back = SymmetricTensor::pi_star_down(&q, m).pi_star_up();
        let mut ratios = Vec::new();
        for z in [Complex64::new(0.1, 0.0), Complex64::new(0.3, 0.2), Complex64::new(-0.2, -0.3)] {
            for th in [0.3, 1.3] {
                let p = PhasePoint::from_disk(z, th, &g).unwrap();
                let qv = q.eval(&p).re;
                if qv.abs() > 1e-7 {
                    ratios.push(back.eval(&p).re / qv);
                }
            }
        }
        assert!(ratios.len() >= 3);
        for r in &ratios {
            assert!((r - oracle).abs() < 1e-6, "m={m} {r} {oracle}");
        }
    }
}

#[test]
fn solenoidal_projection_of_exact_potential() {
    let g = grp();
    let quad = OctagonQuadrature::new(&g, 8, 10);
    let mut rng = batch_rng(80, 0);
    let basis: Vec<SymmetricTensor> = (0..5)
        .map(|i| SymmetricTensor::periodic_bumps(g.clone(), 0, &format!("q{i}"), random_tensor_bumps(&mut rng, &g, 0, 1)))
        .collect();
    let coeffs = [0.7, -1.2, 0.4, 0.0, 2.0];
    let terms: Vec<(f64, &SymmetricTensor)> = coeffs.iter().cloned().zip(basis.iter()).collect();
    let h = SymmetricTensor::linear_combination(&terms);
    let f = h.sym_derivative();
    let proj = solenoidal_project(&f, &basis, &quad).unwrap();
    let bias = 1e-8 * proj.condition_number;
    assert!(proj.potential_norm_ratio > 1.0 - 1e-6 - bias);
    let fnorm = quad.integrate(|z| tensor_dot(&f.components(z), &f.components(z))).sqrt();
    let snorm = quad.integrate(|z| tensor_dot(&proj.f_sol.components(z), &proj.f_sol.components(z))).sqrt();
    assert!(snorm / fnorm < 1e-6 + bias, "{} cond={}", snorm / fnorm, proj.condition_number);
    for (c, e) in proj.coefficients.iter().zip(coeffs) {
        assert!((c - e).abs() < 1e-4, "{c} {e}");
    }
}

#[test]
fn solenoidal_projection_of_random_tensor_is_orthogonal() {
    let g = grp();
    let quad = OctagonQuadrature::new(&g, 8, 10);
    let mut rng = batch_rng(81, 0);
    let basis: Vec<SymmetricTensor> = (0..4)
        .map(|i| SymmetricTensor::periodic_bumps(g.clone(), 1, &format!("q{i}"), random_tensor_bumps(&mut rng, &g, 1, 1)))
        .collect();
    let f = random_tensor(&g, 2, 82, 4);
    let proj = solenoidal_project(&f, &basis, &quad).unwrap();
    assert!(proj.orthogonality_residual < 1e-6, "{}", proj.orthogonality_residual);
}

#[test]
fn divergence_free_one_form_has_no_potential_part() {
    let g = grp();
    let quad = OctagonQuadrature::new(&g, 8, 10);
    let h = random_tensor(&g, 0, 90, 3);
    let f = h.sym_derivative().hodge_star().unwrap();
    let div = f.divergence().unwrap();
    for z in probes() {
        assert!(div.components(z)[0].abs() < 1e-6);
        // fiber route: the mode +1 part is annihilated by η₋ up to its partner
        assert!(divergence_fiber(&f, z)[0].abs() < 1e-6);
    }
    let mut rng = batch_rng(91, 0);
    let basis: Vec<SymmetricTensor> = (0..6)
        .map(|i| SymmetricTensor::periodic_bumps(g.clone(), 0, &format!("q{i}"), random_tensor_bumps(&mut rng, &g, 0, 1)))
        .collect();
    let proj = solenoidal_project(&f, &basis, &quad).unwrap();
    assert!(proj.potential_norm_ratio < 0.05, "{}", proj.potential_norm_ratio);
}

#[test]
fn duplicated_basis_is_ill_conditioned() {
    let g = grp();
    let quad = OctagonQuadrature::new(&g, 6, 8);
    let b = TensorBump { bump: Bump::new(Complex64::new(0.1, 0.1), 1.0), comps: vec![1.0] };
    let q = SymmetricTensor::periodic_bumps(g.clone(), 0, "q", vec![b.clone()]);
    let f = random_tensor(&g, 1, 92, 2);
    let err = solenoidal_project(&f, &[q.clone(), q], &quad).unwrap_err();
    assert!(matches!(err, LabError::IllConditioned(_)));
    let f0 = random_tensor(&g, 0, 93, 2);
    assert!(matches!(solenoidal_project(&f0, &[], &quad), Err(LabError::Degree(_))));
}

#[test]
fn rotation_invariance_of_pairing_and_group_action() {
    let g = grp();
    let f = random_tensor(&g, 2, 95, 3);
    let gamma = GroupElement::from_disk_frame(Complex64::new(0.2, -0.4), 0.9);
    // pulling back by an isometry preserves pointwise norms
    let z = Complex64::new(0.05, 0.1);
    let c = f.components(gamma.act_disk(z));
    let pulled = rotate_components(&c, gamma.rotation_at(z));
    assert!((norm(&pulled) - norm(&c)).abs() < 1e-12);
}

fn comps(m: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0..1.0f64, m + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fourier_round_trip(f in (0usize..6).prop_flat_map(comps)) {
        let back = from_fourier(&to_fourier(&f));
        for (a, b) in f.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_shifts_fiber_polynomial(f in (0usize..6).prop_flat_map(comps), phi in 0.0..TAU, th in 0.0..TAU) {
        let r = rotate_components(&f, Complex64::from_polar(1.0, phi));
        let lhs = fiber_polynomial(&r, Complex64::from_polar(1.0, th));
        let rhs = fiber_polynomial(&f, Complex64::from_polar(1.0, th + phi));
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!((tensor_dot(&r, &r) - tensor_dot(&f, &f)).abs() < 1e-11);
    }

    #[test]
    fn fiber_l2_norm_of_trace_free_tensor(f in (1usize..6).prop_flat_map(comps)) {
        // For modes ±m only: ∫ |π^*f|² dθ = c_m · |f|².
        let m = f.len() - 1;
        let mut four = to_fourier(&f);
        for c in four.iter_mut().take(m).skip(1) {
            *c = Complex64::new(0.0, 0.0);
        }
        let tf = from_fourier(&four);
        let n = 64;
        let integral: f64 = (0..n)
            .map(|q| fiber_polynomial(&tf, Complex64::from_polar(1.0, TAU * q as f64 / n as f64)).powi(2))
            .sum::<f64>() * TAU / n as f64;
        prop_assert!((integral - fiber_constant(m) * tensor_dot(&tf, &tf)).abs() < 1e-10);
        prop_assert!(binom(m, 0) == 1.0);
    }
}
