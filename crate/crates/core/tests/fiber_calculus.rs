use std::f64::consts::TAU;
use std::sync::Arc;

use bolza_core::fiber::{ModeCoefficients, Sign};
use bolza_core::fields::{pure_mode_bump, random_mode_bumps, BumpField};
use bolza_core::sampling::{batch_rng, sample_liouville};
use bolza_core::{build_bolza, disk, Complex64, FiberField, Flow, PhasePoint, SurfaceGroup};
use proptest::prelude::*;

fn surface() -> Arc<SurfaceGroup> {
    Arc::new(build_bolza().unwrap())
}

fn random_field(grp: &Arc<SurfaceGroup>, seed: u64, k: usize) -> FiberField {
    let mut rng = batch_rng(seed, 77);
    let parts = random_mode_bumps(&mut rng, grp, k, 3, false);
    BumpField::new(grp, parts).into_field(grp.clone(), "u")
}

fn max_abs(xs: impl Iterator<Item = Complex64>) -> f64 {
    xs.map(|x| x.norm()).fold(0.0, f64::max)
}

#[test]
fn derivatives_of_constants_vanish() {
    let grp = surface();
    let one = FiberField::constant(grp.clone(), Complex64::new(1.0, 0.0));
    let probes = sample_liouville(50, 1, &grp);
    for w in Flow::ALL {
        let d = one.derive(w);
        assert!(max_abs(probes.iter().map(|p| d.eval(p))) < 1e-10);
    }
    for s in [Sign::Plus, Sign::Minus] {
        let e = one.eta(s);
        assert!(max_abs(probes.iter().map(|p| e.eval(p))) < 1e-10);
    }
}

#[test]
fn rotation_derivative_of_a_mode() {
    let grp = surface();
    let u = BumpField::new(&grp, vec![pure_mode_bump(Complex64::new(0.1, 0.2), 1.1, 3)]).into_field(grp.clone(), "m3");
    let vu = u.derive(Flow::Rotation);
    for p in sample_liouville(200, 2, &grp) {
        let a = u.eval(&p);
        if a.norm() < 1e-3 {
            continue;
        }
        let rel = (vu.eval(&p) - Complex64::new(0.0, 3.0) * a).norm() / a.norm();
        assert!(rel < 1e-6, "{rel}");
    }
    let probes = sample_liouville(100, 4, &grp);
    let mc = ModeCoefficients::sample(&vu, 3, &probes);
    let base = ModeCoefficients::sample(&u, 3, &probes);
    for (x, y) in mc.values.iter().zip(&base.values) {
        assert!((x - Complex64::new(0.0, 3.0) * y).norm() < 1e-6 * (1.0 + y.norm()));
    }
}

#[test]
fn eta_sum_is_x() {
    let grp = surface();
    let u = random_field(&grp, 3, 4);
    let x = u.derive(Flow::Geodesic);
    let ep = u.eta(Sign::Plus);
    let em = u.eta(Sign::Minus);
    for p in sample_liouville(30, 5, &grp) {
        assert!((ep.eval(&p) + em.eval(&p) - x.eval(&p)).norm() < 1e-12 * (1.0 + x.eval(&p).norm()));
    }
}

#[test]
fn eta_plus_shifts_mode_two_to_three() {
    let grp = surface();
    let u = BumpField::new(&grp, vec![pure_mode_bump(Complex64::new(-0.2, 0.3), 1.2, 2)]).into_field(grp.clone(), "m2");
    let e = u.eta(Sign::Plus);
    let em = u.eta(Sign::Minus);
    let mut on = 0.0;
    let mut off = 0.0;
    let mut on_m = 0.0;
    let mut off_m = 0.0;
    for p in sample_liouville(60, 6, &grp) {
        for (k, c) in e.spectrum(&p) {
            if k == 3 { on += c.norm_sqr() } else { off += c.norm_sqr() }
        }
        for (k, c) in em.spectrum(&p) {
            if k == 1 { on_m += c.norm_sqr() } else { off_m += c.norm_sqr() }
        }
    }
    assert!(on > 0.0 && (off / on).sqrt() < 1e-5, "{}", (off / on).sqrt());
    assert!(on_m > 0.0 && (off_m / on_m).sqrt() < 1e-5, "{}", (off_m / on_m).sqrt());
}

#[test]
fn structure_equations() {
    let grp = surface();
    let probes = sample_liouville(12, 7, &grp);
    for seed in 0..3 {
        let u = random_field(&grp, 100 + seed, 8);
        let c2 = u.c2_norm(&probes[..4]);
        let (x, xp, v) = (Flow::Geodesic, Flow::Perpendicular, Flow::Rotation);
        let xv = u.derive(v).derive(x);
        let vx = u.derive(x).derive(v);
        let xpv = u.derive(v).derive(xp);
        let vxp = u.derive(xp).derive(v);
        let xxp = u.derive(xp).derive(x);
        let xpx = u.derive(x).derive(xp);
        for p in &probes {
            let r1 = xv.eval(p) - vx.eval(p) - u.derivative_at(p, xp);
            let r2 = xpv.eval(p) - vxp.eval(p) + u.derivative_at(p, x);
            let r3 = xxp.eval(p) - xpx.eval(p) - u.derivative_at(p, v);
            for r in [r1, r2, r3] {
                assert!(r.norm() < 1e-4 * c2, "{} vs {}", r.norm(), c2);
            }
        }
    }
}

#[test]
fn coordinate_formulas_agree_with_flow_derivatives() {
    // F(x₁, x₂, θ) on the cover with analytic partials; compare against the
    // isothermal-coordinate expressions for X and X⊥.
    let grp = surface();
    let f = |z: Complex64, th: f64| (z.re * 3.0).sin() * (2.0 * th).cos() + z.im * z.im * th.sin();
    let fx1 = |z: Complex64, th: f64| 3.0 * (z.re * 3.0).cos() * (2.0 * th).cos();
    let fx2 = |z: Complex64, th: f64| 2.0 * z.im * th.sin();
    let fth = |z: Complex64, th: f64| -2.0 * (z.re * 3.0).sin() * (2.0 * th).sin() + z.im * z.im * th.cos();
    let u = FiberField::on_cover(grp.clone(), 2, "F", move |p: &PhasePoint| Complex64::new(f(p.z, p.theta), 0.0));
    for (i, p) in sample_liouville(40, 8, &grp).iter().enumerate() {
        let p = PhasePoint::unreduced(p.g.flowed(Flow::Rotation, 0.1 * i as f64));
        let (z, th) = (p.z, p.theta);
        if (th - TAU).abs() < 1e-3 || th < 1e-3 {
            continue;
        }
        let e = (-disk::omega(z)).exp();
        let (w1, w2) = disk::omega_grad(z);
        let (s, c) = th.sin_cos();
        let x = e * (c * fx1(z, th) + s * fx2(z, th) + (-w1 * s + w2 * c) * fth(z, th));
        let xp = -e * (-s * fx1(z, th) + c * fx2(z, th) - (w1 * c + w2 * s) * fth(z, th));
        assert!((u.derivative_at(&p, Flow::Geodesic).re - x).abs() < 1e-6, "X at {i}");
        assert!((u.derivative_at(&p, Flow::Perpendicular).re - xp).abs() < 1e-6, "Xperp at {i}");
    }
}

#[test]
fn commutation_identity_for_szego() {
    let grp = surface();
    let probes = sample_liouville(6, 9, &grp);
    let norm_probes = sample_liouville(400, 10, &grp);
    for seed in 0..10 {
        let u = random_field(&grp, 200 + seed, 8);
        let c1 = u.c1_norm(&norm_probes);
        let xsu = u.szego().derive(Flow::Geodesic);
        let sxu = u.derive(Flow::Geodesic).szego();
        let a = u.mode(0).eta(Sign::Plus);
        let b = u.mode(1).eta(Sign::Minus);
        for p in &probes {
            let r = xsu.eval(p) - sxu.eval(p) + a.eval(p) - b.eval(p);
            assert!(r.norm() < 1e-4 * c1, "{} vs {}", r.norm(), c1);
        }
    }
}

#[test]
fn szego_examples_on_the_cover() {
    let grp = surface();
    let cos = FiberField::on_cover(grp.clone(), 1, "cos", |p: &PhasePoint| Complex64::new(p.theta.cos(), 0.0));
    let s = cos.szego();
    let ss = s.szego();
    for p in sample_liouville(20, 10, &grp) {
        assert!((s.eval(&p) - 0.5 * p.dir).norm() < 1e-12);
        assert!((ss.eval(&p) - s.eval(&p)).norm() < 1e-12);
    }
    let c = FiberField::constant(grp.clone(), Complex64::new(2.0, 1.0));
    let p = sample_liouville(1, 1, &grp)[0];
    assert!(c.szego().eval(&p).norm() < 1e-14);
}

#[test]
fn antipodal_split_examples() {
    let grp = surface();
    let e1 = FiberField::on_cover(grp.clone(), 1, "e1", |p: &PhasePoint| p.dir);
    let (ev, od) = e1.antipodal_split();
    let v = FiberField::on_cover(grp.clone(), 2, "1+e2", |p: &PhasePoint| 1.0 + p.dir * p.dir);
    let (ev2, od2) = v.antipodal_split();
    for p in sample_liouville(20, 12, &grp) {
        assert!(ev.eval(&p).norm() < 1e-13);
        assert!((od.eval(&p) - p.dir).norm() < 1e-13);
        assert!((ev2.eval(&p) - 1.0 - p.dir * p.dir).norm() < 1e-13);
        assert!(od2.eval(&p).norm() < 1e-13);
    }
}

#[test]
fn antipodal_parity_on_the_surface() {
    let grp = surface();
    let u = random_field(&grp, 13, 5);
    let (ev, od) = u.antipodal_split();
    let aev = ev.antipodal_pullback();
    let aod = od.antipodal_pullback();
    for p in sample_liouville(20, 14, &grp) {
        assert!((aev.eval(&p) - ev.eval(&p)).norm() < 1e-10);
        assert!((aod.eval(&p) + od.eval(&p)).norm() < 1e-10);
        assert!((ev.eval(&p) + od.eval(&p) - u.eval(&p)).norm() < 1e-10);
    }
}

#[test]
fn odd_part_of_nearly_invariant_field() {
    // u = 1 + ε r: ‖X u_od‖ = ‖(Xu)_ev‖ ≤ ‖Xu‖ at the coefficient level.
    let grp = surface();
    let r = random_field(&grp, 15, 4);
    let eps = 1e-3;
    let u = FiberField::constant(grp.clone(), Complex64::new(1.0, 0.0)).add(&r.scale(Complex64::new(eps, 0.0)));
    let xu = u.derive(Flow::Geodesic);
    let xod = u.antipodal_split().1.derive(Flow::Geodesic);
    let probes = sample_liouville(200, 16, &grp);
    let n_xu: f64 = probes.iter().map(|p| xu.eval(p).norm_sqr()).sum::<f64>().sqrt();
    let n_od: f64 = probes.iter().map(|p| xod.eval(p).norm_sqr()).sum::<f64>().sqrt();
    assert!(n_od <= n_xu + 1e-7, "{n_od} {n_xu}");
}

#[test]
fn truncation_honesty_and_parseval() {
    let grp = surface();
    let u = random_field(&grp, 17, 8);
    let probes = sample_liouville(200, 18, &grp);
    let sup = max_abs(probes.iter().map(|p| u.eval(p)));
    for p in &probes {
        let spec = u.spectrum(p);
        let outside = spec.iter().filter(|(k, _)| k.unsigned_abs() > 8).map(|(_, c)| c.norm()).fold(0.0, f64::max);
        assert!(outside < 1e-8 * sup);
        let parseval: f64 = spec.iter().map(|(_, c)| c.norm_sqr()).sum();
        let quad: f64 = u.fiber_samples(p).iter().map(|v| v.norm_sqr()).sum::<f64>() / u.n_theta as f64;
        assert!((parseval - quad).abs() <= 1e-8 * quad.max(1e-300));
    }
}

#[test]
fn x_is_anti_self_adjoint() {
    let grp = surface();
    let mut rng = batch_rng(19, 0);
    let u = BumpField::new(&grp, random_mode_bumps(&mut rng, &grp, 2, 2, true)).into_field(grp.clone(), "u");
    let v = BumpField::new(&grp, random_mode_bumps(&mut rng, &grp, 2, 2, true)).into_field(grp.clone(), "v");
    let (xu, xv) = (u.derive(Flow::Geodesic), v.derive(Flow::Geodesic));
    let pts = sample_liouville(40_000, 20, &grp);
    let terms: Vec<f64> = pts.iter().map(|p| (xu.eval(p) * v.eval(p).conj() + u.eval(p) * xv.eval(p).conj()).re).collect();
    let (m, s) = bolza_core::stats::mean_std(&terms);
    assert!(m.abs() <= 3.0 * s / (terms.len() as f64).sqrt(), "{m} {s}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn szego_is_idempotent_and_kills_nonpositive_modes(seed in 0u64..1000) {
        let grp = surface();
        let u = random_field(&grp, seed, 3);
        let s = u.szego();
        let p = sample_liouville(1, seed, &grp)[0];
        let a = s.coefficients(&p);
        let b = s.szego().coefficients(&p);
        for (k, (x, y)) in a.iter().zip(&b).enumerate() {
            prop_assert!((x - y).norm() < 1e-12);
            if k <= 3 {
                prop_assert!(x.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn mode_fields_sum_to_the_field(seed in 0u64..1000) {
        let grp = surface();
        let u = random_field(&grp, seed, 3);
        let p = sample_liouville(1, seed + 1, &grp)[0];
        let total: Complex64 = u.coefficients(&p).iter().sum();
        prop_assert!((total - u.eval(&p)).norm() < 1e-12 * (1.0 + u.eval(&p).norm()));
    }
}
