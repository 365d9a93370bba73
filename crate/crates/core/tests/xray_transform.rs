use std::sync::{Arc, OnceLock};
use std::time::Instant;

use bolza_core::census::{enumerate, orbit_integral, Census, GeodesicRecord, DEFAULT_ELEMENT_CAP};
use bolza_core::fields::Bump;
use bolza_core::quadrature::OctagonQuadrature;
use bolza_core::sampling::batch_rng;
use bolza_core::tensor::{c1_norm, random_tensor_bumps, TensorBump};
use bolza_core::xray::{assemble, injectivity_test, xray, xray_shifted, SolenoidalSubspace, DEFAULT_QUADRATURE_N};
use bolza_core::{build_bolza, Complex64, LabError, SurfaceGroup, SymmetricTensor};
use rand::seq::SliceRandom;

fn grp() -> &'static Arc<SurfaceGroup> {
    static G: OnceLock<Arc<SurfaceGroup>> = OnceLock::new();
    G.get_or_init(|| Arc::new(build_bolza().unwrap()))
}

fn census8() -> &'static Census {
    static C: OnceLock<Census> = OnceLock::new();
    C.get_or_init(|| enumerate(grp(), 8.0, DEFAULT_ELEMENT_CAP).unwrap())
}

fn short_rows(l: f64) -> Vec<GeodesicRecord> {
    census8().records.iter().filter(|r| r.length <= l).cloned().collect()
}

fn bumps(m: usize, n: usize, seed: u64, label: &str) -> Vec<SymmetricTensor> {
    let mut rng = batch_rng(seed, m as u64);
    random_tensor_bumps(&mut rng, grp(), m, n)
        .into_iter()
        .enumerate()
        .map(|(k, b)| SymmetricTensor::periodic_bumps(grp().clone(), m, &format!("{label}{k}"), vec![b]))
        .collect()
}

fn probes() -> Vec<Complex64> {
    OctagonQuadrature::new(grp(), 4, 6).points
}

#[test]
fn constants_integrate_to_length() {
    let one = SymmetricTensor::from_fn(grp().clone(), 0, "1", |_| vec![1.0]);
    let g = SymmetricTensor::metric(grp().clone());
    for r in short_rows(7.0) {
        assert!((xray(&one, &r, DEFAULT_QUADRATURE_N).unwrap() - r.length).abs() < 1e-10);
        assert!((xray(&g, &r, DEFAULT_QUADRATURE_N).unwrap() - r.length).abs() < 1e-10);
    }
}

#[test]
fn agrees_with_fiber_field_orbit_integral() {
    let f = SymmetricTensor::linear_combination(&[(1.0, &bumps(2, 3, 5, "f")[0]), (0.5, &bumps(2, 3, 5, "f")[2])]);
    let u = f.pi_star_up();
    for r in short_rows(5.0) {
        let a = xray(&f, &r, DEFAULT_QUADRATURE_N).unwrap();
        let b = orbit_integral(grp(), &r.axis, r.length, 0.25, 16, |p| u.eval(p).re);
        assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{a} {b}");
    }
}

#[test]
fn reparametrization_invariance() {
    for m in 0..3 {
        let f = &bumps(m, 2, 11, "f")[0];
        for r in short_rows(6.0).iter().step_by(5) {
            let a = xray(f, r, DEFAULT_QUADRATURE_N).unwrap();
            let b = xray_shifted(f, r, DEFAULT_QUADRATURE_N, 0.37 * r.length).unwrap();
            let scale = xray(&SymmetricTensor::from_fn(grp().clone(), 0, "1", |_| vec![1.0]), r, 64).unwrap();
            assert!((a - b).abs() < 1e-9 * (a.abs() + 1e-3 * scale), "m={m} {a} {b}");
        }
    }
}

#[test]
fn potential_tensors_integrate_to_zero() {
    let t = Instant::now();
    let rows = short_rows(6.2);
    for m in 1..=3 {
        let h = SymmetricTensor::periodic_bumps(grp().clone(), m - 1, "h", random_tensor_bumps(&mut batch_rng(21, m as u64), grp(), m - 1, 3));
        let c1 = c1_norm(&h, &probes());
        let dh = h.sym_derivative();
        for r in &rows {
            let v = xray(&dh, r, DEFAULT_QUADRATURE_N).unwrap();
            assert!(v.abs() < 1e-6 * r.length * c1, "m={m} {} {v:e}", r.word_string());
        }
    }
    eprintln!("kernel containment on {} rows: {:?}", rows.len(), t.elapsed());
}

#[test]
fn assemble_constant_column_and_row_permutation() {
    let one = SymmetricTensor::from_fn(grp().clone(), 0, "1", |_| vec![1.0]);
    let rows = short_rows(5.9);
    let x = assemble(std::slice::from_ref(&one), &rows, 0, DEFAULT_QUADRATURE_N).unwrap();
    for (i, r) in rows.iter().enumerate() {
        assert!((x.entries[(i, 0)] - r.length).abs() < 1e-10);
    }
    let basis = bumps(1, 3, 8, "b");
    let a = assemble(&basis, &rows, 1, DEFAULT_QUADRATURE_N).unwrap();
    let mut perm: Vec<usize> = (0..rows.len()).collect();
    perm.shuffle(&mut batch_rng(3, 3));
    let shuffled: Vec<GeodesicRecord> = perm.iter().map(|&i| rows[i].clone()).collect();
    let b = assemble(&basis, &shuffled, 1, DEFAULT_QUADRATURE_N).unwrap();
    for (k, &i) in perm.iter().enumerate() {
        for j in 0..basis.len() {
            assert_eq!(a.entries[(i, j)].to_bits(), b.entries[(k, j)].to_bits());
        }
    }
    assert!(a.gate_residual < 1e-8);
}

#[test]
fn potential_columns_are_small() {
    let rows = short_rows(6.2);
    let cols: Vec<SymmetricTensor> = bumps(0, 4, 9, "h").iter().map(|h| h.sym_derivative()).collect();
    let x = assemble(&cols, &rows, 1, DEFAULT_QUADRATURE_N).unwrap();
    let scale = x.mean_length();
    for j in 0..cols.len() {
        assert!(x.column_norm(j) < 1e-6 * scale, "{}", x.column_norm(j));
    }
}

#[test]
fn degree_mismatch_is_rejected() {
    let rows = short_rows(3.1);
    assert!(matches!(assemble(&bumps(1, 1, 1, "f"), &rows, 2, 64), Err(LabError::Degree(_))));
    assert!(assemble(&bumps(1, 1, 1, "f"), &[], 1, 64).is_err());
}

#[test]
fn coarse_quadrature_fails_the_gate() {
    let sharp = SymmetricTensor::periodic_bumps(
        grp().clone(),
        0,
        "sharp",
        vec![TensorBump { bump: Bump::new(Complex64::new(0.0, 0.0), 0.15), comps: vec![1.0] }],
    );
    let rows = short_rows(3.1);
    let r = assemble(std::slice::from_ref(&sharp), &rows, 0, 16);
    assert!(matches!(r, Err(LabError::QuadratureNotConverged(_))), "{r:?}");
}

#[test]
fn injectivity_for_functions() {
    let t = Instant::now();
    let quad = OctagonQuadrature::new(grp(), 8, 12);
    let raw = bumps(0, 12, 1, "f");
    let sub = SolenoidalSubspace::build(&raw, &[], &quad).unwrap();
    let rows: Vec<GeodesicRecord> = census8().primitive().cloned().collect();
    let x = assemble(&sub.columns, &rows, 0, DEFAULT_QUADRATURE_N).unwrap();
    let rep = injectivity_test(&x, &sub, 1e3).unwrap();
    eprintln!("{rep:?} {:?}", t.elapsed());
    assert!(rep.sigma_min > 0.0);
    assert!(rep.pass);
}

#[test]
fn injectivity_for_one_forms_on_a_small_basis() {
    let quad = OctagonQuadrature::new(grp(), 8, 12);
    let raw = bumps(1, 6, 2, "f");
    let pot = bumps(0, 6, 3, "q");
    let sub = SolenoidalSubspace::build(&raw, &pot, &quad).unwrap();
    let rows: Vec<GeodesicRecord> = census8().primitive().filter(|r| r.length < 7.0).cloned().collect();
    let x = assemble(&sub.columns, &rows, 1, DEFAULT_QUADRATURE_N).unwrap();
    let rep = injectivity_test(&x, &sub, 1e3).unwrap();
    eprintln!("{rep:?}");
    assert!(rep.potential_singular_values.iter().all(|s| *s < 1e-6 * rep.sigma_max));
    assert!(rep.pass);
}

#[test]
fn too_few_rows_is_rank_deficient() {
    let quad = OctagonQuadrature::new(grp(), 4, 6);
    let sub = SolenoidalSubspace::build(&bumps(0, 16, 4, "f"), &[], &quad).unwrap();
    let rows = short_rows(3.1);
    let x = assemble(&sub.columns, &rows, 0, DEFAULT_QUADRATURE_N).unwrap();
    assert!(matches!(injectivity_test(&x, &sub, 1e3), Err(LabError::RankDeficientCensus { rows: 12, dim: 16 })));
}

#[test]
fn csv_export() {
    let dir = std::env::temp_dir().join(format!("xray-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("x.csv");
    let x = assemble(&bumps(0, 2, 6, "f"), &short_rows(3.1), 0, DEFAULT_QUADRATURE_N).unwrap();
    x.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "word,length,f0,f1");
    assert_eq!(lines.count(), 12);
    std::fs::remove_dir_all(dir).unwrap();
}
