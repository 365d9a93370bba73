//! Experiment drivers shared by the command-line runner and the acceptance
//! suite. Every numeric payload is a deterministic function of the
//! [`RunConfig`]; wall-clock time is kept out of it.

pub mod config;
pub mod output;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

pub use config::RunConfig;
pub use output::{fmt_f64, to_json, Cell, Table};

use crate::census::{enumerate, Census, GeodesicRecord, DEFAULT_ELEMENT_CAP};
use crate::error::Result;
use crate::fiber::{FiberField, Sign};
use crate::fields::{pure_mode_bump, random_mode_bumps, random_octagon_point, scalar_bump, Bump, BumpField};
use crate::group::Flow;
use crate::pi::livsic::{livsic_check, tube_function};
use crate::pi::normal::{prescribed_pushforward, symbol_probe, PushforwardTarget};
use crate::pi::{mixing_residue, Direction, Moments, PairingEstimate};
use crate::quadrature::OctagonQuadrature;
use crate::sampling::{batch_rng, draw_liouville, mix_seed, sample_liouville};
use crate::stats::mean_std;
use crate::surface::{build_bolza, SurfaceGroup};
use crate::tensor::{c1_norm, fiber_polynomial, random_tensor_bumps, tensor_dot, SymmetricTensor, TensorBump};
use crate::xray::{assemble, injectivity_test, xray, SolenoidalSubspace, DEFAULT_KERNEL_GAP, DEFAULT_QUADRATURE_N};

/// One measured quantity against its limit.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// "<", "<=" or ">".
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, relation: "<", pass: value < limit }
    }

    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, relation: "<=", pass: value <= limit }
    }

    pub fn above(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, relation: ">", pass: value > limit }
    }

    /// Count of failing items, required to be zero.
    pub fn none(name: &str, count: usize) -> Self {
        Self::at_most(name, count as f64, 0.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub experiment: String,
    pub checks: Vec<Check>,
    pub report: serde_json::Value,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Outcome {
    fn new(experiment: &str, checks: Vec<Check>, report: serde_json::Value, tables: Vec<Table>) -> Self {
        Outcome { experiment: experiment.into(), checks, report, tables }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Failing checks in a single line.
    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| format!("{} = {:.3e} (limit {} {:.1e})", c.name, c.value, c.relation, c.limit))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

pub fn surface() -> Result<Arc<SurfaceGroup>> {
    Ok(Arc::new(build_bolza()?))
}

fn z(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

fn est_row(label: &str, e: &PairingEstimate) -> Vec<Cell> {
    vec![label.into(), e.lambda.into(), e.value.re.into(), e.value.im.into(), e.stderr.into()]
}

const EST_HEADER: [&str; 5] = ["label", "lambda", "re", "im", "stderr"];

fn systole_record(census: &Census) -> &GeodesicRecord {
    census.records.iter().min_by(|a, b| a.length.total_cmp(&b.length)).expect("nonempty census")
}

/// Flow group law, Bolza relation and octagon area.
pub fn geometry(cfg: &RunConfig) -> Result<Outcome> {
    let grp = surface()?;
    let mut rng = batch_rng(cfg.seed, 1);
    let (mut law, mut inv) = (0.0f64, 0.0f64);
    for i in 0..300 {
        let g = draw_liouville(&mut rng, &grp).g;
        let t = -3.0 + 6.0 * ((i * 37 % 300) as f64 + 0.5) / 300.0;
        let s = -3.0 + 6.0 * ((i * 101 % 300) as f64 + 0.5) / 300.0;
        for w in Flow::ALL {
            let two = g.flowed(w, t).flowed(w, s);
            let one = g.flowed(w, t + s);
            let scale = one.entries().iter().fold(1.0f64, |m, x| m.max(x.abs()));
            law = law.max(two.projective_distance(&one) / scale);
            inv = inv.max(g.flowed(w, t).flowed(w, -t).projective_distance(&g));
        }
    }
    let area_err = (grp.octagon_area() - 4.0 * PI).abs();
    let checks = vec![
        Check::below("flow group law residual", law, 1e-12),
        Check::below("flow inverse residual", inv, 1e-12),
        Check::below("relation residual", grp.relation_residual, 1e-9),
        Check::below("octagon area error", area_err, 1e-6),
    ];
    let report = json!({
        "group_law_residual": law,
        "inverse_residual": inv,
        "relation_residual": grp.relation_residual,
        "side_pairing_residual": grp.side_pairing_residual(),
        "octagon_area": grp.octagon_area(),
    });
    Ok(Outcome::new("geometry", checks, report, vec![]))
}

/// Closed geodesics up to `census_L`.
pub fn census(cfg: &RunConfig) -> Result<Outcome> {
    let grp = surface()?;
    let c = enumerate(&grp, cfg.census_l, DEFAULT_ELEMENT_CAP)?;
    let exact = 2.0 * (1.0 + std::f64::consts::SQRT_2).acosh();
    let mut closure = 0.0f64;
    let mut table = Table::new("census", &["word", "trace", "length", "primitive", "closure_residual"]);
    for r in &c.records {
        let res = r.closure_residual(&grp)?;
        closure = closure.max(res);
        table.push(vec![r.word_string().into(), r.trace.abs().into(), r.length.into(), r.primitive.to_string().into(), res.into()]);
    }
    let mut checks = vec![Check::below("max closure residual", closure, 1e-8)];
    let systole = c.records.iter().map(|r| r.length).fold(f64::INFINITY, f64::min);
    if cfg.census_l >= exact {
        checks.insert(0, Check::below("systole error", (systole - exact).abs(), 1e-6));
    }
    let report = json!({
        "max_length": cfg.census_l,
        "records": c.records.len(),
        "primitive": c.primitive().count(),
        "systole": if systole.is_finite() { Some(systole) } else { None },
        "systole_multiplicity": c.records.iter().filter(|r| (r.length - exact).abs() < 1e-8).count(),
        "candidates": c.n_candidates,
        "ambiguous_pairs": c.ambiguous,
        "max_closure_residual": closure,
    });
    Ok(Outcome::new("census", checks, report, vec![table]))
}

fn random_fiber_field(grp: &Arc<SurfaceGroup>, seed: u64, k: usize, n_bumps: usize, real: bool, label: &str) -> FiberField {
    let mut rng = batch_rng(seed, 0);
    BumpField::new(grp, random_mode_bumps(&mut rng, grp, k, n_bumps, real)).into_field(grp.clone(), label)
}

/// Commutation identity, structure equations and η± mode shifts.
pub fn fiber_calculus(cfg: &RunConfig) -> Result<Outcome> {
    let grp = surface()?;
    let probes = sample_liouville(6, mix_seed(cfg.seed, 31), &grp);
    let norm_probes = sample_liouville(400, mix_seed(cfg.seed, 32), &grp);
    let mut comm = 0.0f64;
    for i in 0..10 {
        let u = random_fiber_field(&grp, mix_seed(cfg.seed, 300 + i), cfg.k, 3, false, "u");
        let c1 = u.c1_norm(&norm_probes);
        let xsu = u.szego().derive(Flow::Geodesic);
        let sxu = u.derive(Flow::Geodesic).szego();
        let a = u.mode(0).eta(Sign::Plus);
        let b = u.mode(1).eta(Sign::Minus);
        for p in &probes {
            comm = comm.max((xsu.eval(p) - sxu.eval(p) + a.eval(p) - b.eval(p)).norm() / c1);
        }
    }
    let sprobes = sample_liouville(12, mix_seed(cfg.seed, 33), &grp);
    let mut structure = 0.0f64;
    for i in 0..3 {
        let u = random_fiber_field(&grp, mix_seed(cfg.seed, 400 + i), cfg.k, 3, false, "u");
        let c2 = u.c2_norm(&sprobes[..4]);
        let (x, xp, v) = (Flow::Geodesic, Flow::Perpendicular, Flow::Rotation);
        let (xv, vx) = (u.derive(v).derive(x), u.derive(x).derive(v));
        let (xpv, vxp) = (u.derive(v).derive(xp), u.derive(xp).derive(v));
        let (xxp, xpx) = (u.derive(xp).derive(x), u.derive(x).derive(xp));
        for p in &sprobes {
            let r1 = xv.eval(p) - vx.eval(p) - u.derivative_at(p, xp);
            let r2 = xpv.eval(p) - vxp.eval(p) + u.derivative_at(p, x);
            let r3 = xxp.eval(p) - xpx.eval(p) - u.derivative_at(p, v);
            structure = structure.max(r1.norm().max(r2.norm()).max(r3.norm()) / c2);
        }
    }
    let u = BumpField::new(&grp, vec![pure_mode_bump(z(-0.2, 0.3), 1.2, 2)]).into_field(grp.clone(), "m2");
    let mut off = [0.0f64; 2];
    for (s, (sign, target)) in [(Sign::Plus, 3), (Sign::Minus, 1)].into_iter().enumerate() {
        let e = u.eta(sign);
        let (mut on, mut out) = (0.0, 0.0);
        for p in sample_liouville(60, mix_seed(cfg.seed, 34), &grp) {
            for (k, c) in e.spectrum(&p) {
                if k == target {
                    on += c.norm_sqr();
                } else {
                    out += c.norm_sqr();
                }
            }
        }
        off[s] = (out / on).sqrt();
    }
    let checks = vec![
        Check::below("commutation residual / C1 norm", comm, 1e-4),
        Check::below("structure residual / C2 norm", structure, 1e-4),
        Check::below("eta+ off-support mass", off[0], 1e-5),
        Check::below("eta- off-support mass", off[1], 1e-5),
    ];
    let report = json!({
        "K": cfg.k,
        "commutation_relative_residual": comm,
        "structure_relative_residual": structure,
        "eta_plus_off_support": off[0],
        "eta_minus_off_support": off[1],
    });
    Ok(Outcome::new("fiber-calculus", checks, report, vec![]))
}

fn random_tensor(grp: &Arc<SurfaceGroup>, m: usize, seed: u64, n: usize, label: &str) -> SymmetricTensor {
    let mut rng = batch_rng(seed, m as u64);
    SymmetricTensor::periodic_bumps(grp.clone(), m, label, random_tensor_bumps(&mut rng, grp, m, n))
}

fn tensor_probes() -> Vec<Complex64> {
    vec![z(0.1, 0.2), z(-0.35, 0.05), z(0.42, -0.3), z(-0.05, -0.55), z(0.6, 0.1)]
}

fn comp_norm(c: &[f64]) -> f64 {
    tensor_dot(c, c).sqrt()
}

/// D and D* of the metric, the splitting of X on trace-free tensors and the
/// adjointness of D and −D*.
pub fn tensor_calculus(cfg: &RunConfig) -> Result<Outcome> {
    let grp = surface()?;
    let g = SymmetricTensor::metric(grp.clone());
    let (dg, divg) = (g.sym_derivative(), g.divergence()?);
    let mut metric = 0.0f64;
    for p in tensor_probes() {
        metric = metric.max(comp_norm(&dg.components(p))).max(comp_norm(&divg.components(p)));
    }
    let mut split = 0.0f64;
    for m in 1..=3 {
        let f = random_tensor(&grp, m, mix_seed(cfg.seed, 40 + m as u64), 4, "f").trace_free_part();
        let u = f.pi_star_up();
        let tf_d = f.sym_derivative().trace_free_part();
        let div = f.divergence()?;
        let scale = c1_norm(&f, &tensor_probes());
        for p in tensor_probes() {
            let (a, b) = (tf_d.components(p), div.components(p));
            for th in [0.2, 1.9, 4.4] {
                let q = crate::phase::PhasePoint::from_disk(p, th, &grp)?;
                let dir = Complex64::from_polar(1.0, th);
                let xu = u.derivative_at(&q, Flow::Geodesic).re;
                split = split.max((xu - fiber_polynomial(&a, dir) + 0.5 * fiber_polynomial(&b, dir)).abs() / scale);
            }
        }
    }
    let pts = sample_liouville(20_000, mix_seed(cfg.seed, 45), &grp);
    let mut adj = Vec::new();
    for m in 0..=2 {
        let f = random_tensor(&grp, m, mix_seed(cfg.seed, 46 + m as u64), 4, "f");
        let h = random_tensor(&grp, m + 1, mix_seed(cfg.seed, 49 + m as u64), 4, "h");
        let (df, dh) = (f.sym_derivative(), h.divergence()?);
        let xs: Vec<f64> = pts
            .iter()
            .map(|p| tensor_dot(&df.components(p.z), &h.components(p.z)) - tensor_dot(&f.components(p.z), &dh.components(p.z)))
            .collect();
        let (mu, sd) = mean_std(&xs);
        let se = sd / (xs.len() as f64).sqrt();
        adj.push((m, mu, se, if se > 0.0 { mu.abs() / se } else { 0.0 }));
    }
    let worst = adj.iter().map(|a| a.3).fold(0.0, f64::max);
    let checks = vec![
        Check::below("|D g|, |D* g|", metric, 1e-6),
        Check::below("splitting residual / C1 norm", split, 1e-4),
        Check::at_most("adjointness |z|", worst, 3.0),
    ];
    let report = json!({
        "metric_residual": metric,
        "splitting_relative_residual": split,
        "adjointness": adj.iter().map(|a| json!({"m": a.0, "mean": a.1, "stderr": a.2, "z": a.3})).collect::<Vec<_>>(),
    });
    Ok(Outcome::new("tensor-calculus", checks, report, vec![]))
}

/// |I_m(Dh)(γ)| over the census for random h, m = 1, 2, 3, and the x-ray
/// matrix of a random degree-`m` basis.
pub fn xray_containment(cfg: &RunConfig) -> Result<Outcome> {
    let grp = surface()?;
    let c = enumerate(&grp, cfg.census_l, DEFAULT_ELEMENT_CAP)?;
    let probes = OctagonQuadrature::new(&grp, 4, 6).points;
    let mut table = Table::new("containment", &["m", "h", "word", "length", "integral", "relative"]);
    let mut worst = 0.0f64;
    for m in 1..=3usize {
        for i in 0..5u64 {
            let h = random_tensor(&grp, m - 1, mix_seed(cfg.seed, 500 + 10 * m as u64 + i), 3, "h");
            let scale = c1_norm(&h, &probes);
            let dh = h.sym_derivative();
            let vals: Vec<Result<f64>> = {
                use rayon::prelude::*;
                c.records.par_iter().map(|r| xray(&dh, r, DEFAULT_QUADRATURE_N)).collect()
            };
            for (r, v) in c.records.iter().zip(vals) {
                let v = v?;
                let rel = v.abs() / (r.length * scale);
                worst = worst.max(rel);
                table.push(vec![m.into(), (i as usize).into(), r.word_string().into(), r.length.into(), v.into(), rel.into()]);
            }
        }
    }
    let basis: Vec<SymmetricTensor> = (0..cfg.basis_size)
        .map(|i| random_tensor(&grp, cfg.m, mix_seed(cfg.seed, 600 + i as u64), 1, &format!("f{i}")))
        .collect();
    let rows: Vec<GeodesicRecord> = c.primitive().cloned().collect();
    let x = assemble(&basis, &rows, cfg.m, DEFAULT_QUADRATURE_N)?;
    let mut matrix = Table::new("xray_matrix", &[]);
    matrix.header = ["word", "length"].iter().map(|s| s.to_string()).chain(basis.iter().map(|b| b.label.clone())).collect();
    for (i, r) in x.rows.iter().enumerate() {
        let mut row: Vec<Cell> = vec![r.word.clone().into(), r.length.into()];
        row.extend((0..x.cols.len()).map(|j| Cell::Num(x.entries[(i, j)])));
        matrix.push(row);
    }
    let checks = vec![Check::below("max |I(Dh)| / (length · C1 norm)", worst, 1e-6)];
    let report = json!({
        "census_L": cfg.census_l,
        "geodesics": c.records.len(),
        "max_relative_integral": worst,
        "matrix": {"m": cfg.m, "rows": x.rows.len(), "cols": x.cols.len(), "quadrature_n": x.quadrature_n, "gate_residual": x.gate_residual},
    });
    Ok(Outcome::new("xray", checks, report, vec![table, matrix]))
}

/// Kernel gap of the x-ray transform on solenoidal tensors of degree `cfg.m`.
pub fn injectivity(cfg: &RunConfig) -> Result<Outcome> {
    let grp = surface()?;
    let m = cfg.m;
    let quad = OctagonQuadrature::new(&grp, 8, 12);
    let raw: Vec<SymmetricTensor> = (0..cfg.basis_size)
        .map(|i| random_tensor(&grp, m, mix_seed(cfg.seed, 700 + i as u64), 1, &format!("f{i}")))
        .collect();
    let pot: Vec<SymmetricTensor> = if m == 0 {
        Vec::new()
    } else {
        (0..cfg.basis_size)
            .map(|i| random_tensor(&grp, m - 1, mix_seed(cfg.seed, 800 + i as u64), 1, &format!("q{i}")))
            .collect()
    };
    let sub = SolenoidalSubspace::build(&raw, &pot, &quad)?;
    let c = enumerate(&grp, cfg.census_l, DEFAULT_ELEMENT_CAP)?;
    let rows: Vec<GeodesicRecord> = c.primitive().cloned().collect();
    let x = assemble(&sub.columns, &rows, m, DEFAULT_QUADRATURE_N)?;
    let rep = injectivity_test(&x, &sub, DEFAULT_KERNEL_GAP)?;
    let mut sv = Table::new("singular_values", &["kind", "index", "value"]);
    for (i, s) in rep.singular_values.iter().enumerate() {
        sv.push(vec!["solenoidal".into(), i.into(), (*s).into()]);
    }
    for (i, s) in rep.potential_singular_values.iter().enumerate() {
        sv.push(vec!["potential".into(), i.into(), (*s).into()]);
    }
    sv.push(vec!["quadrature_floor".into(), 0usize.into(), rep.quadrature_floor.into()]);
    let checks = vec![Check::above(&format!("kernel gap (m = {m})"), rep.kernel_gap, DEFAULT_KERNEL_GAP)];
    Ok(Outcome::new("injectivity", checks, serde_json::to_value(&rep).expect("report"), vec![sv]))
}

fn bump_pairs(grp: &Arc<SurfaceGroup>, seed: u64) -> Vec<(BumpField, BumpField)> {
    let mut rng = batch_rng(seed, 0);
    (0..3)
        .map(|_| {
            use rand::Rng;
            let mut b = || {
                let c = random_octagon_point(&mut rng, grp);
                let r = 0.8 + 0.5 * rng.random::<f64>();
                BumpField::new(grp, vec![scalar_bump(c, r)])
            };
            (b(), b())
        })
        .collect()
}

/// λ⟨R₊(λ)u, v⟩ along the ladder for three bump pairs.
pub fn mixing(cfg: &RunConfig) -> Result<Outcome> {
    let grp = surface()?;
    let pairs = bump_pairs(&grp, mix_seed(cfg.seed, 70));
    let targets: Vec<Complex64> = pairs.iter().map(|(u, v)| u.mean() * v.mean().conj()).collect();
    let us: Vec<FiberField> = pairs.iter().enumerate().map(|(i, (u, _))| u.clone().into_field(grp.clone(), &format!("u{i}"))).collect();
    let vs: Vec<FiberField> = pairs.iter().enumerate().map(|(i, (_, v))| v.clone().into_field(grp.clone(), &format!("v{i}"))).collect();
    let reps = mixing_residue(&us, &vs, &targets, &cfg.engine())?;
    let mut table = Table::new("mixing_ladder", &["pair", "lambda", "re", "im", "stderr", "target_re"]);
    for (i, r) in reps.iter().enumerate() {
        for e in r.rungs.iter().chain(std::iter::once(&r.extrapolated)) {
            table.push(vec![i.into(), e.lambda.into(), e.value.re.into(), e.value.im.into(), e.stderr.into(), r.target.re.into()]);
        }
    }
    let worst = reps.iter().map(|r| (r.extrapolated.value - r.target).norm() / r.extrapolated.stderr).fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("max |final − target| / σ", worst, 3.0),
        Check::none("pairs with non-monotone approach", reps.iter().filter(|r| !r.monotone).count()),
    ];
    Ok(Outcome::new("mixing", checks, json!({ "n_samples": cfg.n_samples, "pairs": reps }), vec![table]))
}

/// Pairs checked by [`pi_check`] for each property.
pub const PI_CHECK_PAIRS: usize = 20;

/// Symmetry, XΠ and ΠX annihilation on random pairs, and the closed-geodesic
/// detector, from one shared trajectory run.
pub fn pi_check(cfg: &RunConfig) -> Result<Outcome> {
    let grp = surface()?;
    let rf = |i: u64, label: String| random_fiber_field(&grp, mix_seed(cfg.seed, 900 + i), 2, 2, true, &label);
    let rs: Vec<FiberField> = (0..7).map(|i| rf(i, format!("r{i}"))).collect();
    let xu: Vec<FiberField> = (0..4).map(|i| rf(10 + i, format!("u{i}")).derive(Flow::Geodesic)).collect();
    let xs: Vec<FiberField> = (0..3).map(|i| rf(20 + i, format!("s{i}")).derive(Flow::Geodesic)).collect();
    let sys_census = enumerate(&grp, 3.1, DEFAULT_ELEMENT_CAP)?;
    let sys = systole_record(&sys_census);
    let tube = tube_function(&grp, sys, 0.3)?;

    let mut fields = rs.clone();
    fields.extend(xu.iter().cloned());
    fields.push(tube.clone());
    let mut tests = rs.clone();
    tests.extend(xs.iter().cloned());
    tests.push(tube);
    let (nr, nu, ns) = (rs.len(), xu.len(), xs.len());
    let (tube_f, tube_t) = (nr + nu, nr + ns);
    let mom = Moments::compute(&fields, &tests, &[Direction::Forward, Direction::Backward], &cfg.engine())?;

    let mut table = Table::new("pi_pairs", &["property", "field", "test", "re", "im", "stderr", "z"]);
    let push = |t: &mut Table, kind: &str, k: usize, j: usize, e: &PairingEstimate| {
        t.push(vec![kind.into(), mom.field_labels[k].clone().into(), mom.test_labels[j].clone().into(), e.value.re.into(), e.value.im.into(), e.stderr.into(), e.z_score().into()]);
    };
    let mut sym_fail = 0;
    let mut sym_worst = 0.0f64;
    let sym_pairs: Vec<(usize, usize)> = (0..nr).flat_map(|i| (i + 1..nr).map(move |j| (i, j))).take(PI_CHECK_PAIRS).collect();
    for &(i, j) in &sym_pairs {
        let a = mom.pi_ladder(i, j)?.extrapolated;
        let b = mom.pi_ladder(j, i)?.extrapolated;
        let r = (a.value - b.value.conj()).norm() / (a.stderr + b.stderr);
        sym_worst = sym_worst.max(r);
        if r > 3.0 {
            sym_fail += 1;
        }
        push(&mut table, "symmetry", i, j, &a);
        push(&mut table, "symmetry", j, i, &b);
    }
    let null = |kind: &str, pairs: &[(usize, usize)], t: &mut Table| -> Result<(usize, f64)> {
        let mut fail = 0;
        let mut worst = 0.0f64;
        for &(k, j) in pairs {
            let e = mom.pi_ladder(k, j)?.extrapolated;
            worst = worst.max(e.z_score());
            if !e.within(3.0) {
                fail += 1;
            }
            push(t, kind, k, j, &e);
        }
        Ok((fail, worst))
    };
    let xpi_pairs: Vec<(usize, usize)> = (0..nr).flat_map(|k| (0..ns).map(move |j| (k, nr + j))).take(PI_CHECK_PAIRS).collect();
    let pix_pairs: Vec<(usize, usize)> = (0..nu).flat_map(|k| (0..5).map(move |j| (nr + k, j))).take(PI_CHECK_PAIRS).collect();
    let (xpi_fail, xpi_worst) = null("x_pi", &xpi_pairs, &mut table)?;
    let (pix_fail, pix_worst) = null("pi_x", &pix_pairs, &mut table)?;
    let det = mom.pi_ladder(tube_f, tube_t)?.extrapolated;
    push(&mut table, "detector", tube_f, tube_t, &det);
    let checks = vec![
        Check::none(&format!("symmetry violations ({} pairs)", sym_pairs.len()), sym_fail),
        Check::none(&format!("X Pi annihilation violations ({} pairs)", xpi_pairs.len()), xpi_fail),
        Check::none(&format!("Pi X annihilation violations ({} pairs)", pix_pairs.len()), pix_fail),
        Check::above("closed-geodesic detector z", det.value.re / det.stderr, 3.0),
    ];
    let report = json!({
        "n_samples": cfg.n_samples,
        "symmetry": {"pairs": sym_pairs.len(), "violations": sym_fail, "max_ratio": sym_worst},
        "x_pi": {"pairs": xpi_pairs.len(), "violations": xpi_fail, "max_z": xpi_worst},
        "pi_x": {"pairs": pix_pairs.len(), "violations": pix_fail, "max_z": pix_worst},
        "detector": {"geodesic": sys.word_string(), "length": sys.length, "tube_radius": 0.3, "estimate": det},
    });
    Ok(Outcome::new("pi-check", checks, report, vec![table]))
}

/// Frequencies and probe radius of the symbol experiment.
pub const SYMBOL_XI: [f64; 3] = [4.0, 8.0, 16.0];
pub const SYMBOL_RADIUS: f64 = 2.0;

/// Log-log slope of ⟨Π₀u_ξ, u_ξ⟩.
pub fn symbol(cfg: &RunConfig) -> Result<Outcome> {
    let grp = surface()?;
    let rep = symbol_probe(&grp, &SYMBOL_XI, z(0.0, 0.0), SYMBOL_RADIUS, &cfg.engine())?;
    let mut table = Table::new("symbol", &["xi", "re", "stderr"]);
    for (x, v) in rep.xi.iter().zip(&rep.values) {
        table.push(vec![(*x).into(), v.value.re.into(), v.stderr.into()]);
    }
    let worst_ratio = rep.values.windows(2).map(|w| (w[0].value.re / w[1].value.re / 2.0 - 1.0).abs()).fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("|slope + 1|", (rep.slope + 1.0).abs(), crate::pi::normal::SYMBOL_TOL),
        Check::below("doubling ratio deviation from 2", worst_ratio, 0.2),
    ];
    Ok(Outcome::new("symbol", checks, serde_json::to_value(&rep).expect("report"), vec![table]))
}

fn scalar_tensor(grp: &Arc<SurfaceGroup>, c: Complex64, r: f64, label: &str) -> SymmetricTensor {
    SymmetricTensor::periodic_bumps(grp.clone(), 0, label, vec![TensorBump { bump: Bump::new(c, r), comps: vec![1.0] }])
}

pub const PUSHFORWARD_BASIS: [(f64, f64); 6] = [(0.0, 0.0), (0.4, 0.1), (-0.3, 0.35), (0.1, -0.45), (-0.45, -0.2), (0.3, 0.45)];
pub const PUSHFORWARD_HELD_OUT: [(f64, f64); 3] = [(0.05, 0.05), (-0.25, 0.3), (0.05, -0.4)];
pub const PUSHFORWARD_COEFFICIENTS: [f64; 6] = [1.0, -0.5, 0.8, -1.0, 0.6, -0.7];

/// Solve π₀∗w = f for f = Π₀(Σ a_j ψ_j) and validate on held-out functions.
pub fn pushforward(cfg: &RunConfig) -> Result<Outcome> {
    let grp = surface()?;
    let basis: Vec<SymmetricTensor> = PUSHFORWARD_BASIS.iter().enumerate().map(|(i, &(x, y))| scalar_tensor(&grp, z(x, y), 1.1, &format!("b{i}"))).collect();
    let held: Vec<SymmetricTensor> = PUSHFORWARD_HELD_OUT.iter().enumerate().map(|(i, &(x, y))| scalar_tensor(&grp, z(x, y), 0.9, &format!("h{i}"))).collect();
    let quad = OctagonQuadrature::new(&grp, 8, 12);
    let target = PushforwardTarget::Range { coefficients: PUSHFORWARD_COEFFICIENTS.to_vec(), seed: mix_seed(cfg.seed, 1010) };
    let rep = prescribed_pushforward(&target, &basis, &held, &cfg.engine(), &quad)?;
    let mut table = Table::new("pushforward_held_out", &["function", "predicted", "stderr", "target", "invariance", "invariance_stderr"]);
    for (i, ((p, t), inv)) in rep.held_out_predicted.iter().zip(&rep.held_out_target).zip(&rep.invariance).enumerate() {
        table.push(vec![format!("h{i}").into(), p.value.re.into(), p.stderr.into(), (*t).into(), inv.value.re.into(), inv.stderr.into()]);
    }
    let checks = vec![
        Check::at_most("held-out relative error", rep.held_out_relative_error, 0.15),
        Check::none("invariance residuals beyond 3σ", rep.invariance.iter().filter(|e| !e.within(3.0)).count()),
    ];
    Ok(Outcome::new("pushforward", checks, serde_json::to_value(&rep).expect("report"), vec![table]))
}

/// Coboundary f = Xu for a known u, and a closed-geodesic tube for contrast.
pub fn livsic(cfg: &RunConfig) -> Result<Outcome> {
    let grp = surface()?;
    let c = enumerate(&grp, cfg.census_l, DEFAULT_ELEMENT_CAP)?;
    let mut rng = batch_rng(mix_seed(cfg.seed, 1100), 0);
    let parts = random_mode_bumps(&mut rng, &grp, 2, 8, true);
    let basis: Vec<FiberField> = parts
        .into_iter()
        .enumerate()
        .map(|(i, b)| BumpField::new(&grp, vec![b]).into_field(grp.clone(), &format!("e{i}")))
        .collect();
    let u = basis[0].add(&basis[1].scale(z(-0.7, 0.0))).add(&basis[2].scale(z(0.4, 0.0)));
    let f = u.derive(Flow::Geodesic);
    let probes: Vec<FiberField> = (0..3).map(|i| random_fiber_field(&grp, mix_seed(cfg.seed, 1110 + i), 1, 1, true, &format!("p{i}"))).collect();
    let engine = cfg.engine();
    let rep = livsic_check(&f, &c.records, &probes, &basis, Some(&u), 4000, &engine)?;
    let u_c1 = u.c1_norm(&sample_liouville(400, mix_seed(cfg.seed, 1120), &grp));
    let worst_orbit = rep.orbit_residuals.iter().map(|o| o.integral.abs() / (o.length * u_c1)).fold(0.0, f64::max);

    let sys = systole_record(&c);
    let tube = tube_function(&grp, sys, 0.3)?;
    let contrast = livsic_check(&tube, &c.records, &[], &basis, None, 4000, &engine.with_samples(engine.n_batches))?;

    let mut table = Table::new("orbit_integrals", &["field", "word", "length", "integral"]);
    for (name, r) in [("Xu", &rep), ("tube", &contrast)] {
        for o in &r.orbit_residuals {
            table.push(vec![name.into(), o.word.clone().into(), o.length.into(), o.integral.into()]);
        }
    }
    let mut pi = Table::new("pi_residuals", &EST_HEADER);
    for (p, e) in probes.iter().zip(&rep.pi_residuals) {
        pi.push(est_row(&p.label, e));
    }
    let checks = vec![
        Check::below("max |∫f| / (length · |u|_C1)", worst_orbit, 1e-6),
        Check::none("Pi residuals beyond 3σ", rep.pi_residuals.iter().filter(|e| !e.within(3.0)).count()),
        Check::below("recovery error of u mod constants", rep.u_recovery_error.unwrap_or(f64::INFINITY), 0.05),
    ];
    let report = json!({
        "u_c1_norm": u_c1,
        "coboundary": rep,
        "tube": {"geodesic": sys.word_string(), "max_orbit_average": contrast.max_orbit_average, "fit_residual": contrast.u_fit_residual, "coboundary_like": contrast.coboundary_like},
    });
    Ok(Outcome::new("livsic", checks, report, vec![table, pi]))
}

/// Experiments reachable from the command line.
pub const SUBCOMMANDS: [&str; 8] = ["census", "xray", "injectivity", "mixing", "pi-check", "symbol", "pushforward", "livsic"];

pub fn run(name: &str, cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    match name {
        "geometry" => geometry(cfg),
        "census" => census(cfg),
        "fiber-calculus" => fiber_calculus(cfg),
        "tensor-calculus" => tensor_calculus(cfg),
        "xray" => xray_containment(cfg),
        "injectivity" => injectivity(cfg),
        "mixing" => mixing(cfg),
        "pi-check" => pi_check(cfg),
        "symbol" => symbol(cfg),
        "pushforward" => pushforward(cfg),
        "livsic" => livsic(cfg),
        other => Err(crate::error::LabError::Config(format!("unknown experiment {other}"))),
    }
}

/// Report JSON followed by every CSV, in a fixed order: the bytes compared
/// by the determinism check.
pub fn payload(o: &Outcome) -> Result<String> {
    let mut s = to_json(o);
    for t in &o.tables {
        s.push_str(&t.to_csv()?);
    }
    Ok(s)
}
