//! Closed geodesics of the Bolza surface up to a length bound.
//!
//! Every closed geodesic has a lift whose axis meets the octagon, so its
//! translation γ satisfies sinh(d(0, γ0)/2) ≤ cosh(R_circ)·sinh(ℓ/2). We
//! enumerate that ball, keep the elements whose axis passes within R_circ of
//! the center, and identify conjugacy classes: first by canonical cyclic word,
//! then by length together with orbit integrals of fixed generic functions.

use std::cmp::Ordering;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::disk;
use crate::error::{LabError, Result};
use crate::fields::{random_mode_bumps, BumpField};
use crate::group::{Flow, GroupElement};
use crate::phase::{phase_distance_mod_gamma, PhasePoint};
use crate::quadrature::gauss_legendre;
use crate::sampling::batch_rng;
use crate::surface::{inverse_letter, SurfaceGroup};

pub const DEFAULT_ELEMENT_CAP: usize = 4_000_000;
const LENGTH_TOL: f64 = 1e-9;
const FINGERPRINT_SEED: u64 = 0x6765_6f64;
const FINGERPRINT_FIELDS: usize = 4;
/// Orbit integrals of one class agree to quadrature accuracy (observed ≤ 1e−12
/// relative); distinct classes of equal length differ by ≥ 1e−4 up to L = 8.
/// Anything between the two tolerances is counted as ambiguous, never merged.
const MATCH_TOL: f64 = 1e-8;
const AMBIGUOUS_TOL: f64 = 1e-5;

const LETTERS: [char; 8] = ['a', 'b', 'c', 'd', 'A', 'B', 'C', 'D'];

pub fn word_string(w: &[u8]) -> String {
    w.iter().map(|&k| LETTERS[k as usize]).collect()
}

pub fn word_element(grp: &SurfaceGroup, w: &[u8]) -> GroupElement {
    w.iter().fold(GroupElement::IDENTITY, |g, &k| g * grp.generators[k as usize])
}

pub fn inverse_word(w: &[u8]) -> Vec<u8> {
    w.iter().rev().map(|&k| inverse_letter(k)).collect()
}

pub fn free_reduce(w: &[u8]) -> Vec<u8> {
    let mut v: Vec<u8> = Vec::with_capacity(w.len());
    for &k in w {
        if v.last() == Some(&inverse_letter(k)) {
            v.pop();
        } else {
            v.push(k);
        }
    }
    v
}

/// Free reduction followed by stripping inverse pairs across the ends.
pub fn cyclically_reduce(w: &[u8]) -> Vec<u8> {
    let mut v = free_reduce(w);
    while v.len() >= 2 && v[v.len() - 1] == inverse_letter(v[0]) {
        v.pop();
        v.remove(0);
    }
    v
}

/// Lexicographically minimal cyclic rotation of the word and of its inverse.
pub fn canonical_word(w: &[u8]) -> Vec<u8> {
    let v = cyclically_reduce(w);
    let inv = inverse_word(&v);
    let mut best = v.clone();
    for base in [&v, &inv] {
        for r in 0..base.len() {
            let rot: Vec<u8> = base[r..].iter().chain(&base[..r]).copied().collect();
            if rot < best {
                best = rot;
            }
        }
    }
    best
}

/// Attracting and repelling fixed points on the unit circle.
pub fn fixed_points(g: &GroupElement) -> Result<(Complex64, Complex64)> {
    let g = *g;
    let tr = g.trace().abs();
    if tr <= 2.0 {
        return Err(LabError::NotHyperbolic(tr));
    }
    let (al, be) = g.alpha_beta();
    let disc = (al.re * al.re - 1.0).sqrt();
    let inv = be.conj().inv();
    let z1 = (Complex64::new(0.0, al.im) + disc) * inv;
    let z2 = (Complex64::new(0.0, al.im) - disc) * inv;
    // |γ'(ξ)| = 1/|β̄ξ + ᾱ|² is < 1 at the attracting point
    if (be.conj() * z1 + al.conj()).norm() > (be.conj() * z2 + al.conj()).norm() {
        Ok((z1 / z1.norm(), z2 / z2.norm()))
    } else {
        Ok((z2 / z2.norm(), z1 / z1.norm()))
    }
}

/// Unreduced frame at the point of the axis closest to 0, pointing toward the
/// attracting fixed point.
pub fn axis_frame(g: &GroupElement) -> Result<GroupElement> {
    let (plus, minus) = fixed_points(g)?;
    // The axis is symmetric about the bisector of its endpoints; its closest
    // point to 0 is (ξ₊ + ξ₋)/(2 + |ξ₊ − ξ₋|) and the tangent there is
    // parallel to the chord.
    let chord = plus - minus;
    let z = (plus + minus) / (2.0 + chord.norm());
    Ok(GroupElement::from_disk_frame(z, chord.arg()))
}

/// A point on the axis of g, reduced to the octagon.
pub fn axis_point(g: &GroupElement, grp: &SurfaceGroup) -> Result<PhasePoint> {
    PhasePoint::new(axis_frame(g)?, grp)
}

/// ∫₀^ℓ f(φ_t p) dt by composite Gauss–Legendre: panels of at most
/// `panel_length` with `order` nodes each.
pub fn orbit_integral<F: FnMut(&PhasePoint) -> f64>(
    grp: &SurfaceGroup,
    start: &GroupElement,
    length: f64,
    panel_length: f64,
    order: usize,
    mut f: F,
) -> f64 {
    let (x, w) = gauss_legendre(order);
    let panels = (length / panel_length).ceil().max(1.0) as usize;
    let h = length / panels as f64;
    let mut acc = crate::stats::NeumaierSum::default();
    for p in 0..panels {
        let a = p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let t = a + 0.5 * h * (xi + 1.0);
            let q = PhasePoint::new(start.flowed(Flow::Geodesic, t), grp).expect("reduction");
            acc.add(0.5 * h * wi * f(&q));
        }
    }
    acc.sum()
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub element: GroupElement,
    pub word: Vec<u8>,
    pub canonical: Vec<u8>,
    pub trace: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicRecord {
    pub word: Vec<u8>,
    pub element: GroupElement,
    pub trace: f64,
    pub length: f64,
    pub primitive: bool,
    /// Unreduced frame on the axis; the orbit is t ↦ axis·a_t.
    pub axis: GroupElement,
    pub start: PhasePoint,
    pub fingerprint: Vec<f64>,
}

impl GeodesicRecord {
    pub fn point_at(&self, t: f64, grp: &SurfaceGroup) -> Result<PhasePoint> {
        PhasePoint::new(self.axis.flowed(Flow::Geodesic, t), grp)
    }

    /// Distance mod Γ between the start and its image after one period.
    pub fn closure_residual(&self, grp: &SurfaceGroup) -> Result<f64> {
        let end = self.point_at(self.length, grp)?;
        Ok(phase_distance_mod_gamma(&self.start, &end, grp))
    }

    pub fn word_string(&self) -> String {
        word_string(&self.word)
    }
}

#[derive(Debug, Clone)]
pub struct Census {
    pub max_length: f64,
    pub records: Vec<GeodesicRecord>,
    pub n_candidates: usize,
    /// Pairs of classes with equal length whose fingerprints were close but
    /// not equal; kept separate.
    pub ambiguous: usize,
}

impl Census {
    /// N(L): number of records with length ≤ L.
    pub fn count(&self, l: f64) -> usize {
        self.records.iter().filter(|r| r.length <= l).count()
    }

    pub fn primitive(&self) -> impl Iterator<Item = &GeodesicRecord> {
        self.records.iter().filter(|r| r.primitive)
    }

    pub fn truncated(&self, l: f64) -> Census {
        Census {
            max_length: l,
            records: self.records.iter().filter(|r| r.length <= l).cloned().collect(),
            n_candidates: self.n_candidates,
            ambiguous: self.ambiguous,
        }
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["word", "trace", "length", "primitive"])?;
        for r in &self.records {
            w.write_record([
                r.word_string(),
                format!("{:.16e}", r.trace),
                format!("{:.16e}", r.length),
                r.primitive.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Distance bound d(0, γ0) for lifts of geodesics of length ≤ L meeting the octagon.
pub fn search_radius(grp: &SurfaceGroup, l: f64) -> f64 {
    2.0 * ((0.5 * l).sinh() * grp.circumradius.cosh()).asinh()
}

/// Hyperbolic elements of length ≤ L whose axis meets the closed octagon's
/// circumscribed ball, one per canonical word.
pub fn candidates(grp: &SurfaceGroup, l: f64, cap: usize) -> Result<Vec<Candidate>> {
    if l <= 0.0 {
        return Err(LabError::Config(format!("census length must be positive, got {l}")));
    }
    let radius = search_radius(grp, l) + 1e-9;
    let ball = grp.ball(radius, cap)?;
    let cosh_r = grp.circumradius.cosh();
    let mut out: Vec<Candidate> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for e in ball {
        let trace = e.element.trace().abs() / e.element.det().sqrt();
        if trace <= 2.0 {
            continue;
        }
        let len = 2.0 * (0.5 * trace).acosh();
        if len > l + LENGTH_TOL {
            continue;
        }
        // cosh(dist(0, axis)) = sinh(d/2)/sinh(ℓ/2)
        let cosh_delta = (0.5 * e.distance).sinh() / (0.5 * len).sinh();
        if cosh_delta > cosh_r * (1.0 + 1e-9) {
            continue;
        }
        let canonical = canonical_word(&e.word);
        if !seen.insert(canonical.clone()) {
            continue;
        }
        out.push(Candidate {
            trace,
            element: e.element,
            word: e.word,
            canonical,
            length: len,
        });
    }
    Ok(out)
}

/// Fixed generic scalar functions used to tell classes apart.
pub fn fingerprint_fields(grp: &SurfaceGroup) -> Vec<BumpField> {
    (0..FINGERPRINT_FIELDS as u64)
        .map(|i| {
            let mut rng = batch_rng(FINGERPRINT_SEED, i);
            let mut parts = random_mode_bumps(&mut rng, grp, 0, 5, true);
            for p in &mut parts {
                p.bump.radius += 0.6;
            }
            BumpField::new(grp, parts)
        })
        .collect()
}

fn fingerprint(grp: &SurfaceGroup, fields: &[BumpField], axis: &GroupElement, length: f64) -> Vec<f64> {
    let mut acc = vec![0.0; fields.len()];
    let (x, w) = gauss_legendre(16);
    let panels = (length / 0.5).ceil() as usize;
    let h = length / panels as f64;
    for p in 0..panels {
        for (xi, wi) in x.iter().zip(&w) {
            let t = (p as f64 + 0.5 * (xi + 1.0)) * h;
            let q = PhasePoint::new(axis.flowed(Flow::Geodesic, t), grp).expect("reduction");
            for (a, f) in acc.iter_mut().zip(fields) {
                *a += 0.5 * h * wi * f.eval(&q).re;
            }
        }
    }
    acc
}

fn fp_distance(a: &[f64], b: &[f64], scale: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Group candidates into conjugacy classes (unoriented). Output is independent
/// of the input order.
pub fn classify(grp: &SurfaceGroup, mut cands: Vec<Candidate>, max_length: f64) -> Result<Census> {
    use rayon::prelude::*;
    let n_candidates = cands.len();
    cands.sort_by(|a, b| {
        a.length
            .partial_cmp(&b.length)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.canonical.len().cmp(&b.canonical.len()))
            .then_with(|| a.canonical.cmp(&b.canonical))
    });
    let fields = fingerprint_fields(grp);
    let prepared: Vec<(GroupElement, Vec<f64>)> = cands
        .par_iter()
        .map(|c| {
            let axis = axis_frame(&c.element).expect("hyperbolic candidate");
            let fp = fingerprint(grp, &fields, &axis, c.length);
            (axis, fp)
        })
        .collect();

    let mut records: Vec<GeodesicRecord> = Vec::new();
    let mut ambiguous = 0;
    let mut group_start = 0;
    for (i, c) in cands.iter().enumerate() {
        if let Some(last) = records.get(group_start) {
            if c.length - last.length > LENGTH_TOL * (1.0 + c.length) {
                group_start = records.len();
            }
        }
        let (axis, fp) = &prepared[i];
        let scale = 1.0 + c.length;
        let mut matched = false;
        for r in &records[group_start..] {
            if (r.length - c.length).abs() > LENGTH_TOL * (1.0 + c.length) {
                continue;
            }
            let d = fp_distance(&r.fingerprint, fp, scale);
            if d < MATCH_TOL {
                matched = true;
                break;
            }
            if d < AMBIGUOUS_TOL {
                ambiguous += 1;
            }
        }
        if !matched {
            records.push(GeodesicRecord {
                word: c.canonical.clone(),
                element: c.element,
                trace: c.trace,
                length: c.length,
                primitive: true,
                axis: *axis,
                start: PhasePoint::new(*axis, grp)?,
                fingerprint: fp.clone(),
            });
        }
    }

    // A proper power η^k has length kℓ_η and k times the orbit integrals of η.
    let snapshot: Vec<(f64, Vec<f64>)> = records.iter().map(|r| (r.length, r.fingerprint.clone())).collect();
    for r in &mut records {
        let scale = 1.0 + r.length;
        for (len, fp) in &snapshot {
            let k = (r.length / len).round();
            if k < 2.0 || (k * len - r.length).abs() > LENGTH_TOL * (1.0 + r.length) {
                continue;
            }
            let scaled: Vec<f64> = fp.iter().map(|x| x * k).collect();
            if fp_distance(&scaled, &r.fingerprint, scale) < MATCH_TOL {
                r.primitive = false;
                break;
            }
        }
    }
    Ok(Census { max_length, records, n_candidates, ambiguous })
}

pub fn enumerate(grp: &SurfaceGroup, l: f64, cap: usize) -> Result<Census> {
    let c = candidates(grp, l, cap)?;
    classify(grp, c, l)
}

/// Distance from 0 to the axis of a hyperbolic element.
pub fn axis_distance(g: &GroupElement) -> Result<f64> {
    let f = axis_frame(g)?;
    Ok(disk::dist_to_origin(f.frame().0))
}
