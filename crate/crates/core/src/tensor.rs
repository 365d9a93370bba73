//! Symmetric m-cotensors on the Bolza surface in the orthonormal coframe
//! ê^j = e^{ω} dx_j of the disk coordinates.
//!
//! A symmetric tensor is stored on the symmetric index set: component j is
//! f_{1…1 2…2} with j twos. At a point it is equivalent to the fiber
//! trigonometric polynomial θ ↦ Σ_j C(m,j) f_j cos^{m−j}θ sin^jθ, and isometries
//! act on it by rotating θ.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disk;
use crate::error::{LabError, Result};
use crate::fiber::FiberField;
use crate::fields::{Bump, ImageSet};
use crate::group::Flow;
use crate::phase::PhasePoint;
use crate::quadrature::OctagonQuadrature;
use crate::surface::SurfaceGroup;

pub type TensorEval = Arc<dyn Fn(Complex64) -> Vec<f64> + Send + Sync>;

/// Coordinate step (in hyperbolic length) for the Christoffel route.
pub const TENSOR_FD_STEP: f64 = 1e-3;
pub const MAX_DEGREE: usize = 8;

pub fn binom(m: usize, j: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..j {
        r = r * (m - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Full-index pairing Σ_{a ∈ {1,2}^m} f_a h_a from symmetric components.
pub fn tensor_dot(f: &[f64], h: &[f64]) -> f64 {
    let m = f.len() - 1;
    f.iter().zip(h).enumerate().map(|(j, (x, y))| binom(m, j) * x * y).sum()
}

/// Fiber polynomial Σ_j C(m,j) f_j c^{m−j} s^j at direction e^{iθ} = c + is.
#[inline]
pub fn fiber_polynomial(f: &[f64], dir: Complex64) -> f64 {
    let m = f.len() - 1;
    let (c, s) = (dir.re, dir.im);
    let mut acc = 0.0;
    for (j, fj) in f.iter().enumerate() {
        acc += binom(m, j) * fj * c.powi((m - j) as i32) * s.powi(j as i32);
    }
    acc
}

struct ModeMaps {
    /// sym components → Fourier coefficients of modes −m, −m+2, …, m (row-major).
    to_fourier: Vec<Complex64>,
    from_fourier: Vec<Complex64>,
}

fn mode_maps(m: usize) -> &'static ModeMaps {
    static MAPS: OnceLock<Vec<ModeMaps>> = OnceLock::new();
    &MAPS.get_or_init(|| {
        (0..=MAX_DEGREE)
            .map(|m| {
                let n = 2 * m + 2;
                let mut to = DMatrix::<Complex64>::zeros(m + 1, m + 1);
                for j in 0..=m {
                    let mut e = vec![0.0; m + 1];
                    e[j] = 1.0;
                    for (r, k) in (0..=m).map(|r| (r, 2 * r as i64 - m as i64)) {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for q in 0..n {
                            let th = TAU * q as f64 / n as f64;
                            acc += fiber_polynomial(&e, Complex64::from_polar(1.0, th)) * Complex64::from_polar(1.0, -(k as f64) * th);
                        }
                        to[(r, j)] = acc / n as f64;
                    }
                }
                let from = to.clone().try_inverse().expect("monomial/Fourier map is invertible");
                let flat = |a: &DMatrix<Complex64>| (0..=m).flat_map(|r| (0..=m).map(move |c| (r, c))).map(|(r, c)| a[(r, c)]).collect();
                ModeMaps { to_fourier: flat(&to), from_fourier: flat(&from) }
            })
            .collect::<Vec<_>>()
    })[m]
}

/// Fourier coefficients (modes −m, −m+2, …, m) of the fiber polynomial.
pub fn to_fourier(f: &[f64]) -> Vec<Complex64> {
    let m = f.len() - 1;
    let maps = mode_maps(m);
    (0..=m).map(|r| (0..=m).map(|j| maps.to_fourier[r * (m + 1) + j] * f[j]).sum()).collect()
}

pub fn from_fourier(c: &[Complex64]) -> Vec<f64> {
    let m = c.len() - 1;
    let maps = mode_maps(m);
    (0..=m).map(|j| (0..=m).map(|r| maps.from_fourier[j * (m + 1) + r] * c[r]).sum::<Complex64>().re).collect()
}

/// out += scale · (components with fiber polynomial P(θ + φ)), `rot` = e^{iφ}.
#[inline]
pub fn rotate_accumulate(f: &[f64], scale: f64, rot: Complex64, out: &mut [f64]) {
    let m = f.len() - 1;
    if m == 0 {
        out[0] += scale * f[0];
        return;
    }
    let maps = mode_maps(m);
    let mut c = [Complex64::new(0.0, 0.0); MAX_DEGREE + 1];
    let step = rot * rot;
    let mut pw = rot.conj().powi(m as i32);
    for (r, cr) in c.iter_mut().enumerate().take(m + 1) {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=m {
            acc += maps.to_fourier[r * (m + 1) + j] * f[j];
        }
        *cr = acc * pw * scale;
        pw *= step;
    }
    for (j, o) in out.iter_mut().enumerate().take(m + 1) {
        let mut acc = 0.0;
        for r in 0..=m {
            let a = maps.from_fourier[j * (m + 1) + r];
            acc += a.re * c[r].re - a.im * c[r].im;
        }
        *o += acc;
    }
}

/// Components of the pulled-back tensor whose fiber polynomial is P(θ + φ),
/// where `rot` = e^{iφ}.
pub fn rotate_components(f: &[f64], rot: Complex64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    rotate_accumulate(f, 1.0, rot, &mut out);
    out
}

/// Least-squares symmetric components of degree m from fiber samples at the
/// given directions.
pub fn components_from_fiber(m: usize, dirs: &[Complex64], values: &[f64]) -> Vec<f64> {
    let a = DMatrix::from_fn(dirs.len(), m + 1, |r, j| {
        let mut e = vec![0.0; m + 1];
        e[j] = 1.0;
        fiber_polynomial(&e, dirs[r])
    });
    let b = DVector::from_column_slice(values);
    let svd = a.svd(true, true);
    svd.solve(&b, 1e-14).expect("svd solve").iter().copied().collect()
}

/// A tensor bump with constant orthonormal components times the radial profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorBump {
    pub bump: Bump,
    pub comps: Vec<f64>,
}

/// Γ-periodization of a sum of tensor bumps.
#[derive(Debug, Clone)]
pub struct PeriodicTensor {
    pub m: usize,
    parts: Vec<(TensorBump, ImageSet, f64)>,
}

impl PeriodicTensor {
    pub fn new(grp: &SurfaceGroup, m: usize, bumps: Vec<TensorBump>) -> Self {
        let parts = bumps
            .into_iter()
            .map(|b| {
                assert_eq!(b.comps.len(), m + 1, "component count must be m + 1");
                let images = ImageSet::new(grp, b.bump.center, b.bump.radius);
                let lim = b.bump.radius.cosh() - 1.0;
                (b, images, lim)
            })
            .collect();
        PeriodicTensor { m, parts }
    }

    /// Components at a point of the octagon.
    pub fn eval_reduced(&self, z: Complex64) -> Vec<f64> {
        let mut out = vec![0.0; self.m + 1];
        for (b, images, lim) in &self.parts {
            images.for_each_hit(z, *lim, |g, cdm1| {
                rotate_accumulate(&b.comps, b.bump.profile_from_cdm1(cdm1), g.rotation_at(z), &mut out);
            });
        }
        out
    }
}

#[derive(Clone)]
pub struct SymmetricTensor {
    pub m: usize,
    eval: TensorEval,
    grp: Arc<SurfaceGroup>,
    pub label: String,
}

impl fmt::Debug for SymmetricTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricTensor").field("m", &self.m).field("label", &self.label).finish()
    }
}

impl SymmetricTensor {
    /// Tensor from an evaluator valid at every disk point.
    pub fn from_fn<F>(grp: Arc<SurfaceGroup>, m: usize, label: &str, f: F) -> Self
    where
        F: Fn(Complex64) -> Vec<f64> + Send + Sync + 'static,
    {
        SymmetricTensor { m, eval: Arc::new(f), grp, label: label.to_string() }
    }

    /// Γ-invariant tensor from an evaluator valid on the octagon; other points
    /// are reduced and the result pulled back.
    pub fn from_reduced_fn<F>(grp: Arc<SurfaceGroup>, m: usize, label: &str, f: F) -> Self
    where
        F: Fn(Complex64) -> Vec<f64> + Send + Sync + 'static,
    {
        let g2 = grp.clone();
        Self::from_fn(grp, m, label, move |z| {
            let (w, gamma) = g2.reduce(z).expect("reduction");
            let v = f(w);
            if w == z {
                v
            } else {
                rotate_components(&v, gamma.rotation_at(z))
            }
        })
    }

    pub fn periodic_bumps(grp: Arc<SurfaceGroup>, m: usize, label: &str, bumps: Vec<TensorBump>) -> Self {
        let per = Arc::new(PeriodicTensor::new(&grp, m, bumps));
        Self::from_reduced_fn(grp, m, label, move |z| per.eval_reduced(z))
    }

    pub fn metric(grp: Arc<SurfaceGroup>) -> Self {
        Self::from_fn(grp, 2, "g", |_| vec![1.0, 0.0, 1.0])
    }

    pub fn zero(grp: Arc<SurfaceGroup>, m: usize) -> Self {
        Self::from_fn(grp, m, "0", move |_| vec![0.0; m + 1])
    }

    pub fn surface(&self) -> &Arc<SurfaceGroup> {
        &self.grp
    }

    #[inline]
    pub fn components(&self, z: Complex64) -> Vec<f64> {
        (self.eval)(z)
    }

    /// Component with an arbitrary index tuple (entries 1 or 2).
    pub fn full_component(&self, z: Complex64, idx: &[u8]) -> f64 {
        assert_eq!(idx.len(), self.m);
        let j = idx.iter().filter(|&&i| i == 2).count();
        self.components(z)[j]
    }

    pub fn linear_combination(terms: &[(f64, &SymmetricTensor)]) -> Self {
        let m = terms[0].1.m;
        assert!(terms.iter().all(|(_, t)| t.m == m));
        let owned: Vec<(f64, SymmetricTensor)> = terms.iter().map(|(c, t)| (*c, (*t).clone())).collect();
        let grp = terms[0].1.grp.clone();
        Self::from_fn(grp, m, "lincomb", move |z| {
            let mut out = vec![0.0; m + 1];
            for (c, t) in &owned {
                for (o, v) in out.iter_mut().zip(t.components(z)) {
                    *o += c * v;
                }
            }
            out
        })
    }

    pub fn sub(&self, o: &SymmetricTensor) -> Self {
        Self::linear_combination(&[(1.0, self), (-1.0, o)])
    }

    /// Contraction of the first two slots with the metric.
    pub fn trace(&self) -> Result<Self> {
        if self.m < 2 {
            return Err(LabError::Degree(format!("trace needs m ≥ 2, got {}", self.m)));
        }
        let f = self.clone();
        Ok(Self::from_fn(self.grp.clone(), self.m - 2, &format!("tr({})", self.label), move |z| {
            let c = f.components(z);
            (0..=f.m - 2).map(|j| c[j] + c[j + 2]).collect()
        }))
    }

    /// Projection onto trace-free tensors: keep fiber modes ±m.
    pub fn trace_free_part(&self) -> Self {
        let f = self.clone();
        let m = self.m;
        Self::from_fn(self.grp.clone(), m, &format!("tf({})", self.label), move |z| {
            let c = f.components(z);
            if m < 2 {
                return c;
            }
            let mut four = to_fourier(&c);
            for ck in four.iter_mut().take(m).skip(1) {
                *ck = Complex64::new(0.0, 0.0);
            }
            from_fourier(&four)
        })
    }

    /// Orthonormal components of ∇f at z, as a full-index array of length
    /// 2^{m+1}; bit 0 of the index is the derivative slot, bit p the p-th slot
    /// (bit set = index 2).
    pub fn covariant_derivative(&self, z: Complex64) -> Vec<f64> {
        let m = self.m;
        let om = disk::omega(z);
        let (w1, w2) = disk::omega_grad(z);
        let wv = [w1, w2];
        let coord = |p: Complex64| -> Vec<f64> {
            let s = (m as f64 * disk::omega(p)).exp();
            self.components(p).into_iter().map(|x| x * s).collect()
        };
        let h = TENSOR_FD_STEP * (1.0 - z.norm_sqr()) / 2.0;
        let mut dt = [vec![0.0; m + 1], vec![0.0; m + 1]];
        for (i, dir) in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)].iter().enumerate() {
            let p2 = coord(z + dir * (2.0 * h));
            let p1 = coord(z + dir * h);
            let m1 = coord(z - dir * h);
            let m2 = coord(z - dir * (2.0 * h));
            for j in 0..=m {
                dt[i][j] = (-p2[j] + 8.0 * p1[j] - 8.0 * m1[j] + m2[j]) / (12.0 * h);
            }
        }
        let t0 = coord(z);
        let pop = |a: usize| a.count_ones() as usize;
        let gamma = |k: usize, i: usize, j: usize| -> f64 {
            let mut g = 0.0;
            if i == k {
                g += wv[j];
            }
            if j == k {
                g += wv[i];
            }
            if i == j {
                g -= wv[k];
            }
            g
        };
        let scale = (-(m as f64 + 1.0) * om).exp();
        let mut out = vec![0.0; 1 << (m + 1)];
        for (idx, o) in out.iter_mut().enumerate() {
            let i = idx & 1;
            let a = idx >> 1;
            let mut v = dt[i][pop(a)];
            for p in 0..m {
                let ap = (a >> p) & 1;
                for k in 0..2 {
                    let g = gamma(k, i, ap);
                    if g != 0.0 {
                        let swapped = (a & !(1 << p)) | (k << p);
                        v -= g * t0[pop(swapped)];
                    }
                }
            }
            *o = v * scale;
        }
        out
    }

    /// D = 𝒮∘∇ (Christoffel route).
    pub fn sym_derivative(&self) -> Self {
        let f = self.clone();
        let m = self.m;
        Self::from_fn(self.grp.clone(), m + 1, &format!("D({})", self.label), move |z| {
            let nab = f.covariant_derivative(z);
            (0..=m + 1)
                .map(|j| {
                    // representative b = (1,…,1,2,…,2) with j twos
                    let b: Vec<usize> = (0..=m).map(|p| usize::from(p >= m + 1 - j)).collect();
                    let mut acc = 0.0;
                    for p in 0..=m {
                        let i = b[p];
                        let rest: Vec<usize> = b.iter().enumerate().filter(|(q, _)| *q != p).map(|(_, x)| *x).collect();
                        let a = rest.iter().enumerate().fold(0usize, |s, (q, x)| s | (x << q));
                        acc += nab[i | (a << 1)];
                    }
                    acc / (m + 1) as f64
                })
                .collect()
        })
    }

    /// D* = −𝒯(∇f), contracting the derivative slot with the first slot.
    pub fn divergence(&self) -> Result<Self> {
        if self.m == 0 {
            return Err(LabError::Degree("divergence needs m ≥ 1".into()));
        }
        let f = self.clone();
        let m = self.m;
        Ok(Self::from_fn(self.grp.clone(), m - 1, &format!("D*({})", self.label), move |z| {
            let nab = f.covariant_derivative(z);
            (0..m)
                .map(|j| {
                    let rest: usize = (0..m - 1).fold(0, |s, q| s | (usize::from(q >= m - 1 - j) << q));
                    let mut acc = 0.0;
                    for i in 0..2 {
                        let a = i | (rest << 1);
                        acc += nab[i | (a << 1)];
                    }
                    -acc
                })
                .collect()
        }))
    }

    /// π_m^* f as a fiber field.
    pub fn pi_star_up(&self) -> FiberField {
        let f = self.clone();
        FiberField::new(self.grp.clone(), self.m, &format!("pi*({})", self.label), move |p: &PhasePoint| {
            Complex64::new(fiber_polynomial(&f.components(p.z), p.dir), 0.0)
        })
    }

    /// π_m∗ u: fiber integrals against the monomials c^{m−j}s^j with dθ. The
    /// full-index pairing weighs component j by C(m,j), which is exactly the
    /// Gram weight of the monomial frame, so these integrals are already the
    /// adjoint components. Real part of u is used.
    pub fn pi_star_down(u: &FiberField, m: usize) -> Self {
        let u = u.clone();
        let grp = u.surface().clone();
        let n = (u.n_theta).max(2 * (u.k_max + m) + 2);
        let g2 = grp.clone();
        Self::from_fn(grp, m, &format!("pi_{m}*({})", u.label), move |z| {
            // reduced frame, but rotations are still measured in the frame at z
            let base = PhasePoint::new(crate::group::GroupElement::from_disk_frame(z, 0.0), &g2).expect("reduction");
            let mut out = vec![0.0; m + 1];
            for q in 0..n {
                let th = TAU * q as f64 / n as f64;
                let v = u.eval(&base.rotated(th)).re;
                let dir = Complex64::from_polar(1.0, th);
                let (c, s) = (dir.re, dir.im);
                for (j, o) in out.iter_mut().enumerate() {
                    *o += v * c.powi((m - j) as i32) * s.powi(j as i32);
                }
            }
            let w = TAU / n as f64;
            out.into_iter().map(|x| x * w).collect()
        })
    }

    /// Hodge rotation of a 1-form: (⋆f)(v) = f(Jv) with J the rotation by +π/2.
    pub fn hodge_star(&self) -> Result<Self> {
        if self.m != 1 {
            return Err(LabError::Degree("hodge star implemented for 1-forms".into()));
        }
        let f = self.clone();
        Ok(Self::from_fn(self.grp.clone(), 1, &format!("*{}", self.label), move |z| {
            let c = f.components(z);
            vec![c[1], -c[0]]
        }))
    }
}

/// Fiber samples used by the dual routes.
fn fiber_directions(n: usize) -> Vec<f64> {
    (0..n).map(|q| TAU * (q as f64 + 0.37) / n as f64).collect()
}

/// Df at z through X π_m^* f = π_{m+1}^*(Df).
pub fn sym_derivative_fiber(f: &SymmetricTensor, z: Complex64) -> Vec<f64> {
    let u = f.pi_star_up();
    let n = 2 * f.m + 6;
    let mut dirs = Vec::new();
    let mut vals = Vec::new();
    for th in fiber_directions(n) {
        let p = PhasePoint::unreduced(crate::group::GroupElement::from_disk_frame(z, th));
        let p = PhasePoint::new(p.g, f.surface()).expect("reduction");
        vals.push(u.derivative_at(&p, Flow::Geodesic).re);
        dirs.push(Complex64::from_polar(1.0, th));
    }
    components_from_fiber(f.m + 1, &dirs, &vals)
}

/// D*f at z through π_{m−1}^*(D*f) = −X u + (1/m) X⊥ V u with u = π_m^* f.
pub fn divergence_fiber(f: &SymmetricTensor, z: Complex64) -> Vec<f64> {
    let m = f.m;
    let u = f.pi_star_up();
    let vu = u.derive(Flow::Rotation);
    let n = 2 * m + 6;
    let mut dirs = Vec::new();
    let mut vals = Vec::new();
    for th in fiber_directions(n) {
        let p = PhasePoint::new(crate::group::GroupElement::from_disk_frame(z, th), f.surface()).expect("reduction");
        let v = -u.derivative_at(&p, Flow::Geodesic).re + vu.derivative_at(&p, Flow::Perpendicular).re / m as f64;
        vals.push(v);
        dirs.push(Complex64::from_polar(1.0, th));
    }
    components_from_fiber(m - 1, &dirs, &vals)
}

/// L² inner product over the surface by octagon quadrature.
pub fn l2_inner(a: &SymmetricTensor, b: &SymmetricTensor, quad: &OctagonQuadrature) -> f64 {
    assert_eq!(a.m, b.m);
    quad.integrate(|z| tensor_dot(&a.components(z), &b.components(z)))
}

/// Values of a tensor at all quadrature nodes.
pub fn sample_on(t: &SymmetricTensor, quad: &OctagonQuadrature) -> Vec<Vec<f64>> {
    use rayon::prelude::*;
    quad.points.par_iter().map(|z| t.components(*z)).collect()
}

fn inner_sampled(a: &[Vec<f64>], b: &[Vec<f64>], w: &[f64]) -> f64 {
    let mut acc = crate::stats::NeumaierSum::default();
    for ((x, y), wi) in a.iter().zip(b).zip(w) {
        acc.add(wi * tensor_dot(x, y));
    }
    acc.sum()
}

/// Result of [`solenoidal_project`].
#[derive(Debug, Clone)]
pub struct SolenoidalProjection {
    pub f_sol: SymmetricTensor,
    pub coefficients: Vec<f64>,
    pub condition_number: f64,
    /// max_j |⟨f_sol, Dq_j⟩| / (‖f‖ ‖Dq_j‖).
    pub orthogonality_residual: f64,
    pub potential_norm_ratio: f64,
}

/// Minimize ‖f − Σ c_j D q_j‖ over the potential basis with Tikhonov
/// regularization 1e−8 × largest normal-matrix eigenvalue.
pub fn solenoidal_project(f: &SymmetricTensor, basis: &[SymmetricTensor], quad: &OctagonQuadrature) -> Result<SolenoidalProjection> {
    if f.m == 0 {
        return Err(LabError::Degree("solenoidal projection needs m ≥ 1".into()));
    }
    if basis.iter().any(|q| q.m + 1 != f.m) {
        return Err(LabError::Degree("potential basis must have degree m − 1".into()));
    }
    let dq: Vec<SymmetricTensor> = basis.iter().map(|q| q.sym_derivative()).collect();
    let samples: Vec<Vec<Vec<f64>>> = dq.iter().map(|t| sample_on(t, quad)).collect();
    let fs = sample_on(f, quad);
    let b = basis.len();
    let mut a = DMatrix::<f64>::zeros(b, b);
    let mut rhs = DVector::<f64>::zeros(b);
    for i in 0..b {
        for j in 0..=i {
            let v = inner_sampled(&samples[i], &samples[j], &quad.weights);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        rhs[i] = inner_sampled(&samples[i], &fs, &quad.weights);
    }
    let eig = a.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if cond > 1e12 {
        return Err(LabError::IllConditioned(cond));
    }
    let eps = 1e-8 * lmax;
    let mut reg = a.clone();
    for i in 0..b {
        reg[(i, i)] += eps;
    }
    let c = reg.cholesky().ok_or(LabError::IllConditioned(cond))?.solve(&rhs);
    let coefficients: Vec<f64> = c.iter().copied().collect();

    let sol: Vec<Vec<f64>> = fs
        .iter()
        .enumerate()
        .map(|(n, x)| {
            let mut y = x.clone();
            for (k, ck) in coefficients.iter().enumerate() {
                for (yy, d) in y.iter_mut().zip(&samples[k][n]) {
                    *yy -= ck * d;
                }
            }
            y
        })
        .collect();
    let fnorm = inner_sampled(&fs, &fs, &quad.weights).sqrt();
    let mut orth: f64 = 0.0;
    for s in &samples {
        let dn = inner_sampled(s, s, &quad.weights).sqrt();
        if dn > 0.0 && fnorm > 0.0 {
            orth = orth.max(inner_sampled(&sol, s, &quad.weights).abs() / (fnorm * dn));
        }
    }
    let pot: Vec<Vec<f64>> = fs.iter().zip(&sol).map(|(x, y)| x.iter().zip(y).map(|(a, b)| a - b).collect()).collect();
    let ratio = if fnorm > 0.0 { inner_sampled(&pot, &pot, &quad.weights).sqrt() / fnorm } else { 0.0 };

    let terms: Vec<(f64, SymmetricTensor)> = coefficients.iter().zip(&dq).map(|(c, d)| (-*c, d.clone())).collect();
    let f0 = f.clone();
    let m = f.m;
    let f_sol = SymmetricTensor::from_fn(f.grp.clone(), m, &format!("sol({})", f.label), move |z| {
        let mut out = f0.components(z);
        for (c, d) in &terms {
            for (o, v) in out.iter_mut().zip(d.components(z)) {
                *o += c * v;
            }
        }
        out
    });
    Ok(SolenoidalProjection {
        f_sol,
        coefficients,
        condition_number: cond,
        orthogonality_residual: orth,
        potential_norm_ratio: ratio,
    })
}

/// Tensor bumps of degree m with random components, centers in the octagon and
/// radii in [0.7, 1.3].
pub fn random_tensor_bumps<R: rand::Rng>(rng: &mut R, grp: &SurfaceGroup, m: usize, n: usize) -> Vec<TensorBump> {
    (0..n)
        .map(|_| {
            let center = crate::fields::random_octagon_point(rng, grp);
            let radius = 0.7 + 0.6 * rng.random::<f64>();
            let comps = (0..=m).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            TensorBump { bump: Bump::new(center, radius), comps }
        })
        .collect()
}

/// sup over probes of |f| and |Df| (full-index norms).
pub fn c1_norm(f: &SymmetricTensor, probes: &[Complex64]) -> f64 {
    let d = f.sym_derivative();
    probes
        .iter()
        .map(|z| {
            let a = f.components(*z);
            let b = d.components(*z);
            tensor_dot(&a, &a).sqrt().max(tensor_dot(&b, &b).sqrt())
        })
        .fold(0.0, f64::max)
}

/// π_m^*(π_m∗ q) / q for the pure mode q = e^{imθ}: closed form 2π/2^m (m ≥ 1).
pub fn fiber_constant(m: usize) -> f64 {
    if m == 0 {
        TAU
    } else {
        TAU / 2f64.powi(m as i32)
    }
}
