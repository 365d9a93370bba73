//! Functions on SM with fiber-Fourier structure and the frame operators.
//!
//! Derivatives are central differences along the exact flows; fiber
//! coefficients come from the trapezoid rule over rotations of the frame, so
//! u_k(p) is the value at p of the k-th fiber mode of u.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::group::Flow;
use crate::phase::PhasePoint;
use crate::surface::SurfaceGroup;

pub type Evaluator = Arc<dyn Fn(&PhasePoint) -> Complex64 + Send + Sync>;

pub const DEFAULT_STEP: f64 = 1e-4;

#[derive(Clone)]
pub struct FiberField {
    eval: Evaluator,
    pub k_max: usize,
    pub n_theta: usize,
    /// Finite-difference step along flows.
    pub h: f64,
    /// When false the field lives on the universal cover and flows skip reduction.
    pub reduce: bool,
    pub label: String,
    grp: Arc<SurfaceGroup>,
}

impl fmt::Debug for FiberField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiberField")
            .field("label", &self.label)
            .field("k_max", &self.k_max)
            .field("n_theta", &self.n_theta)
            .finish()
    }
}

/// Sign selector for η±.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl FiberField {
    pub fn new<F>(grp: Arc<SurfaceGroup>, k_max: usize, label: &str, f: F) -> Self
    where
        F: Fn(&PhasePoint) -> Complex64 + Send + Sync + 'static,
    {
        FiberField {
            eval: Arc::new(f),
            k_max,
            n_theta: 4 * k_max + 4,
            h: DEFAULT_STEP,
            reduce: true,
            label: label.to_string(),
            grp,
        }
    }

    /// Field on the universal cover (no Γ-invariance assumed).
    pub fn on_cover<F>(grp: Arc<SurfaceGroup>, k_max: usize, label: &str, f: F) -> Self
    where
        F: Fn(&PhasePoint) -> Complex64 + Send + Sync + 'static,
    {
        let mut u = Self::new(grp, k_max, label, f);
        u.reduce = false;
        u
    }

    pub fn constant(grp: Arc<SurfaceGroup>, c: Complex64) -> Self {
        Self::new(grp, 0, "const", move |_| c)
    }

    pub fn surface(&self) -> &Arc<SurfaceGroup> {
        &self.grp
    }

    #[inline]
    pub fn eval(&self, p: &PhasePoint) -> Complex64 {
        (self.eval)(p)
    }

    fn derived<F>(&self, k_max: usize, label: String, f: F) -> Self
    where
        F: Fn(&PhasePoint) -> Complex64 + Send + Sync + 'static,
    {
        FiberField {
            eval: Arc::new(f),
            k_max,
            n_theta: (4 * k_max + 4).max(self.n_theta),
            h: self.h,
            reduce: self.reduce,
            label,
            grp: self.grp.clone(),
        }
    }

    /// Point reached by the flow, reduced unless the field lives on the cover.
    #[inline]
    pub fn step(&self, p: &PhasePoint, which: Flow, t: f64) -> PhasePoint {
        let g = p.g.flowed(which, t);
        if self.reduce {
            PhasePoint::new(g, &self.grp).expect("reduction")
        } else {
            PhasePoint::unreduced(g)
        }
    }

    /// Central difference along the flow at p.
    pub fn derivative_at(&self, p: &PhasePoint, which: Flow) -> Complex64 {
        let h = self.h;
        if which == Flow::Rotation {
            return (self.eval(&p.rotated(h)) - self.eval(&p.rotated(-h))) / (2.0 * h);
        }
        (self.eval(&self.step(p, which, h)) - self.eval(&self.step(p, which, -h))) / (2.0 * h)
    }

    pub fn derive(&self, which: Flow) -> Self {
        let u = self.clone();
        let k = if which == Flow::Rotation { self.k_max } else { self.k_max + 1 };
        self.derived(k, format!("{}({})", which.name(), self.label), move |p| u.derivative_at(p, which))
    }

    /// η± = ½(X ± iX⊥).
    pub fn eta(&self, sign: Sign) -> Self {
        let u = self.clone();
        let s = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        let name = if s > 0.0 { "eta+" } else { "eta-" };
        self.derived(self.k_max + 1, format!("{name}({})", self.label), move |p| {
            let x = u.derivative_at(p, Flow::Geodesic);
            let xp = u.derivative_at(p, Flow::Perpendicular);
            0.5 * (x + Complex64::new(0.0, s) * xp)
        })
    }

    /// Values at the n_theta rotations of p.
    pub fn fiber_samples(&self, p: &PhasePoint) -> Vec<Complex64> {
        let n = self.n_theta;
        (0..n).map(|j| self.eval(&p.rotated(TAU * j as f64 / n as f64))).collect()
    }

    /// Full discrete spectrum: index j ↦ mode k = j for j ≤ n/2, j − n otherwise.
    pub fn spectrum(&self, p: &PhasePoint) -> Vec<(i64, Complex64)> {
        let v = self.fiber_samples(p);
        let n = v.len();
        (0..n)
            .map(|j| {
                let k = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
                (k, dft_coefficient(&v, k))
            })
            .collect()
    }

    /// Coefficients u_k(p) for k = −K..K.
    pub fn coefficients(&self, p: &PhasePoint) -> Vec<Complex64> {
        let v = self.fiber_samples(p);
        let k = self.k_max as i64;
        (-k..=k).map(|m| dft_coefficient(&v, m)).collect()
    }

    /// The single-mode component u_k as a field.
    pub fn mode(&self, k: i64) -> Self {
        let u = self.clone();
        self.derived(k.unsigned_abs() as usize, format!("mode{k}({})", self.label), move |p| {
            dft_coefficient(&u.fiber_samples(p), k)
        })
    }

    fn filtered<F: Fn(i64) -> bool + Send + Sync + 'static>(&self, label: String, keep: F) -> Self {
        let u = self.clone();
        self.derived(self.k_max, label, move |p| {
            let v = u.fiber_samples(p);
            let k = u.k_max as i64;
            (-k..=k).filter(|m| keep(*m)).map(|m| dft_coefficient(&v, m)).sum()
        })
    }

    /// Szegő projection onto modes k ≥ 1.
    pub fn szego(&self) -> Self {
        self.filtered(format!("S({})", self.label), |k| k >= 1)
    }

    /// (even, odd) parts under the antipodal map.
    pub fn antipodal_split(&self) -> (Self, Self) {
        (
            self.filtered(format!("even({})", self.label), |k| k % 2 == 0),
            self.filtered(format!("odd({})", self.label), |k| k % 2 != 0),
        )
    }

    /// A*u(x, v) = u(x, −v).
    pub fn antipodal_pullback(&self) -> Self {
        let u = self.clone();
        self.derived(self.k_max, format!("A*({})", self.label), move |p| u.eval(&p.antipode()))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let u = self.clone();
        self.derived(self.k_max, format!("{c}*{}", self.label), move |p| c * u.eval(p))
    }

    pub fn add(&self, other: &FiberField) -> Self {
        let (u, v) = (self.clone(), other.clone());
        self.derived(self.k_max.max(other.k_max), format!("{}+{}", self.label, other.label), move |p| {
            u.eval(p) + v.eval(p)
        })
    }

    pub fn sub(&self, other: &FiberField) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &FiberField) -> Self {
        let (u, v) = (self.clone(), other.clone());
        self.derived(self.k_max + other.k_max, format!("{}*{}", self.label, other.label), move |p| {
            u.eval(p) * v.eval(p)
        })
    }

    /// max over probes of |u| and its first frame derivatives.
    pub fn c1_norm(&self, probes: &[PhasePoint]) -> f64 {
        probes
            .iter()
            .map(|p| {
                Flow::ALL
                    .iter()
                    .map(|w| self.derivative_at(p, *w).norm())
                    .fold(self.eval(p).norm(), f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// C¹ norm plus all second frame derivatives.
    pub fn c2_norm(&self, probes: &[PhasePoint]) -> f64 {
        let mut m = self.c1_norm(probes);
        for w in Flow::ALL {
            let d = self.derive(w);
            for v in Flow::ALL {
                for p in probes {
                    m = m.max(d.derivative_at(p, v).norm());
                }
            }
        }
        m
    }
}

/// (1/n) Σ_j v_j e^{−ik·2πj/n}.
pub fn dft_coefficient(v: &[Complex64], k: i64) -> Complex64 {
    let n = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, x) in v.iter().enumerate() {
        let ang = -TAU * ((k * j as i64).rem_euclid(n as i64)) as f64 / n as f64;
        acc += x * Complex64::from_polar(1.0, ang);
    }
    acc / n as f64
}

/// Fiber coefficients of a field at a probe set, with quadrature weights.
#[derive(Debug, Clone)]
pub struct ModeCoefficients {
    pub k: i64,
    pub values: Vec<Complex64>,
    pub weights: Vec<f64>,
}

impl ModeCoefficients {
    pub fn sample(u: &FiberField, k: i64, probes: &[PhasePoint]) -> Self {
        let values = probes.iter().map(|p| dft_coefficient(&u.fiber_samples(p), k)).collect();
        ModeCoefficients { k, values, weights: vec![1.0 / probes.len() as f64; probes.len()] }
    }

    /// Weighted L² norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(v, w)| w * v.norm_sqr()).sum::<f64>().sqrt()
    }
}
