//! PSL(2,ℝ) as 2×2 real matrices up to sign. The unit tangent bundle of the
//! upper half plane is identified with the group through g ↦ g·(i, ↑); in the
//! disk this becomes g ↦ (g·0, frame angle θ), with the identity sitting at
//! (0, θ = 0).

use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// The three frame flows, all right translations by one-parameter subgroups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flow {
    /// X: exp(tA), A = diag(½, −½).
    Geodesic,
    /// X⊥: exp(tP), P = [[0, ½], [½, 0]].
    Perpendicular,
    /// V: exp(sW), W = [[0, ½], [−½, 0]]; rotates the frame by +s.
    Rotation,
}

impl Flow {
    pub const ALL: [Flow; 3] = [Flow::Geodesic, Flow::Perpendicular, Flow::Rotation];

    pub fn exp(self, t: f64) -> GroupElement {
        let h = 0.5 * t;
        match self {
            Flow::Geodesic => GroupElement::new(h.exp(), 0.0, 0.0, (-h).exp()),
            Flow::Perpendicular => {
                let (ch, sh) = (h.cosh(), h.sinh());
                GroupElement::new(ch, sh, sh, ch)
            }
            Flow::Rotation => {
                let (s, c) = h.sin_cos();
                GroupElement::new(c, s, -s, c)
            }
        }
    }

    /// Lie-algebra generator as a row-major 2×2 array.
    pub fn generator(self) -> [[f64; 2]; 2] {
        match self {
            Flow::Geodesic => [[0.5, 0.0], [0.0, -0.5]],
            Flow::Perpendicular => [[0.0, 0.5], [0.5, 0.0]],
            Flow::Rotation => [[0.0, 0.5], [-0.5, 0.0]],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Flow::Geodesic => "X",
            Flow::Perpendicular => "Xperp",
            Flow::Rotation => "V",
        }
    }
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    #[inline]
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        GroupElement { a, b, c, d }
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    #[inline]
    pub fn inverse(&self) -> Self {
        GroupElement::new(self.d, -self.b, -self.c, self.a)
    }

    /// Divide by √det.
    pub fn normalized(&self) -> Self {
        let s = 1.0 / self.det().sqrt();
        GroupElement::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// Representative with non-negative trace (ties broken on b − c).
    pub fn sign_normalized(&self) -> Self {
        let t = self.trace();
        let flip = if t.abs() > 1e-9 { t < 0.0 } else { self.b - self.c < 0.0 };
        if flip {
            GroupElement::new(-self.a, -self.b, -self.c, -self.d)
        } else {
            *self
        }
    }

    /// Entrywise distance modulo the global sign.
    pub fn projective_distance(&self, o: &GroupElement) -> f64 {
        let plus = (self.a - o.a)
            .abs()
            .max((self.b - o.b).abs())
            .max((self.c - o.c).abs())
            .max((self.d - o.d).abs());
        let minus = (self.a + o.a)
            .abs()
            .max((self.b + o.b).abs())
            .max((self.c + o.c).abs())
            .max((self.d + o.d).abs());
        plus.min(minus)
    }

    /// Disk-model coefficients (α, β): the element acts on the disk as
    /// z ↦ (αz + β)/(β̄z + ᾱ) with |α|² − |β|² = det.
    #[inline]
    pub fn alpha_beta(&self) -> (Complex64, Complex64) {
        (
            Complex64::new(0.5 * (self.a + self.d), 0.5 * (self.b - self.c)),
            Complex64::new(0.5 * (self.a - self.d), -0.5 * (self.b + self.c)),
        )
    }

    #[inline]
    pub fn from_alpha_beta(alpha: Complex64, beta: Complex64) -> Self {
        GroupElement::new(
            alpha.re + beta.re,
            alpha.im - beta.im,
            -alpha.im - beta.im,
            alpha.re - beta.re,
        )
    }

    /// Frame at the disk point `z` making angle θ with the positive real axis.
    pub fn from_disk_frame(z: Complex64, theta: f64) -> Self {
        let s = 1.0 / (1.0 - z.norm_sqr()).sqrt();
        let half = Complex64::from_polar(1.0, 0.5 * theta);
        Self::from_alpha_beta(half * s, z * s * half.conj())
    }

    /// Hyperbolic translation of length `d` along the diameter in direction φ.
    pub fn disk_translation(phi: f64, d: f64) -> Self {
        let h = 0.5 * d;
        Self::from_alpha_beta(Complex64::new(h.cosh(), 0.0), Complex64::from_polar(h.sinh(), phi))
    }

    /// Möbius action on the disk.
    #[inline]
    pub fn act_disk(&self, z: Complex64) -> Complex64 {
        let (al, be) = self.alpha_beta();
        (al * z + be) / (be.conj() * z + al.conj())
    }

    /// Complex derivative of the disk action at z.
    #[inline]
    pub fn deriv_disk(&self, z: Complex64) -> Complex64 {
        let (al, be) = self.alpha_beta();
        let q = be.conj() * z + al.conj();
        let det = al.norm_sqr() - be.norm_sqr();
        Complex64::new(det, 0.0) / (q * q)
    }

    /// Unit complex number e^{i arg γ'(z)}: the rotation applied to tangent
    /// directions at z by the isometry.
    #[inline]
    pub fn rotation_at(&self, z: Complex64) -> Complex64 {
        let (al, be) = self.alpha_beta();
        let q = (be.conj() * z + al.conj()).conj();
        let u = q / q.norm();
        u * u
    }

    /// Base point g·0 and unit frame e^{iθ}.
    #[inline]
    pub fn frame(&self) -> (Complex64, Complex64) {
        let (al, be) = self.alpha_beta();
        let z = be / al.conj();
        let u = al / al.norm();
        (z, u * u)
    }

    /// Right translation by the flow for time t.
    #[inline]
    pub fn flowed(&self, which: Flow, t: f64) -> Self {
        *self * which.exp(t)
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Translation length 2 arccosh(|tr|/2) of a hyperbolic element.
    pub fn translation_length(&self) -> Option<f64> {
        let t = self.trace().abs() / self.det().sqrt();
        (t > 2.0).then(|| 2.0 * (0.5 * t).acosh())
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    #[inline]
    fn mul(self, o: GroupElement) -> GroupElement {
        GroupElement::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Default for GroupElement {
    fn default() -> Self {
        Self::IDENTITY
    }
}
