//! Compactly supported profiles on SH² and their Γ-periodizations.
//!
//! The radial profile is (1 − u)⁸ with u = (cosh d − 1)/(cosh ρ − 1), so it is
//! a rational function of the disk coordinates inside its support and C⁷
//! across the support boundary.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::disk;
use crate::fiber::FiberField;
use crate::group::GroupElement;
use crate::phase::PhasePoint;
use crate::surface::SurfaceGroup;

pub const BUMP_POWER: i32 = 16;
/// Images are kept for points up to this distance outside the octagon, so
/// finite-difference stencils need no reduction.
pub const IMAGE_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Complex64,
    pub radius: f64,
}

impl Bump {
    pub fn new(center: Complex64, radius: f64) -> Self {
        Bump { center, radius }
    }

    #[inline]
    fn inv_scale(&self) -> f64 {
        1.0 / (self.radius.cosh() - 1.0)
    }

    /// Profile as a function of cosh d − 1.
    #[inline]
    pub fn profile_from_cdm1(&self, cdm1: f64) -> f64 {
        let u = cdm1 * self.inv_scale();
        if u >= 1.0 {
            0.0
        } else {
            (1.0 - u).powi(BUMP_POWER)
        }
    }

    #[inline]
    pub fn profile(&self, w: Complex64) -> f64 {
        self.profile_from_cdm1(disk::cosh_dist_m1(w, self.center))
    }

    /// ∫_{H²} profile dA = 2π(cosh ρ − 1)/(BUMP_POWER + 1).
    pub fn integral(&self) -> f64 {
        2.0 * PI * (self.radius.cosh() - 1.0) / (BUMP_POWER as f64 + 1.0)
    }

    /// ∫ profile² dA.
    pub fn integral_sq(&self) -> f64 {
        2.0 * PI * (self.radius.cosh() - 1.0) / (2.0 * BUMP_POWER as f64 + 1.0)
    }
}

/// Images of a local profile that can reach the octagon: for each δ with
/// δ·F ∩ supp ≠ ∅ we keep δ and the preimage center δ⁻¹·c.
#[derive(Debug, Clone)]
pub struct ImageSet {
    pub elements: Vec<GroupElement>,
    pub pre_centers: Vec<Complex64>,
    pub pre_scale: Vec<f64>,
}

impl ImageSet {
    pub fn new(grp: &SurfaceGroup, center: Complex64, radius: f64) -> Self {
        let elements = grp.images_meeting_ball(center, radius + IMAGE_MARGIN);
        let pre_centers: Vec<Complex64> = elements.iter().map(|g| g.inverse().act_disk(center)).collect();
        let pre_scale = pre_centers.iter().map(|c| 2.0 / (1.0 - c.norm_sqr())).collect();
        ImageSet { elements, pre_centers, pre_scale }
    }

    /// Visit (δ, cosh d(δz, c) − 1) for images whose support contains δz.
    #[inline]
    pub fn for_each_hit<F: FnMut(&GroupElement, f64)>(&self, z: Complex64, limit: f64, mut f: F) {
        let s = 1.0 / (1.0 - z.norm_sqr());
        for i in 0..self.elements.len() {
            let cdm1 = self.pre_scale[i] * s * (z - self.pre_centers[i]).norm_sqr();
            if cdm1 < limit {
                f(&self.elements[i], cdm1);
            }
        }
    }
}

/// Bump times a fiber trigonometric polynomial Σ_{|k|≤K} a_k e^{ikθ}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeBump {
    pub bump: Bump,
    /// Coefficients a_{−K}, …, a_K.
    pub coeffs: Vec<Complex64>,
}

impl ModeBump {
    pub fn k_max(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    #[inline]
    pub fn angular(&self, dir: Complex64) -> Complex64 {
        let k = self.k_max();
        if k == 0 {
            return self.coeffs[0];
        }
        let inv = dir.conj();
        let mut pos = Complex64::new(1.0, 0.0);
        let mut neg = Complex64::new(1.0, 0.0);
        let mut acc = self.coeffs[k];
        for j in 1..=k {
            pos *= dir;
            neg *= inv;
            acc += self.coeffs[k + j] * pos + self.coeffs[k - j] * neg;
        }
        acc
    }

    /// Liouville mean of the periodized field.
    pub fn mean(&self) -> Complex64 {
        self.coeffs[self.k_max()] * self.bump.integral() / (4.0 * PI)
    }
}

/// Γ-periodization of a [`ModeBump`].
#[derive(Debug, Clone)]
pub struct PeriodicModeBump {
    pub local: ModeBump,
    images: ImageSet,
    limit: f64,
}

impl PeriodicModeBump {
    pub fn new(grp: &SurfaceGroup, local: ModeBump) -> Self {
        let images = ImageSet::new(grp, local.bump.center, local.bump.radius);
        let limit = local.bump.radius.cosh() - 1.0;
        PeriodicModeBump { local, images, limit }
    }

    #[inline]
    pub fn eval(&self, p: &PhasePoint) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let scalar = self.local.k_max() == 0;
        self.images.for_each_hit(p.z, self.limit, |g, cdm1| {
            let w = self.local.bump.profile_from_cdm1(cdm1);
            if scalar {
                acc += self.local.coeffs[0] * w;
            } else {
                let dir = p.dir * g.rotation_at(p.z);
                acc += self.local.angular(dir) * w;
            }
        });
        acc
    }
}

/// Finite sum of periodized mode bumps; the workhorse smooth field on SM.
#[derive(Debug, Clone, Default)]
pub struct BumpField {
    pub parts: Vec<PeriodicModeBump>,
}

impl BumpField {
    pub fn new(grp: &SurfaceGroup, parts: Vec<ModeBump>) -> Self {
        BumpField { parts: parts.into_iter().map(|m| PeriodicModeBump::new(grp, m)).collect() }
    }

    #[inline]
    pub fn eval(&self, p: &PhasePoint) -> Complex64 {
        self.parts.iter().map(|b| b.eval(p)).sum()
    }

    pub fn k_max(&self) -> usize {
        self.parts.iter().map(|b| b.local.k_max()).max().unwrap_or(0)
    }

    pub fn mean(&self) -> Complex64 {
        self.parts.iter().map(|b| b.local.mean()).sum()
    }

    pub fn into_field(self, grp: Arc<SurfaceGroup>, label: &str) -> FiberField {
        let k = self.k_max();
        let me = Arc::new(self);
        FiberField::new(grp, k, label, move |p| me.eval(p))
    }
}

/// Uniform point of the octagon (area measure).
pub fn random_octagon_point<R: Rng>(rng: &mut R, grp: &SurfaceGroup) -> Complex64 {
    crate::sampling::draw_liouville(rng, grp).z
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// Random smooth field: `n_bumps` periodized bumps with radii in [0.7, 1.3]
/// and fiber modes |k| ≤ K. A real field has a_{−k} = conj(a_k).
pub fn random_mode_bumps<R: Rng>(rng: &mut R, grp: &SurfaceGroup, k_max: usize, n_bumps: usize, real: bool) -> Vec<ModeBump> {
    (0..n_bumps)
        .map(|_| {
            let center = random_octagon_point(rng, grp);
            let radius = 0.7 + 0.6 * rng.random::<f64>();
            let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * k_max + 1];
            for k in 0..=k_max {
                let s = 1.0 / (1.0 + k as f64);
                let a = Complex64::new(gaussian(rng), gaussian(rng)) * s;
                if real {
                    if k == 0 {
                        coeffs[k_max] = Complex64::new(a.re, 0.0);
                    } else {
                        coeffs[k_max + k] = a;
                        coeffs[k_max - k] = a.conj();
                    }
                } else {
                    coeffs[k_max + k] = a;
                    if k > 0 {
                        coeffs[k_max - k] = Complex64::new(gaussian(rng), gaussian(rng)) * s;
                    }
                }
            }
            ModeBump { bump: Bump::new(center, radius), coeffs }
        })
        .collect()
}

/// Scalar bump (mode 0 only) with unit coefficient.
pub fn scalar_bump(center: Complex64, radius: f64) -> ModeBump {
    ModeBump { bump: Bump::new(center, radius), coeffs: vec![Complex64::new(1.0, 0.0)] }
}

/// Bump times a single mode e^{ikθ}.
pub fn pure_mode_bump(center: Complex64, radius: f64, k: i32) -> ModeBump {
    let kk = k.unsigned_abs() as usize;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * kk + 1];
    coeffs[(kk as i32 + k) as usize] = Complex64::new(1.0, 0.0);
    ModeBump { bump: Bump::new(center, radius), coeffs }
}

/// Oscillatory probe bump(z)·cos(ξ x₁) in normal coordinates x at the bump
/// center (x₁ along the real direction at the center).
#[derive(Debug, Clone)]
pub struct OscillatoryBump {
    pub bump: Bump,
    pub xi: f64,
    images: ImageSet,
    limit: f64,
}

impl OscillatoryBump {
    pub fn new(grp: &SurfaceGroup, bump: Bump, xi: f64) -> Self {
        let images = ImageSet::new(grp, bump.center, bump.radius);
        OscillatoryBump { bump, xi, images, limit: bump.radius.cosh() - 1.0 }
    }

    #[inline]
    pub fn local(&self, w: Complex64) -> f64 {
        let prof = self.bump.profile(w);
        if prof == 0.0 {
            return 0.0;
        }
        let v = disk::translate_to_origin(self.bump.center, w);
        let r = v.norm();
        let x1 = if r > 0.0 { 2.0 * r.atanh() * v.re / r } else { 0.0 };
        prof * (self.xi * x1).cos()
    }

    #[inline]
    pub fn eval(&self, p: &PhasePoint) -> f64 {
        let mut acc = 0.0;
        self.images.for_each_hit(p.z, self.limit, |g, _| {
            acc += self.local(g.act_disk(p.z));
        });
        acc
    }
}
