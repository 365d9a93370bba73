//! Poincaré disk helpers. Points are complex numbers with |z| < 1 and the
//! metric is 4|dz|²/(1−|z|²)², i.e. e^{2ω}|dz|² with ω = log(2/(1−|z|²)).

use num_complex::Complex64;

/// Conformal factor ω(z) = log(2/(1−|z|²)).
#[inline]
pub fn omega(z: Complex64) -> f64 {
    (2.0 / (1.0 - z.norm_sqr())).ln()
}

/// Gradient (∂₁ω, ∂₂ω).
#[inline]
pub fn omega_grad(z: Complex64) -> (f64, f64) {
    let s = 1.0 - z.norm_sqr();
    (2.0 * z.re / s, 2.0 * z.im / s)
}

/// cosh d(z, w) − 1, computed without cancellation.
#[inline]
pub fn cosh_dist_m1(z: Complex64, w: Complex64) -> f64 {
    2.0 * (z - w).norm_sqr() / ((1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr()))
}

#[inline]
pub fn dist(z: Complex64, w: Complex64) -> f64 {
    let c = cosh_dist_m1(z, w);
    // acosh(1 + c) = log1p(c + sqrt(c(c+2)))
    (c + (c * (c + 2.0)).sqrt()).ln_1p()
}

#[inline]
pub fn dist_to_origin(z: Complex64) -> f64 {
    2.0 * z.norm().atanh()
}

/// Euclidean radius of the disk point at hyperbolic distance `r` from 0.
#[inline]
pub fn euclid_radius(r: f64) -> f64 {
    (0.5 * r).tanh()
}

/// Hyperbolic area of a ball of radius r.
pub fn ball_area(r: f64) -> f64 {
    2.0 * std::f64::consts::PI * (r.cosh() - 1.0)
}

/// Disk isometry sending 0 to c with positive real derivative at 0.
#[inline]
pub fn translate_from_origin(c: Complex64, z: Complex64) -> Complex64 {
    (z + c) / (c.conj() * z + 1.0)
}

/// Inverse of [`translate_from_origin`]: sends c to 0.
#[inline]
pub fn translate_to_origin(c: Complex64, z: Complex64) -> Complex64 {
    (z - c) / (1.0 - c.conj() * z)
}
