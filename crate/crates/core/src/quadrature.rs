//! Gauss–Legendre rules and a polar product rule on the octagon.

use std::f64::consts::{FRAC_PI_8, PI};

use num_complex::Complex64;

use crate::disk;
use crate::surface::SurfaceGroup;

/// Nodes and weights on [−1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre on [a, b] with `panels` equal panels of `order` nodes.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Product rule in hyperbolic polar coordinates over the 16 half-sectors of the
/// octagon; weights include the area element sinh r dr dφ.
#[derive(Debug, Clone)]
pub struct OctagonQuadrature {
    pub points: Vec<Complex64>,
    pub weights: Vec<f64>,
}

impl OctagonQuadrature {
    pub fn new(grp: &SurfaceGroup, n_phi: usize, n_r: usize) -> Self {
        let (xp, wp) = gauss_legendre(n_phi);
        let (xr, wr) = gauss_legendre(n_r);
        let mut points = Vec::with_capacity(16 * n_phi * n_r);
        let mut weights = Vec::with_capacity(16 * n_phi * n_r);
        for s in 0..16 {
            let lo = s as f64 * FRAC_PI_8;
            for (x, w) in xp.iter().zip(&wp) {
                let phi = lo + 0.5 * FRAC_PI_8 * (x + 1.0);
                let wphi = 0.5 * FRAC_PI_8 * w;
                let rb = grp.boundary_radius(phi);
                for (y, v) in xr.iter().zip(&wr) {
                    let r = 0.5 * rb * (y + 1.0);
                    points.push(Complex64::from_polar(disk::euclid_radius(r), phi));
                    weights.push(wphi * 0.5 * rb * v * r.sinh());
                }
            }
        }
        OctagonQuadrature { points, weights }
    }

    pub fn integrate<F: Fn(Complex64) -> f64>(&self, f: F) -> f64 {
        let mut acc = crate::stats::NeumaierSum::default();
        for (z, w) in self.points.iter().zip(&self.weights) {
            acc.add(w * f(*z));
        }
        acc.sum()
    }
}
