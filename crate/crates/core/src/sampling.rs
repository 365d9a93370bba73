//! Liouville sampling on SM(Bolza) and deterministic seed derivation.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::disk;
use crate::error::Result;
use crate::group::GroupElement;
use crate::phase::PhasePoint;
use crate::surface::SurfaceGroup;

/// SplitMix64 finalizer, used to derive independent per-batch seeds.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut x = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn batch_rng(master: u64, batch: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(master, batch))
}

/// Where the base point of a sample is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingDomain {
    /// Normalized Liouville measure on SM.
    Surface,
    /// Uniform (area × angle) on the part of SM above a ball B(center, radius)
    /// that embeds in M. Estimates must be multiplied by [`SamplingDomain::mass`].
    Ball { center: Complex64, radius: f64 },
}

impl SamplingDomain {
    /// Liouville probability of the sampled region.
    pub fn mass(&self) -> f64 {
        match self {
            SamplingDomain::Surface => 1.0,
            SamplingDomain::Ball { radius, .. } => disk::ball_area(*radius) / (4.0 * PI),
        }
    }
}

/// Draw one Liouville sample by rejection against the Euclidean-uniform
/// proposal on the disk through the octagon vertices.
pub fn draw_liouville<R: Rng>(rng: &mut R, grp: &SurfaceGroup) -> PhasePoint {
    let rv = grp.vertex_euclid_radius();
    let floor = (1.0 - rv * rv).powi(2);
    loop {
        let r = rv * rng.random::<f64>().sqrt();
        let phi = TAU * rng.random::<f64>();
        let accept = rng.random::<f64>();
        let theta = TAU * rng.random::<f64>();
        let z = Complex64::from_polar(r, phi);
        if !grp.contains(z, 0.0) {
            continue;
        }
        let ratio = floor / (1.0 - r * r).powi(2);
        if accept < ratio {
            return PhasePoint::unreduced(GroupElement::from_disk_frame(z, theta));
        }
    }
}

/// Draw from a domain. Ball samples are reduced into the octagon.
pub fn draw<R: Rng>(rng: &mut R, grp: &SurfaceGroup, domain: &SamplingDomain) -> Result<PhasePoint> {
    match domain {
        SamplingDomain::Surface => Ok(draw_liouville(rng, grp)),
        SamplingDomain::Ball { center, radius } => {
            let u = rng.random::<f64>();
            let r = (1.0 + u * (radius.cosh() - 1.0)).acosh();
            let phi = TAU * rng.random::<f64>();
            let theta = TAU * rng.random::<f64>();
            let w = Complex64::from_polar(disk::euclid_radius(r), phi);
            let g = GroupElement::from_disk_frame(*center, 0.0) * GroupElement::from_disk_frame(w, theta);
            PhasePoint::new(g, grp)
        }
    }
}

/// n i.i.d. Liouville samples, deterministic in `seed`.
pub fn sample_liouville(n: usize, seed: u64, grp: &SurfaceGroup) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| draw_liouville(&mut rng, grp)).collect()
}
