//! The Bolza surface as Γ\H² for the regular octagon with interior angles π/4.
//!
//! Side k of the octagon has its midpoint at angle kπ/4. The generator s_k is
//! the translation of length ℓ₀ along that direction; it maps side k+4 onto
//! side k, and s_{k+4} = s_k⁻¹. The octagon is the Dirichlet domain at 0.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disk;
use crate::error::{LabError, Result};
use crate::group::GroupElement;

/// cosh of the inradius, cot(π/8) = 1 + √2.
pub const COSH_INRADIUS: f64 = 1.0 + std::f64::consts::SQRT_2;
/// cosh of the circumradius, cot²(π/8) = 3 + 2√2.
pub const COSH_CIRCUMRADIUS: f64 = 3.0 + 2.0 * std::f64::consts::SQRT_2;
/// Word realizing the defining relation: s0 s5 s2 s7 s4 s1 s6 s3 = 1.
pub const RELATION: [u8; 8] = [0, 5, 2, 7, 4, 1, 6, 3];
/// Cap on greedy reduction steps.
pub const MAX_REDUCTION_STEPS: usize = 10_000;

/// Inverse letter in the 8-letter alphabet.
#[inline]
pub fn inverse_letter(k: u8) -> u8 {
    (k + 4) % 8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceGroup {
    pub generators: [GroupElement; 8],
    pub octagon_vertices: [Complex64; 8],
    pub relation_residual: f64,
    /// Centers s_k·0 of the neighbouring tiles.
    pub neighbour_centers: [Complex64; 8],
    pub inradius: f64,
    pub circumradius: f64,
    #[serde(skip)]
    balls: BallCache,
}

#[derive(Debug, Clone, Default)]
struct BallCache(Arc<OnceLock<Vec<(f64, GroupElement)>>>);

/// Element of Γ discovered by breadth-first search, with the word that reached it.
#[derive(Debug, Clone)]
pub struct BallElement {
    pub element: GroupElement,
    pub word: Vec<u8>,
    pub distance: f64,
}

/// Radius of the cached neighbourhood used by periodized fields.
const CACHE_RADIUS: f64 = 9.5;

pub fn build_bolza() -> Result<SurfaceGroup> {
    let inradius = COSH_INRADIUS.acosh();
    let circumradius = COSH_CIRCUMRADIUS.acosh();
    let l0 = 2.0 * inradius;
    let mut generators = [GroupElement::IDENTITY; 8];
    for (k, g) in generators.iter_mut().enumerate() {
        *g = GroupElement::disk_translation(k as f64 * FRAC_PI_4, l0);
    }
    let rv = disk::euclid_radius(circumradius);
    let mut octagon_vertices = [Complex64::new(0.0, 0.0); 8];
    for (k, v) in octagon_vertices.iter_mut().enumerate() {
        *v = Complex64::from_polar(rv, k as f64 * FRAC_PI_4 + FRAC_PI_8);
    }
    let mut neighbour_centers = [Complex64::new(0.0, 0.0); 8];
    for k in 0..8 {
        neighbour_centers[k] = generators[k].act_disk(Complex64::new(0.0, 0.0));
    }
    let mut rel = GroupElement::IDENTITY;
    for &k in RELATION.iter() {
        rel = rel * generators[k as usize];
    }
    let relation_residual = rel.projective_distance(&GroupElement::IDENTITY);
    let grp = SurfaceGroup {
        generators,
        octagon_vertices,
        relation_residual,
        neighbour_centers,
        inradius,
        circumradius,
        balls: BallCache::default(),
    };
    if relation_residual > 1e-9 {
        return Err(LabError::Construction(format!("relation residual {relation_residual:e}")));
    }
    for g in &grp.generators {
        if g.trace().abs() <= 2.0 {
            return Err(LabError::Construction("non-hyperbolic generator".into()));
        }
    }
    let pairing = grp.side_pairing_residual();
    if pairing > 1e-9 {
        return Err(LabError::Construction(format!("side pairing residual {pairing:e}")));
    }
    Ok(grp)
}

impl SurfaceGroup {
    /// Vertices (start, end) of side k, counterclockwise.
    pub fn side(&self, k: usize) -> (Complex64, Complex64) {
        (self.octagon_vertices[(k + 7) % 8], self.octagon_vertices[k])
    }

    /// Worst vertex mismatch of s_k(side k+4) against side k (orientation reversed).
    pub fn side_pairing_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..8 {
            let (p, q) = self.side((k + 4) % 8);
            let (u, v) = self.side(k);
            let g = &self.generators[k];
            worst = worst.max((g.act_disk(p) - v).norm()).max((g.act_disk(q) - u).norm());
        }
        worst
    }

    /// Euclidean radius of the inscribed circle.
    pub fn inner_euclid_radius(&self) -> f64 {
        disk::euclid_radius(self.inradius)
    }

    pub fn vertex_euclid_radius(&self) -> f64 {
        disk::euclid_radius(self.circumradius)
    }

    /// Signed violation of the Dirichlet condition for side k: positive when z is
    /// strictly closer to the neighbour center s_k·0 than to 0.
    #[inline]
    fn side_violation(&self, z: Complex64, k: usize) -> f64 {
        let w = self.neighbour_centers[k];
        z.norm_sqr() * (1.0 - w.norm_sqr()) - (z - w).norm_sqr()
    }

    /// Closed-octagon membership with slack `tol` on the Dirichlet inequalities.
    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        if z.norm_sqr() >= 1.0 {
            return false;
        }
        if z.norm() <= self.inner_euclid_radius() {
            return true;
        }
        (0..8).all(|k| self.side_violation(z, k) <= tol)
    }

    /// Greedy reduction into the octagon. Returns (z′, γ) with γ·z = z′.
    pub fn reduce(&self, z: Complex64) -> Result<(Complex64, GroupElement)> {
        let mut z = z;
        let mut gamma = GroupElement::IDENTITY;
        let r_in2 = self.inner_euclid_radius().powi(2);
        for step in 0..=MAX_REDUCTION_STEPS {
            if z.norm_sqr() <= r_in2 {
                return Ok((z, gamma));
            }
            let mut best = None;
            let mut best_r = z.norm_sqr();
            for k in 0..8 {
                if self.side_violation(z, k) > 0.0 {
                    let w = self.generators[(k + 4) % 8].act_disk(z);
                    if w.norm_sqr() < best_r {
                        best_r = w.norm_sqr();
                        best = Some((k + 4) % 8);
                    }
                }
            }
            match best {
                None => return Ok((z, gamma)),
                Some(j) => {
                    let g = self.generators[j];
                    z = g.act_disk(z);
                    gamma = g * gamma;
                    if step % 64 == 63 {
                        gamma = gamma.normalized();
                    }
                }
            }
        }
        Err(LabError::IterationCap { steps: MAX_REDUCTION_STEPS, modulus: z.norm() })
    }

    /// Hyperbolic area of the octagon, by polar quadrature over the 16
    /// half-sectors.
    pub fn octagon_area(&self) -> f64 {
        let q = crate::quadrature::OctagonQuadrature::new(self, 24, 24);
        q.weights.iter().sum()
    }

    /// Boundary distance from 0 along direction φ.
    pub fn boundary_radius(&self, phi: f64) -> f64 {
        let k = (phi / FRAC_PI_4).round();
        let c = (phi - k * FRAC_PI_4).cos();
        (self.inradius.tanh() / c).atanh()
    }

    /// All γ ∈ Γ with d(0, γ·0) ≤ radius, found by breadth-first search over
    /// the tiling. Intermediate tiles are allowed one circumradius of slack.
    pub fn ball(&self, radius: f64, cap: usize) -> Result<Vec<BallElement>> {
        let explore = radius + self.circumradius + 1e-6;
        let key = |g: &GroupElement| -> [i64; 4] {
            let g = g.sign_normalized();
            g.entries().map(|x| (x * 1e6).round() as i64)
        };
        let mut seen: HashMap<[i64; 4], ()> = HashMap::new();
        let mut frontier = vec![BallElement { element: GroupElement::IDENTITY, word: vec![], distance: 0.0 }];
        seen.insert(key(&GroupElement::IDENTITY), ());
        let mut out = Vec::new();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for e in frontier {
                for (k, s) in self.generators.iter().enumerate() {
                    if e.word.last().map(|&l| inverse_letter(l) as usize == k).unwrap_or(false) {
                        continue;
                    }
                    let g = e.element * *s;
                    let dist = disk::dist_to_origin(g.act_disk(Complex64::new(0.0, 0.0)));
                    if dist > explore {
                        continue;
                    }
                    let kk = key(&g);
                    if seen.contains_key(&kk) {
                        continue;
                    }
                    seen.insert(kk, ());
                    if seen.len() > cap {
                        return Err(LabError::BudgetExceeded(format!(
                            "more than {cap} group elements within radius {radius}"
                        )));
                    }
                    let mut word = e.word.clone();
                    word.push(k as u8);
                    next.push(BallElement { element: g, word, distance: dist });
                }
                if e.distance <= radius {
                    out.push(e);
                }
            }
            frontier = next;
        }
        out.sort_by(|x, y| {
            x.distance
                .partial_cmp(&y.distance)
                .unwrap()
                .then_with(|| x.word.len().cmp(&y.word.len()))
                .then_with(|| x.word.cmp(&y.word))
        });
        Ok(out)
    }

    /// Cached elements with d(0, γ·0) ≤ 9.5, sorted by distance.
    fn cached_ball(&self) -> &Vec<(f64, GroupElement)> {
        self.balls.0.get_or_init(|| {
            self.ball(CACHE_RADIUS, 5_000_000)
                .expect("neighbourhood enumeration")
                .into_iter()
                .map(|e| (e.distance, e.element))
                .collect()
        })
    }

    /// Elements δ such that δ·F can meet the ball B(c, r): those with
    /// d(δ·0, c) ≤ r + circumradius.
    pub fn images_meeting_ball(&self, c: Complex64, r: f64) -> Vec<GroupElement> {
        let reach = r + self.circumradius + 1e-6;
        let need = disk::dist_to_origin(c) + reach;
        if need > CACHE_RADIUS {
            return self
                .ball(need, 50_000_000)
                .expect("neighbourhood enumeration")
                .into_iter()
                .filter(|e| disk::dist(e.element.act_disk(0.0.into()), c) <= reach)
                .map(|e| e.element)
                .collect();
        }
        self.cached_ball()
            .iter()
            .take_while(|(d, _)| *d <= need)
            .filter(|(_, g)| disk::dist(g.act_disk(0.0.into()), c) <= reach)
            .map(|(_, g)| *g)
            .collect()
    }

    /// Elements γ whose tiles touch the octagon (d(0, γ·0) ≤ 2·circumradius).
    pub fn adjacent_tiles(&self) -> Vec<GroupElement> {
        let r = 2.0 * self.circumradius + 1e-6;
        self.cached_ball().iter().take_while(|(d, _)| *d <= r).map(|(_, g)| *g).collect()
    }

    /// Total Liouville mass normalization: area(M) = 4π.
    pub fn area(&self) -> f64 {
        4.0 * PI
    }
}
