use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::group::{Flow, GroupElement};
use crate::surface::SurfaceGroup;

/// A point of SM(Bolza): reduced group element with cached disk frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub g: GroupElement,
    pub z: Complex64,
    pub theta: f64,
    /// e^{iθ}, kept alongside θ so evaluators avoid trigonometry.
    pub dir: Complex64,
}

impl PhasePoint {
    /// Reduce g into the fundamental octagon.
    pub fn new(g: GroupElement, grp: &SurfaceGroup) -> Result<Self> {
        let (z0, _) = g.frame();
        let (_, gamma) = grp.reduce(z0)?;
        Ok(Self::unreduced((gamma * g).normalized()))
    }

    /// Wrap g without reduction (used on the universal cover).
    pub fn unreduced(g: GroupElement) -> Self {
        let (z, dir) = g.frame();
        let mut theta = dir.arg();
        if theta < 0.0 {
            theta += TAU;
        }
        if theta >= TAU {
            theta -= TAU;
        }
        PhasePoint { g, z, theta, dir }
    }

    pub fn from_disk(z: Complex64, theta: f64, grp: &SurfaceGroup) -> Result<Self> {
        Self::new(GroupElement::from_disk_frame(z, theta), grp)
    }

    /// Flow then reduce.
    pub fn flow(&self, t: f64, which: Flow, grp: &SurfaceGroup) -> Result<Self> {
        Self::new(self.g.flowed(which, t), grp)
    }

    /// Rotation in the fiber; the base point is unchanged so no reduction is needed.
    #[inline]
    pub fn rotated(&self, s: f64) -> Self {
        Self::unreduced(self.g.flowed(Flow::Rotation, s))
    }

    /// Consistency residual between g and the cached (z, θ).
    pub fn consistency_residual(&self) -> f64 {
        let (z, dir) = self.g.frame();
        (z - self.z).norm().max((dir - Complex64::from_polar(1.0, self.theta)).norm())
    }

    /// Antipodal point (x, −v).
    pub fn antipode(&self) -> Self {
        self.rotated(std::f64::consts::PI)
    }
}

/// Distance between two phase points modulo Γ: the smallest frame distance
/// over the tiles adjacent to the octagon.
pub fn phase_distance_mod_gamma(p: &PhasePoint, q: &PhasePoint, grp: &SurfaceGroup) -> f64 {
    let mut best = f64::INFINITY;
    for gamma in grp.adjacent_tiles() {
        let (z, dir) = (gamma * q.g).frame();
        let d = (z - p.z).norm() + (dir - p.dir).norm();
        if d < best {
            best = d;
        }
    }
    best
}
