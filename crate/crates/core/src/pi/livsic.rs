//! Coboundary tests: orbit integrals over the census, Π pairings against a
//! probe set and a least-squares solve of Xu = f.

use std::collections::HashSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{Direction, EngineConfig, Moments, PairingEstimate};
use crate::census::{orbit_integral, GeodesicRecord};
use crate::error::{LabError, Result};
use crate::fiber::FiberField;
use crate::fields::BUMP_POWER;
use crate::group::{Flow, GroupElement};
use crate::sampling::sample_liouville;
use crate::surface::SurfaceGroup;

/// Orbit integral tolerance relative to ℓ_γ·sup|f|.
pub const ORBIT_TOL: f64 = 1e-6;
/// Accepted ‖Xu − f‖/‖f‖ for the least-squares fit.
pub const FIT_TOL: f64 = 0.05;

#[inline]
fn sinh_dist_to_real_line(w: Complex64) -> f64 {
    2.0 * w.im.abs() / (1.0 - w.norm_sqr())
}

/// Function on M equal to 1 on the closed geodesic of `rec`, supported in the
/// tube of hyperbolic radius `radius` around it: Σ over lifts of
/// (1 − (sinh d / sinh r)²)₊^p. The tube must embed for the value on the
/// geodesic to be exactly 1.
pub fn tube_function(grp: &Arc<SurfaceGroup>, rec: &GeodesicRecord, radius: f64) -> Result<FiberField> {
    let reach = grp.circumradius + radius + 1e-6;
    let (z0, _) = rec.axis.frame();
    let d_axis = crate::disk::dist_to_origin(z0);
    let ball = grp.ball(reach + 0.5 * rec.length + d_axis, 5_000_000)?;
    let mut seen = HashSet::new();
    let mut lifts: Vec<GroupElement> = Vec::new();
    for e in ball {
        let f = e.element * rec.axis;
        let inv = f.inverse();
        let s = sinh_dist_to_real_line(inv.act_disk(Complex64::new(0.0, 0.0)));
        if s.asinh() > reach {
            continue;
        }
        let mut ends = [f.act_disk(Complex64::new(1.0, 0.0)), f.act_disk(Complex64::new(-1.0, 0.0))];
        ends.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        let key: Vec<i64> = ends.iter().flat_map(|z| [(z.re * 1e7).round() as i64, (z.im * 1e7).round() as i64]).collect();
        if seen.insert(key) {
            lifts.push(inv);
        }
    }
    let sr = radius.sinh();
    Ok(FiberField::new(grp.clone(), 0, &format!("tube({})", rec.word_string()), move |p| {
        let mut acc = 0.0;
        for inv in &lifts {
            let u = (sinh_dist_to_real_line(inv.act_disk(p.z)) / sr).powi(2);
            if u < 1.0 {
                acc += (1.0 - u).powi(BUMP_POWER);
            }
        }
        Complex64::new(acc, 0.0)
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitResidual {
    pub word: String,
    pub length: f64,
    pub integral: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LivsicReport {
    pub orbit_residuals: Vec<OrbitResidual>,
    /// max_γ |∫_γ f| / ℓ_γ.
    pub max_orbit_average: f64,
    /// sup |f| over the fit samples.
    pub f_sup: f64,
    pub pi_residuals: Vec<PairingEstimate>,
    pub pi_pass: bool,
    pub fit_coefficients: Vec<f64>,
    /// ‖Xu_fit − f‖ / ‖f‖ on the fit samples.
    pub u_fit_residual: f64,
    /// Relative error of u_fit against a known u, modulo constants.
    pub u_recovery_error: Option<f64>,
    pub orbit_pass: bool,
    pub fit_pass: bool,
    pub coboundary_like: bool,
}

/// Report-only coboundary test. `fit_basis` spans the candidate potentials
/// u; `truth` (if known) is compared with the fitted potential.
pub fn livsic_check(
    f: &FiberField,
    census: &[GeodesicRecord],
    probes: &[FiberField],
    fit_basis: &[FiberField],
    truth: Option<&FiberField>,
    fit_samples: usize,
    cfg: &EngineConfig,
) -> Result<LivsicReport> {
    if fit_basis.is_empty() || fit_samples < fit_basis.len() {
        return Err(LabError::Config("fit needs a nonempty basis and at least as many samples".into()));
    }
    let grp = f.surface().clone();
    let orbit_residuals: Vec<OrbitResidual> = census
        .iter()
        .map(|r| OrbitResidual {
            word: r.word_string(),
            length: r.length,
            integral: orbit_integral(&grp, &r.axis, r.length, 0.25, 16, |p| f.eval(p).re),
        })
        .collect();
    let max_orbit_average = orbit_residuals.iter().map(|o| o.integral.abs() / o.length).fold(0.0, f64::max);

    let pi_residuals: Vec<PairingEstimate> = if probes.is_empty() {
        Vec::new()
    } else {
        let mom = Moments::compute(std::slice::from_ref(f), probes, &[Direction::Forward, Direction::Backward], cfg)?;
        (0..probes.len()).map(|j| mom.pi_ladder(0, j).map(|e| e.extrapolated)).collect::<Result<_>>()?
    };
    let pi_pass = pi_residuals.iter().all(|e| e.within(3.0));

    let pts = sample_liouville(fit_samples, cfg.seed ^ 0x11f5, &grp);
    let xb: Vec<FiberField> = fit_basis.iter().map(|b| b.derive(Flow::Geodesic)).collect();
    let a = DMatrix::from_fn(pts.len(), xb.len(), |n, i| xb[i].eval(&pts[n]).re);
    let rhs = DVector::from_iterator(pts.len(), pts.iter().map(|p| f.eval(p).re));
    let f_sup = rhs.amax();
    let fnorm = rhs.norm();
    let (fit_coefficients, u_fit_residual) = if fnorm == 0.0 {
        (vec![0.0; xb.len()], 0.0)
    } else {
        let svd = a.clone().svd(true, true);
        let tol = 1e-12 * svd.singular_values.max();
        let c = svd.solve(&rhs, tol).map_err(|e| LabError::Config(e.to_string()))?;
        let res = (&a * &c - &rhs).norm() / fnorm;
        (c.iter().copied().collect(), res)
    };
    let u_recovery_error = truth.map(|u| {
        let diff: Vec<f64> = pts
            .iter()
            .map(|p| fit_basis.iter().zip(&fit_coefficients).map(|(b, c)| c * b.eval(p).re).sum::<f64>() - u.eval(p).re)
            .collect();
        let uvals: Vec<f64> = pts.iter().map(|p| u.eval(p).re).collect();
        let centered = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>().sqrt()
        };
        let den = centered(&uvals);
        if den > 0.0 {
            centered(&diff) / den
        } else {
            centered(&diff)
        }
    });
    let orbit_pass = max_orbit_average <= ORBIT_TOL * f_sup.max(f64::MIN_POSITIVE);
    let fit_pass = u_fit_residual < FIT_TOL;
    Ok(LivsicReport {
        orbit_residuals,
        max_orbit_average,
        f_sup,
        pi_residuals,
        pi_pass,
        fit_coefficients,
        u_fit_residual,
        u_recovery_error,
        orbit_pass,
        fit_pass,
        coboundary_like: orbit_pass && pi_pass && fit_pass,
    })
}
