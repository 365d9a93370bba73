//! Normal operators Π_m = π_m∗ Π π_m^* as Galerkin matrices, the symbol-order
//! probe for Π₀ and the prescribed push-forward solver.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{combine_ladders, Direction, EngineConfig, LadderEstimate, Moments, PairingEstimate};
use crate::error::{LabError, Result};
use crate::fiber::FiberField;
use crate::fields::{Bump, OscillatoryBump};
use crate::group::Flow;
use crate::quadrature::OctagonQuadrature;
use crate::stats::linear_fit;
use crate::surface::SurfaceGroup;
use crate::tensor::SymmetricTensor;

#[derive(Debug, Clone, Serialize)]
pub struct NormalOperatorMatrix {
    pub basis: Vec<String>,
    pub m: usize,
    /// G[i][j] = ⟨Π π^*ψ_j, π^*ψ_i⟩.
    pub entries: Vec<Vec<PairingEstimate>>,
    /// Real part of (G + Gᵀ)/2, row-major.
    pub symmetrized: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Frobenius norm of the stderr matrix.
    pub noise_floor: f64,
    /// Pairs (i, j) with |G_ij − G_ji| > 3(σ_ij + σ_ji).
    pub symmetry_violations: Vec<(usize, usize)>,
    pub positive: bool,
    #[serde(skip)]
    pub ladders: Vec<Vec<LadderEstimate>>,
}

impl NormalOperatorMatrix {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn symmetrized_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.symmetrized[i][j])
    }

    pub fn symmetric(&self) -> bool {
        self.symmetry_violations.is_empty()
    }
}

/// Galerkin matrix of Π_m on the pulled-back basis; `m` is only recorded.
pub fn normal_matrix(basis: &[FiberField], m: usize, cfg: &EngineConfig) -> Result<NormalOperatorMatrix> {
    if basis.is_empty() {
        return Err(LabError::Config("empty basis".into()));
    }
    let mom = Moments::compute(basis, basis, &[Direction::Forward, Direction::Backward], cfg)?;
    from_moments(&mom, basis.len(), m)
}

fn from_moments(mom: &Moments, n: usize, m: usize) -> Result<NormalOperatorMatrix> {
    let ladders: Vec<Vec<LadderEstimate>> = (0..n).map(|i| (0..n).map(|j| mom.pi_ladder(j, i)).collect::<Result<_>>()).collect::<Result<_>>()?;
    let entries: Vec<Vec<PairingEstimate>> = ladders.iter().map(|r| r.iter().map(|e| e.extrapolated).collect()).collect();
    let symmetrized: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| 0.5 * (entries[i][j].value.re + entries[j][i].value.re)).collect()).collect();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (entries[i][j], entries[j][i]);
            if (a.value - b.value).norm() > 3.0 * (a.stderr + b.stderr) {
                violations.push((i, j));
            }
        }
    }
    let noise_floor = entries.iter().flatten().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt();
    let s = DMatrix::from_fn(n, n, |i, j| symmetrized[i][j]);
    let mut eigenvalues: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.total_cmp(b));
    let positive = eigenvalues[0] >= -3.0 * noise_floor;
    Ok(NormalOperatorMatrix {
        basis: mom.field_labels[..n].to_vec(),
        m,
        entries,
        symmetrized,
        eigenvalues,
        noise_floor,
        symmetry_violations: violations,
        positive,
        ladders,
    })
}

/// π₀^* of a degree-0 tensor.
pub fn function_field(f: &SymmetricTensor) -> Result<FiberField> {
    if f.m != 0 {
        return Err(LabError::Degree(format!("expected a function, got degree {}", f.m)));
    }
    Ok(f.pi_star_up())
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolReport {
    pub center: Complex64,
    pub radius: f64,
    pub xi: Vec<f64>,
    /// ⟨Π₀u_ξ, u_ξ⟩ per frequency.
    pub values: Vec<PairingEstimate>,
    pub slope: f64,
    pub intercept: f64,
    /// Slope uncertainty from the per-point stderr (linear propagation).
    pub slope_stderr: f64,
    pub pass: bool,
}

/// Expected symbol order of Π₀ and the accepted deviation of the fitted slope.
pub const SYMBOL_SLOPE: f64 = -1.0;
pub const SYMBOL_TOL: f64 = 0.15;

/// Log-log slope of the quadratic forms ⟨Π₀u_ξ, u_ξ⟩ for oscillatory probes
/// u_ξ = bump·cos(ξx₁) in normal coordinates at `center`.
pub fn symbol_probe(grp: &Arc<SurfaceGroup>, xi: &[f64], center: Complex64, radius: f64, cfg: &EngineConfig) -> Result<SymbolReport> {
    if xi.len() < 2 || xi.iter().any(|x| !(*x > 0.0)) {
        return Err(LabError::Config("need at least two positive frequencies".into()));
    }
    let probes: Vec<FiberField> = xi
        .iter()
        .map(|&x| {
            let o = Arc::new(OscillatoryBump::new(grp, Bump::new(center, radius), x));
            FiberField::new(grp.clone(), 0, &format!("u_{x}"), move |p| Complex64::new(o.eval(p), 0.0))
        })
        .collect();
    let mom = Moments::compute(&probes, &probes, &[Direction::Forward, Direction::Backward], cfg)?;
    let values: Vec<PairingEstimate> = (0..xi.len()).map(|k| mom.pi_ladder(k, k).map(|e| e.extrapolated)).collect::<Result<_>>()?;
    for v in &values {
        if v.value.re <= 3.0 * v.stderr {
            return Err(LabError::VarianceBudget { stderr: v.stderr, value: v.value.re });
        }
    }
    let lx: Vec<f64> = xi.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.value.re.ln()).collect();
    let (slope, intercept) = linear_fit(&lx, &ly);
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope_stderr = lx.iter().zip(&values).map(|(x, v)| ((x - mx) / sxx * v.stderr / v.value.re).powi(2)).sum::<f64>().sqrt();
    let pass = (slope - SYMBOL_SLOPE).abs() <= SYMBOL_TOL;
    Ok(SymbolReport { center, radius, xi: xi.to_vec(), values, slope, intercept, slope_stderr, pass })
}

/// Target of the push-forward problem π₀∗w = f.
#[derive(Debug, Clone)]
pub enum PushforwardTarget {
    /// A function given pointwise; pairings by octagon quadrature.
    Function(SymmetricTensor),
    /// f = Π₀(Σ a_j ψ_j) for the given basis coefficients; its pairings are
    /// estimated on an independent seed.
    Range { coefficients: Vec<f64>, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct PushforwardReport {
    pub coefficients: Vec<f64>,
    pub condition_number: f64,
    pub tikhonov: f64,
    pub target_pairings: Vec<f64>,
    /// ⟨w, π₀^*ψ'⟩ and ⟨f, ψ'⟩ on the held-out functions.
    pub held_out_predicted: Vec<PairingEstimate>,
    pub held_out_target: Vec<f64>,
    /// ‖predicted − target‖ / ‖target‖ over the held-out set.
    pub held_out_relative_error: f64,
    /// ⟨w, Xψ'⟩ on the held-out functions.
    pub invariance: Vec<PairingEstimate>,
    pub invariance_pass: bool,
}

/// Relative Tikhonov parameter (× largest eigenvalue of the symmetrized
/// normal matrix) used by the push-forward solver.
pub const PUSHFORWARD_TIKHONOV: f64 = 1e-6;
pub const PUSHFORWARD_MAX_CONDITION: f64 = 1e10;

/// ⟨f, ψ⟩ for functions on M in the normalized Liouville pairing.
pub fn function_pairing(f: &SymmetricTensor, psi: &SymmetricTensor, quad: &OctagonQuadrature) -> f64 {
    let area = f.surface().area();
    quad.integrate(|z| f.components(z)[0] * psi.components(z)[0]) / area
}

/// Solve the symmetrized Galerkin system G c = [⟨f, ψ_i⟩]; w = Ππ₀^*(Σ c_jψ_j)
/// is validated on held-out functions.
pub fn prescribed_pushforward(
    target: &PushforwardTarget,
    basis: &[SymmetricTensor],
    held_out: &[SymmetricTensor],
    cfg: &EngineConfig,
    quad: &OctagonQuadrature,
) -> Result<PushforwardReport> {
    let nb = basis.len();
    let nh = held_out.len();
    if nb == 0 || nh == 0 {
        return Err(LabError::Config("basis and held-out sets must be nonempty".into()));
    }
    if let PushforwardTarget::Function(f) = target {
        if f.m != 0 {
            return Err(LabError::Degree(format!("push-forward target must be a function, got degree {}", f.m)));
        }
    }
    let fields: Vec<FiberField> = basis.iter().map(function_field).collect::<Result<_>>()?;
    let held: Vec<FiberField> = held_out.iter().map(function_field).collect::<Result<_>>()?;
    let mut tests = fields.clone();
    tests.extend(held.iter().cloned());
    tests.extend(held.iter().map(|h| h.derive(Flow::Geodesic)));
    let dirs = [Direction::Forward, Direction::Backward];
    let mom = Moments::compute(&fields, &tests, &dirs, cfg)?;
    let g = from_moments(&mom, nb, 0)?;
    let (target_pairings, held_out_target) = match target {
        PushforwardTarget::Function(f) => (
            basis.iter().map(|p| function_pairing(f, p, quad)).collect::<Vec<f64>>(),
            held_out.iter().map(|p| function_pairing(f, p, quad)).collect::<Vec<f64>>(),
        ),
        PushforwardTarget::Range { coefficients, seed } => {
            if coefficients.len() != nb {
                return Err(LabError::Config("range coefficients must match the basis".into()));
            }
            let indep = Moments::compute(&fields, &tests[..nb + nh], &dirs, &cfg.with_seed(*seed))?;
            let pair = |i: usize| -> Result<f64> {
                let lad: Vec<LadderEstimate> = (0..nb).map(|j| indep.pi_ladder(j, i)).collect::<Result<_>>()?;
                let terms: Vec<(f64, &LadderEstimate)> = coefficients.iter().copied().zip(lad.iter()).collect();
                Ok(combine_ladders(&terms).value.re)
            };
            ((0..nb).map(pair).collect::<Result<_>>()?, (nb..nb + nh).map(pair).collect::<Result<_>>()?)
        }
    };
    let gs = g.symmetrized_matrix();
    let lmax = g.eigenvalues.last().copied().unwrap_or(0.0);
    let lmin = g.eigenvalues[0];
    let cond = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(lmax > 0.0) || cond > PUSHFORWARD_MAX_CONDITION {
        return Err(LabError::IllConditioned(cond));
    }
    let tik = PUSHFORWARD_TIKHONOV * lmax;
    let mut reg = gs.clone();
    for i in 0..nb {
        reg[(i, i)] += tik;
    }
    let chol = reg.cholesky().ok_or(LabError::IllConditioned(cond))?;
    let c = chol.solve(&DVector::from_column_slice(&target_pairings));
    let coefficients: Vec<f64> = c.iter().copied().collect();

    let combo = |test: usize| -> Result<PairingEstimate> {
        let lad: Vec<LadderEstimate> = (0..nb).map(|j| mom.pi_ladder(j, test)).collect::<Result<_>>()?;
        let terms: Vec<(f64, &LadderEstimate)> = coefficients.iter().copied().zip(lad.iter()).collect();
        Ok(combine_ladders(&terms))
    };
    let held_out_predicted: Vec<PairingEstimate> = (nb..nb + nh).map(combo).collect::<Result<_>>()?;
    let invariance: Vec<PairingEstimate> = (nb + nh..nb + 2 * nh).map(combo).collect::<Result<_>>()?;
    let num: f64 = held_out_predicted.iter().zip(&held_out_target).map(|(p, t)| (p.value.re - t).powi(2)).sum::<f64>().sqrt();
    let den: f64 = held_out_target.iter().map(|t| t * t).sum::<f64>().sqrt();
    let held_out_relative_error = if den > 0.0 { num / den } else { num };
    let invariance_pass = invariance.iter().all(|e| e.within(3.0));
    Ok(PushforwardReport {
        coefficients,
        condition_number: cond,
        tikhonov: tik,
        target_pairings,
        held_out_predicted,
        held_out_target,
        held_out_relative_error,
        invariance,
        invariance_pass,
    })
}

