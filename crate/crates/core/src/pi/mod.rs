//! Monte-Carlo estimators for the resolvents R±(λ), the operator Π through
//! damped correlations, its normal operators and the coboundary tests.
//!
//! Pairings use the normalized Liouville measure and ⟨f, ψ⟩ = ∫ f ψ̄ dμ.

pub mod engine;
pub mod livsic;
pub mod normal;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fiber::{FiberField, Sign};
use crate::group::Flow;
use crate::phase::PhasePoint;
use crate::sampling::{batch_rng, draw_liouville};
use crate::stats::{batch_mean_stderr, linear_fit, ComplexSum};

pub use engine::{Direction, EngineConfig, Moments};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairingEstimate {
    pub value: Complex64,
    pub stderr: f64,
    /// Damping rate; 0 for extrapolated values.
    pub lambda: f64,
    /// Time horizon.
    pub t: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl PairingEstimate {
    fn from_batches(batches: &[Complex64], extra: f64, lambda: f64, t: f64, n_samples: usize, seed: u64) -> Self {
        let (value, se) = batch_mean_stderr(batches);
        PairingEstimate { value, stderr: se.hypot(extra), lambda, t, n_samples, seed }
    }

    /// |value| ≤ k·stderr.
    pub fn within(&self, k: f64) -> bool {
        self.value.norm() <= k * self.stderr
    }

    pub fn z_score(&self) -> f64 {
        self.value.norm() / self.stderr
    }
}

/// Π pairing along the λ-ladder with its extrapolation to λ = 0.
#[derive(Debug, Clone, Serialize)]
pub struct LadderEstimate {
    pub rungs: Vec<PairingEstimate>,
    pub extrapolated: PairingEstimate,
    /// |order-1 Richardson − least-squares line| at λ = 0; folded into the
    /// extrapolated stderr.
    pub spread: f64,
    /// Monte-Carlo mean subtracted from the field.
    pub subtracted_mean: Complex64,
    /// Per-batch extrapolated values, kept for linear combinations.
    #[serde(skip)]
    pub batches: Vec<Complex64>,
}

/// Order-1 Richardson through the two smallest rates and the least-squares
/// line through all rungs, both evaluated at λ = 0.
fn extrapolate(lams: &[f64], vals: &[Complex64]) -> (Complex64, Complex64) {
    let n = lams.len();
    if n == 1 {
        return (vals[0], vals[0]);
    }
    let (l1, l2) = (lams[n - 2], lams[n - 1]);
    let rich = (vals[n - 1] * l1 - vals[n - 2] * l2) / (l1 - l2);
    let re: Vec<f64> = vals.iter().map(|v| v.re).collect();
    let im: Vec<f64> = vals.iter().map(|v| v.im).collect();
    let (_, a) = linear_fit(lams, &re);
    let (_, b) = linear_fit(lams, &im);
    (rich, Complex64::new(a, b))
}

/// ExtrapolationUnstable when consecutive rung differences change sign with
/// both differences beyond 3σ.
fn check_monotone(per_batch: &[Vec<Complex64>], label: &str) -> Result<()> {
    let nl = per_batch.first().map(|b| b.len()).unwrap_or(0);
    if nl < 3 {
        return Ok(());
    }
    let diffs: Vec<(Complex64, f64)> = (0..nl - 1)
        .map(|l| {
            let d: Vec<Complex64> = per_batch.iter().map(|b| b[l] - b[l + 1]).collect();
            batch_mean_stderr(&d)
        })
        .collect();
    for w in diffs.windows(2) {
        let ((d1, s1), (d2, s2)) = (w[0], w[1]);
        for part in [|z: Complex64| z.re, |z: Complex64| z.im] {
            let (a, b) = (part(d1), part(d2));
            if a.abs() > 3.0 * s1 && b.abs() > 3.0 * s2 && a.signum() != b.signum() {
                return Err(LabError::ExtrapolationUnstable(format!("{label}: rung differences {d1} and {d2} change sign")));
            }
        }
    }
    Ok(())
}

impl Moments {
    /// ⟨R±(λ_l) f_k, ψ_j⟩ with R₊f = ∫₀^∞ e^{−λt} f∘φ_t dt and
    /// R₋f = −∫₀^∞ e^{−λt} f∘φ_{−t} dt. The tail beyond T uses the batch means
    /// (mixing); the stderr includes ‖f̃‖‖ψ̃‖·e^{−(λ+1/2)T}/(λ+1/2) for the
    /// truncated correlation, assuming |C_t| ≤ ‖f̃‖‖ψ̃‖e^{−t/2}.
    pub fn resolvent(&self, k: usize, j: usize, l: usize, sign: Sign) -> Result<PairingEstimate> {
        let dir = match sign {
            Sign::Plus => Direction::Forward,
            Sign::Minus => Direction::Backward,
        };
        let d = self.dir_index(dir)?;
        let lam = self.cfg.ladder[l];
        let t = self.cfg.horizon(lam);
        let s = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        let tail = (-lam * t).exp() / lam;
        let vals: Vec<Complex64> = (0..self.batches.len())
            .map(|b| {
                let (raw, _) = self.batch_pairing(b, d, k, j, l);
                let (fm, pm) = self.batch_means(b, k, j);
                (raw + fm * pm.conj() * tail) * s
            })
            .collect();
        let (fs, ps) = self.centered_norms(k, j);
        let trunc = fs * ps * (-(lam + 0.5) * t).exp() / (lam + 0.5);
        Ok(PairingEstimate::from_batches(&vals, trunc, lam, t, self.n_samples(), self.cfg.seed))
    }

    /// Per-batch two-sided damped covariances at every rung.
    fn pi_rungs(&self, k: usize, j: usize) -> Result<Vec<Vec<Complex64>>> {
        let f = self.dir_index(Direction::Forward)?;
        let bk = self.dir_index(Direction::Backward)?;
        let nl = self.cfg.ladder.len();
        Ok((0..self.batches.len())
            .map(|b| (0..nl).map(|l| self.batch_pairing(b, f, k, j, l).1 + self.batch_pairing(b, bk, k, j, l).1).collect())
            .collect())
    }

    /// ⟨Π f_k, ψ_j⟩ = lim_{λ→0} ∫ e^{−λ|t|} ⟨f̃∘φ_t, ψ⟩ dt with f̃ the field
    /// minus its Monte-Carlo mean.
    pub fn pi_ladder(&self, k: usize, j: usize) -> Result<LadderEstimate> {
        let per_batch = self.pi_rungs(k, j)?;
        let lams = &self.cfg.ladder;
        let n = self.n_samples();
        let rungs: Vec<PairingEstimate> = (0..lams.len())
            .map(|l| {
                let v: Vec<Complex64> = per_batch.iter().map(|b| b[l]).collect();
                PairingEstimate::from_batches(&v, 0.0, lams[l], self.cfg.horizon(lams[l]), n, self.cfg.seed)
            })
            .collect();
        let ex: Vec<(Complex64, Complex64)> = per_batch.iter().map(|b| extrapolate(lams, b)).collect();
        let rich: Vec<Complex64> = ex.iter().map(|e| e.0).collect();
        let mut lsq = ComplexSum::default();
        for e in &ex {
            lsq.add(e.1);
        }
        let (rich_mean, _) = batch_mean_stderr(&rich);
        let spread = (rich_mean - lsq.sum() / ex.len() as f64).norm();
        let label = format!("<Pi {}, {}>", self.field_labels[k], self.test_labels[j]);
        check_monotone(&per_batch, &label)?;
        Ok(LadderEstimate {
            rungs,
            extrapolated: PairingEstimate::from_batches(&rich, spread, 0.0, self.cfg.t_max, n, self.cfg.seed),
            spread,
            subtracted_mean: self.field_mean(k),
            batches: rich,
        })
    }
}

/// Σ_i c_i · (ladder estimate i), with spreads combined as Σ|c_i|·spread_i.
pub fn combine_ladders(terms: &[(f64, &LadderEstimate)]) -> PairingEstimate {
    let nb = terms[0].1.batches.len();
    let batches: Vec<Complex64> = (0..nb).map(|b| terms.iter().map(|(c, e)| e.batches[b] * *c).sum()).collect();
    let spread: f64 = terms.iter().map(|(c, e)| c.abs() * e.spread).sum();
    let e0 = &terms[0].1.extrapolated;
    PairingEstimate::from_batches(&batches, spread, 0.0, e0.t, e0.n_samples, e0.seed)
}

/// C_t(u, v) = ∫ u∘φ_t v̄ dμ − ∫u dμ ∫v̄ dμ at each t. Values are shifted by
/// the first sample of each batch before forming the covariance, so a
/// constant u gives exactly 0.
pub fn correlation(u: &FiberField, v: &FiberField, times: &[f64], cfg: &EngineConfig) -> Result<Vec<PairingEstimate>> {
    cfg.validate()?;
    let grp = u.surface().clone();
    let nb = cfg.n_batches;
    let per: Vec<Vec<Complex64>> = (0..nb)
        .into_par_iter()
        .map(|b| -> Result<Vec<Complex64>> {
            let mut rng = batch_rng(cfg.seed ^ 0xc0ff, b as u64);
            let n = cfg.n_samples / nb + usize::from(b < cfg.n_samples % nb);
            let mut sa = vec![ComplexSum::default(); times.len()];
            let mut sab = vec![ComplexSum::default(); times.len()];
            let mut sb = ComplexSum::default();
            let mut refs: Option<(Vec<Complex64>, Complex64)> = None;
            for _ in 0..n {
                let y = draw_liouville(&mut rng, &grp);
                let vy = v.eval(&y);
                let us: Vec<Complex64> = times
                    .iter()
                    .map(|&t| Ok(u.eval(&PhasePoint::new(y.g.flowed(Flow::Geodesic, t), &grp)?)))
                    .collect::<Result<_>>()?;
                let (ur, vr) = refs.get_or_insert_with(|| (us.clone(), vy)).clone();
                let bv = (vy - vr).conj();
                sb.add(bv);
                for (i, uv) in us.iter().enumerate() {
                    let a = uv - ur[i];
                    sa[i].add(a);
                    sab[i].add(a * bv);
                }
            }
            let nf = n as f64;
            Ok((0..times.len()).map(|i| sab[i].sum() / nf - sa[i].sum() / nf * (sb.sum() / nf)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let v: Vec<Complex64> = per.iter().map(|b| b[i]).collect();
            PairingEstimate::from_batches(&v, 0.0, 0.0, t, cfg.n_samples, cfg.seed)
        })
        .collect())
}

/// Least-squares fit log|C_t| = −rate·t + c over the given estimates.
pub fn decay_fit(est: &[PairingEstimate]) -> (f64, f64) {
    let ts: Vec<f64> = est.iter().map(|e| e.t).collect();
    let ys: Vec<f64> = est.iter().map(|e| e.value.norm().max(1e-300).ln()).collect();
    let (slope, c) = linear_fit(&ts, &ys);
    (-slope, c)
}

/// ⟨R±(λ) f, ψ⟩ from a single-rate run.
pub fn resolvent_pairing(f: &FiberField, psi: &FiberField, lambda: f64, sign: Sign, cfg: &EngineConfig) -> Result<PairingEstimate> {
    let dir = match sign {
        Sign::Plus => Direction::Forward,
        Sign::Minus => Direction::Backward,
    };
    let c = cfg.with_ladder(vec![lambda]);
    let m = Moments::compute(std::slice::from_ref(f), std::slice::from_ref(psi), &[dir], &c)?;
    let e = m.resolvent(0, 0, 0, sign)?;
    if e.stderr > cfg.variance_budget * e.value.norm() {
        return Err(LabError::VarianceBudget { stderr: e.stderr, value: e.value.norm() });
    }
    Ok(e)
}

pub fn pi_pairing(f: &FiberField, psi: &FiberField, cfg: &EngineConfig) -> Result<LadderEstimate> {
    let m = Moments::compute(std::slice::from_ref(f), std::slice::from_ref(psi), &[Direction::Forward, Direction::Backward], cfg)?;
    m.pi_ladder(0, 0)
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceCheck {
    pub estimate: LadderEstimate,
    pub pass: bool,
}

/// Weak form of XΠf = 0: ⟨Πf, Xψ⟩ within 3σ of zero.
pub fn x_invariance_check(f: &FiberField, psi: &FiberField, cfg: &EngineConfig) -> Result<InvarianceCheck> {
    let xpsi = psi.derive(Flow::Geodesic);
    let estimate = pi_pairing(f, &xpsi, cfg)?;
    let pass = estimate.extrapolated.within(3.0);
    Ok(InvarianceCheck { estimate, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    /// λ·⟨R₊(λ)u, v⟩ at each rung.
    pub rungs: Vec<PairingEstimate>,
    pub extrapolated: PairingEstimate,
    pub target: Complex64,
    /// |rung − target| never grows by more than 3(σ_l + σ_{l+1}) down the ladder.
    pub monotone: bool,
    pub pass: bool,
}

/// Residue check λ⟨R₊(λ)u_i, v_i⟩ → ⟨u_i,1⟩⟨1,v_i⟩ for several pairs from
/// one shared run. `targets` are the products of the exact means.
pub fn mixing_residue(us: &[FiberField], vs: &[FiberField], targets: &[Complex64], cfg: &EngineConfig) -> Result<Vec<MixingReport>> {
    let m = Moments::compute(us, vs, &[Direction::Forward], cfg)?;
    let lams = &cfg.ladder;
    (0..us.len())
        .map(|i| {
            let rungs: Vec<PairingEstimate> = (0..lams.len())
                .map(|l| {
                    let mut e = m.resolvent(i, i, l, Sign::Plus)?;
                    e.value *= lams[l];
                    e.stderr *= lams[l];
                    Ok(e)
                })
                .collect::<Result<_>>()?;
            // per-batch extrapolation of λ·R
            let d = m.dir_index(Direction::Forward)?;
            let per: Vec<Vec<Complex64>> = (0..m.batches.len())
                .map(|b| {
                    (0..lams.len())
                        .map(|l| {
                            let t = cfg.horizon(lams[l]);
                            let (raw, _) = m.batch_pairing(b, d, i, i, l);
                            let (fm, pm) = m.batch_means(b, i, i);
                            (raw + fm * pm.conj() * ((-lams[l] * t).exp() / lams[l])) * lams[l]
                        })
                        .collect()
                })
                .collect();
            let ex: Vec<(Complex64, Complex64)> = per.iter().map(|b| extrapolate(lams, b)).collect();
            let rich: Vec<Complex64> = ex.iter().map(|e| e.0).collect();
            let lsq: Complex64 = ex.iter().map(|e| e.1).sum::<Complex64>() / ex.len() as f64;
            let (rm, _) = batch_mean_stderr(&rich);
            let spread = (rm - lsq).norm();
            let extrapolated = PairingEstimate::from_batches(&rich, spread, 0.0, cfg.t_max, m.n_samples(), cfg.seed);
            let target = targets[i];
            let monotone = rungs
                .windows(2)
                .all(|w| (w[1].value - target).norm() <= (w[0].value - target).norm() + 3.0 * (w[0].stderr + w[1].stderr));
            let pass = (extrapolated.value - target).norm() <= 3.0 * extrapolated.stderr;
            Ok(MixingReport { rungs, extrapolated, target, monotone, pass })
        })
        .collect()
}
