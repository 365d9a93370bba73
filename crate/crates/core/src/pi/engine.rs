//! Shared-trajectory Monte Carlo: every Liouville sample carries the damped
//! time integrals of all fields along its forward and backward orbit.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fiber::FiberField;
use crate::group::Flow;
use crate::phase::PhasePoint;
use crate::sampling::{batch_rng, draw_liouville};
use crate::stats::{ComplexSum, NeumaierSum};
use crate::surface::SurfaceGroup;

pub const MIN_BATCHES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub n_samples: usize,
    pub n_batches: usize,
    /// Simpson step along trajectories.
    pub dt: f64,
    pub t_max: f64,
    /// Damping rates, strictly decreasing.
    pub ladder: Vec<f64>,
    pub seed: u64,
    /// Largest accepted stderr / |value| for resolvent pairings.
    pub variance_budget: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            n_samples: 100_000,
            n_batches: 64,
            dt: 0.1,
            t_max: 24.0,
            ladder: vec![0.4, 0.2, 0.1, 0.05],
            seed: 0x5eed_1e55,
            variance_budget: 0.25,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_batches < MIN_BATCHES {
            return Err(LabError::Config(format!("need at least {MIN_BATCHES} batches, got {}", self.n_batches)));
        }
        if self.n_samples < self.n_batches {
            return Err(LabError::Config("n_samples must be at least n_batches".into()));
        }
        if !(self.dt > 0.0) || !(self.t_max >= 2.0 * self.dt) {
            return Err(LabError::Config(format!("bad time grid dt = {}, t_max = {}", self.dt, self.t_max)));
        }
        if self.ladder.is_empty() || self.ladder.iter().any(|l| !(*l > 0.0)) {
            return Err(LabError::Config("λ values must be positive".into()));
        }
        if self.ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(LabError::Config(format!("λ-ladder must be strictly decreasing: {:?}", self.ladder)));
        }
        if !(self.variance_budget > 0.0) {
            return Err(LabError::Config("variance budget must be positive".into()));
        }
        Ok(())
    }

    /// T(λ) = min(t_max, 12/λ), rounded to an even number of steps.
    pub fn horizon_steps(&self, lambda: f64) -> usize {
        let t = self.t_max.min(12.0 / lambda);
        let n = (t / self.dt).round() as usize;
        (n + n % 2).max(2)
    }

    pub fn horizon(&self, lambda: f64) -> f64 {
        self.horizon_steps(lambda) as f64 * self.dt
    }

    pub fn with_ladder(&self, ladder: Vec<f64>) -> Self {
        EngineConfig { ladder, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EngineConfig { seed, ..self.clone() }
    }

    pub fn with_samples(&self, n_samples: usize) -> Self {
        EngineConfig { n_samples, ..self.clone() }
    }

    fn batch_size(&self, b: usize) -> usize {
        self.n_samples / self.n_batches + usize::from(b < self.n_samples % self.n_batches)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// Per-batch sums; A_{d,k,l}(y) = ∫₀^{T_l} e^{−λ_l t} f_k(φ_{±t} y) dt.
#[derive(Debug, Clone)]
pub(crate) struct BatchSums {
    pub n: usize,
    /// Σ f_k(y)
    pub f0: Vec<ComplexSum>,
    /// Σ ψ_j(y)
    pub psi: Vec<ComplexSum>,
    /// Σ A, indexed [d][k][l]
    pub a: Vec<ComplexSum>,
    /// Σ A·conj(ψ_j), indexed [d][k][j][l]
    pub apsi: Vec<ComplexSum>,
    /// Σ |f_k(y)|², Σ |ψ_j(y)|²
    pub f2: Vec<NeumaierSum>,
    pub psi2: Vec<NeumaierSum>,
}

/// Batch sums for a set of fields along trajectories and a set of test
/// fields at the sample points.
#[derive(Debug, Clone)]
pub struct Moments {
    pub cfg: EngineConfig,
    pub dirs: Vec<Direction>,
    pub n_fields: usize,
    pub n_tests: usize,
    pub field_labels: Vec<String>,
    pub test_labels: Vec<String>,
    pub(crate) batches: Vec<BatchSums>,
}

fn simpson_weights(cfg: &EngineConfig, steps: usize) -> Vec<Vec<f64>> {
    cfg.ladder
        .iter()
        .map(|&lam| {
            let n = cfg.horizon_steps(lam);
            (0..=steps)
                .map(|i| {
                    if i > n {
                        return 0.0;
                    }
                    let c = if i == 0 || i == n {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    c * cfg.dt / 3.0 * (-lam * i as f64 * cfg.dt).exp()
                })
                .collect()
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_batch(
    grp: &SurfaceGroup,
    fields: &[FiberField],
    tests: &[FiberField],
    dirs: &[Direction],
    cfg: &EngineConfig,
    weights: &[Vec<f64>],
    steps: usize,
    b: usize,
) -> Result<BatchSums> {
    let (nk, nj, nl, nd) = (fields.len(), tests.len(), cfg.ladder.len(), dirs.len());
    let mut s = BatchSums {
        n: 0,
        f0: vec![ComplexSum::default(); nk],
        psi: vec![ComplexSum::default(); nj],
        a: vec![ComplexSum::default(); nd * nk * nl],
        apsi: vec![ComplexSum::default(); nd * nk * nj * nl],
        f2: vec![NeumaierSum::default(); nk],
        psi2: vec![NeumaierSum::default(); nj],
    };
    let mut rng = batch_rng(cfg.seed, b as u64);
    let steppers: Vec<_> = dirs.iter().map(|d| Flow::Geodesic.exp(d.sign() * cfg.dt)).collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); nd * nk * nl];
    let mut psi_y = vec![Complex64::new(0.0, 0.0); nj];
    for _ in 0..cfg.batch_size(b) {
        let y = draw_liouville(&mut rng, grp);
        acc.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for (j, t) in tests.iter().enumerate() {
            psi_y[j] = t.eval(&y);
            s.psi[j].add(psi_y[j]);
            s.psi2[j].add(psi_y[j].norm_sqr());
        }
        for (d, step) in steppers.iter().enumerate() {
            let mut p = y;
            for i in 0..=steps {
                if i > 0 {
                    p = PhasePoint::new(p.g * *step, grp)?;
                }
                for (k, f) in fields.iter().enumerate() {
                    let v = f.eval(&p);
                    if i == 0 && d == 0 {
                        s.f0[k].add(v);
                        s.f2[k].add(v.norm_sqr());
                    }
                    let base = (d * nk + k) * nl;
                    for (l, w) in weights.iter().enumerate() {
                        acc[base + l] += v * w[i];
                    }
                }
            }
        }
        for d in 0..nd {
            for k in 0..nk {
                for l in 0..nl {
                    let av = acc[(d * nk + k) * nl + l];
                    s.a[(d * nk + k) * nl + l].add(av);
                    for j in 0..nj {
                        s.apsi[((d * nk + k) * nj + j) * nl + l].add(av * psi_y[j].conj());
                    }
                }
            }
        }
        s.n += 1;
    }
    Ok(s)
}

impl Moments {
    /// Run the engine. Batches are independent, seeded by index and stored in
    /// index order, so results do not depend on the thread count.
    pub fn compute(fields: &[FiberField], tests: &[FiberField], dirs: &[Direction], cfg: &EngineConfig) -> Result<Self> {
        cfg.validate()?;
        let grp = fields
            .first()
            .or(tests.first())
            .ok_or_else(|| LabError::Config("no fields to estimate".into()))?
            .surface()
            .clone();
        let steps = cfg.ladder.iter().map(|&l| cfg.horizon_steps(l)).max().unwrap_or(2);
        let weights = simpson_weights(cfg, steps);
        let batches = (0..cfg.n_batches)
            .into_par_iter()
            .map(|b| run_batch(&grp, fields, tests, dirs, cfg, &weights, steps, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Moments {
            cfg: cfg.clone(),
            dirs: dirs.to_vec(),
            n_fields: fields.len(),
            n_tests: tests.len(),
            field_labels: fields.iter().map(|f| f.label.clone()).collect(),
            test_labels: tests.iter().map(|f| f.label.clone()).collect(),
            batches,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.batches.iter().map(|b| b.n).sum()
    }

    pub(crate) fn dir_index(&self, d: Direction) -> Result<usize> {
        self.dirs.iter().position(|x| *x == d).ok_or_else(|| LabError::Config(format!("direction {d:?} was not sampled")))
    }

    /// Per-batch ⟨∫₀^T e^{−λt} f_k∘φ_{±t} dt, ψ_j⟩ (raw) and its covariance
    /// form, which subtracts the batch means of f_k and ψ_j.
    pub(crate) fn batch_pairing(&self, b: usize, d: usize, k: usize, j: usize, l: usize) -> (Complex64, Complex64) {
        let s = &self.batches[b];
        let (nk, nj, nl) = (self.n_fields, self.n_tests, self.cfg.ladder.len());
        let n = s.n as f64;
        let apsi = s.apsi[((d * nk + k) * nj + j) * nl + l].sum() / n;
        let a = s.a[(d * nk + k) * nl + l].sum() / n;
        let psi = s.psi[j].sum() / n;
        (apsi, apsi - a * psi.conj())
    }

    pub(crate) fn batch_means(&self, b: usize, k: usize, j: usize) -> (Complex64, Complex64) {
        let s = &self.batches[b];
        let n = s.n as f64;
        (s.f0[k].sum() / n, s.psi[j].sum() / n)
    }

    /// Liouville mean of field k (Monte Carlo, all batches).
    pub fn field_mean(&self, k: usize) -> Complex64 {
        let mut acc = ComplexSum::default();
        for s in &self.batches {
            acc.add(s.f0[k].sum());
        }
        acc.sum() / self.n_samples() as f64
    }

    pub fn test_mean(&self, j: usize) -> Complex64 {
        let mut acc = ComplexSum::default();
        for s in &self.batches {
            acc.add(s.psi[j].sum());
        }
        acc.sum() / self.n_samples() as f64
    }

    /// Monte-Carlo L² norms of f_k and ψ_j with their means removed.
    pub fn centered_norms(&self, k: usize, j: usize) -> (f64, f64) {
        let n = self.n_samples() as f64;
        let mut f2 = NeumaierSum::default();
        let mut p2 = NeumaierSum::default();
        for s in &self.batches {
            f2.add(s.f2[k].sum());
            p2.add(s.psi2[j].sum());
        }
        let f = (f2.sum() / n - self.field_mean(k).norm_sqr()).max(0.0).sqrt();
        let p = (p2.sum() / n - self.test_mean(j).norm_sqr()).max(0.0).sqrt();
        (f, p)
    }
}
