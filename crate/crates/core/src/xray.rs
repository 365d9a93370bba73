//! X-ray transform of symmetric tensors over closed geodesics, its matrix over
//! a tensor basis and the rank-separation test on solenoidal tensors.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::census::GeodesicRecord;
use crate::error::{LabError, Result};
use crate::group::Flow;
use crate::phase::PhasePoint;
use crate::quadrature::{gauss_legendre, OctagonQuadrature};
use crate::stats::NeumaierSum;
use crate::surface::SurfaceGroup;
use crate::tensor::{fiber_polynomial, sample_on, tensor_dot, SymmetricTensor};

/// Gauss–Legendre points per unit length.
pub const DEFAULT_QUADRATURE_N: usize = 64;
/// Nodes per panel; panels have length GL_ORDER / quadrature_n.
pub const GL_ORDER: usize = 16;
pub const GATE_TOL: f64 = 1e-8;
pub const DEFAULT_KERNEL_GAP: f64 = 1e3;

/// Reduced base points and directions along one period of a closed orbit.
#[derive(Debug, Clone)]
pub struct OrbitNodes {
    pub z: Vec<Complex64>,
    pub dir: Vec<Complex64>,
    pub weights: Vec<f64>,
}

impl OrbitNodes {
    /// Nodes on t ∈ [shift, shift + ℓ) of the orbit of `rec`.
    pub fn new(grp: &SurfaceGroup, rec: &GeodesicRecord, n: usize, shift: f64) -> Result<Self> {
        if n < GL_ORDER {
            return Err(LabError::Config(format!("quadrature_n must be at least {GL_ORDER}, got {n}")));
        }
        let (x, w) = gauss_legendre(GL_ORDER);
        let panels = (rec.length * n as f64 / GL_ORDER as f64).ceil().max(1.0) as usize;
        let h = rec.length / panels as f64;
        let cap = panels * GL_ORDER;
        let mut out = OrbitNodes { z: Vec::with_capacity(cap), dir: Vec::with_capacity(cap), weights: Vec::with_capacity(cap) };
        for p in 0..panels {
            let a = shift + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                let t = a + 0.5 * h * (xi + 1.0);
                let q = PhasePoint::new(rec.axis.flowed(Flow::Geodesic, t), grp)?;
                out.z.push(q.z);
                out.dir.push(q.dir);
                out.weights.push(0.5 * h * wi);
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// (∫ π^*f, ∫ |π^*f|) over the nodes.
    pub fn integrate(&self, f: &SymmetricTensor) -> (f64, f64) {
        let mut acc = NeumaierSum::default();
        let mut abs = NeumaierSum::default();
        for ((z, d), w) in self.z.iter().zip(&self.dir).zip(&self.weights) {
            let v = fiber_polynomial(&f.components(*z), *d);
            acc.add(w * v);
            abs.add(w * v.abs());
        }
        (acc.sum(), abs.sum())
    }
}

/// I_m f(γ) = ∫₀^ℓ ⟨f(γ(t)), γ̇(t)^{⊗m}⟩ dt.
pub fn xray(f: &SymmetricTensor, rec: &GeodesicRecord, n: usize) -> Result<f64> {
    xray_shifted(f, rec, n, 0.0)
}

/// Same integral with the period started at axis time `shift`.
pub fn xray_shifted(f: &SymmetricTensor, rec: &GeodesicRecord, n: usize, shift: f64) -> Result<f64> {
    Ok(OrbitNodes::new(f.surface(), rec, n, shift)?.integrate(f).0)
}

#[derive(Debug, Clone, Serialize)]
pub struct XrayRow {
    pub word: String,
    pub trace: f64,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct XrayMatrix {
    pub rows: Vec<XrayRow>,
    pub cols: Vec<String>,
    pub entries: DMatrix<f64>,
    pub quadrature_n: usize,
    pub m: usize,
    /// Entries at 2·quadrature_n minus entries at quadrature_n.
    pub refinement: DMatrix<f64>,
    /// max over entries of |ΔI| / column scale, the scale being the largest
    /// max(|I|, ∫|π^*f|) in the column.
    pub gate_residual: f64,
}

impl XrayMatrix {
    pub fn mean_length(&self) -> f64 {
        self.rows.iter().map(|r| r.length).sum::<f64>() / self.rows.len() as f64
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        self.entries.column(j).norm()
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["word".to_string(), "length".to_string()];
        header.extend(self.cols.iter().cloned());
        w.write_record(&header)?;
        for (i, r) in self.rows.iter().enumerate() {
            let mut rec = vec![r.word.clone(), format!("{:.16e}", r.length)];
            rec.extend((0..self.entries.ncols()).map(|j| format!("{:.16e}", self.entries[(i, j)])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One row: values at n and 2n plus the gate scale for each column.
fn assemble_row(grp: &SurfaceGroup, rec: &GeodesicRecord, basis: &[SymmetricTensor], n: usize) -> Result<Vec<(f64, f64, f64)>> {
    let coarse = OrbitNodes::new(grp, rec, n, 0.0)?;
    let fine = OrbitNodes::new(grp, rec, 2 * n, 0.0)?;
    Ok(basis
        .iter()
        .map(|f| {
            let (a, _) = coarse.integrate(f);
            let (b, abs) = fine.integrate(f);
            (a, b, abs)
        })
        .collect())
}

/// X-ray matrix of `basis` over `records`, gated by doubling the quadrature.
pub fn assemble(basis: &[SymmetricTensor], records: &[GeodesicRecord], m: usize, n: usize) -> Result<XrayMatrix> {
    if records.is_empty() {
        return Err(LabError::Config("census is empty".into()));
    }
    if basis.is_empty() {
        return Err(LabError::Config("tensor basis is empty".into()));
    }
    if let Some(f) = basis.iter().find(|f| f.m != m) {
        return Err(LabError::Degree(format!("basis element {} has degree {}, expected {m}", f.label, f.m)));
    }
    let grp = basis[0].surface().clone();
    let rows: Vec<Vec<(f64, f64, f64)>> = records.par_iter().map(|r| assemble_row(&grp, r, basis, n)).collect::<Result<_>>()?;
    let (nr, nc) = (records.len(), basis.len());
    let mut entries = DMatrix::zeros(nr, nc);
    let mut refinement = DMatrix::zeros(nr, nc);
    // Entries are compared against the column scale: orbits that graze a
    // bump carry values far below the quadrature resolution.
    let col_scale: Vec<f64> = (0..nc).map(|j| rows.iter().map(|r| r[j].1.abs().max(r[j].2)).fold(0.0, f64::max)).collect();
    let mut gate: f64 = 0.0;
    for (i, row) in rows.iter().enumerate() {
        for (j, &(a, b, _)) in row.iter().enumerate() {
            entries[(i, j)] = a;
            refinement[(i, j)] = b - a;
            if col_scale[j] > 0.0 {
                let r = (b - a).abs() / col_scale[j];
                gate = gate.max(r);
                if r >= GATE_TOL {
                    return Err(LabError::QuadratureNotConverged(format!(
                        "entry ({}, {}) changed by {r:.3e} relative on doubling quadrature_n = {n}",
                        records[i].word_string(),
                        basis[j].label
                    )));
                }
            }
        }
    }
    Ok(XrayMatrix {
        rows: records.iter().map(|r| XrayRow { word: r.word_string(), trace: r.trace, length: r.length }).collect(),
        cols: basis.iter().map(|f| f.label.clone()).collect(),
        entries,
        quadrature_n: n,
        m,
        refinement,
        gate_residual: gate,
    })
}

/// Coordinates of the solenoidal and potential subspaces in the span of a
/// column list [f_1 … f_b, Dq_1 … Dq_p].
#[derive(Debug, Clone)]
pub struct SolenoidalSubspace {
    pub m: usize,
    /// Tensors whose X-ray transforms form the matrix columns.
    pub columns: Vec<SymmetricTensor>,
    /// Column coordinates of f_i − Σ_k c_ik Dq_k (L²-orthogonal to the Dq).
    pub solenoidal: DMatrix<f64>,
    pub potential: DMatrix<f64>,
    /// L² Gram matrix of all columns.
    pub gram: DMatrix<f64>,
}

impl SolenoidalSubspace {
    /// `raw` has degree m; `potentials` has degree m − 1 (empty for m = 0).
    pub fn build(raw: &[SymmetricTensor], potentials: &[SymmetricTensor], quad: &OctagonQuadrature) -> Result<Self> {
        let m = raw.first().ok_or_else(|| LabError::Config("empty tensor basis".into()))?.m;
        if m == 0 && !potentials.is_empty() {
            return Err(LabError::Degree("functions have no potential part".into()));
        }
        if potentials.iter().any(|q| q.m + 1 != m) {
            return Err(LabError::Degree("potential basis must have degree m − 1".into()));
        }
        let mut columns: Vec<SymmetricTensor> = raw.to_vec();
        columns.extend(potentials.iter().map(|q| q.sym_derivative()));
        let samples: Vec<Vec<Vec<f64>>> = columns.iter().map(|t| sample_on(t, quad)).collect();
        let nc = columns.len();
        let mut gram = DMatrix::zeros(nc, nc);
        for i in 0..nc {
            for j in 0..=i {
                let mut acc = NeumaierSum::default();
                for ((x, y), w) in samples[i].iter().zip(&samples[j]).zip(&quad.weights) {
                    acc.add(w * tensor_dot(x, y));
                }
                gram[(i, j)] = acc.sum();
                gram[(j, i)] = acc.sum();
            }
        }
        let (b, p) = (raw.len(), potentials.len());
        let mut solenoidal = DMatrix::zeros(nc, b);
        for i in 0..b {
            solenoidal[(i, i)] = 1.0;
        }
        let mut potential = DMatrix::zeros(nc, p);
        if p > 0 {
            let a = gram.view((b, b), (p, p)).into_owned();
            let lmax = a.symmetric_eigenvalues().max();
            let mut reg = a.clone();
            for k in 0..p {
                reg[(k, k)] += 1e-8 * lmax;
            }
            let chol = reg.cholesky().ok_or(LabError::IllConditioned(f64::INFINITY))?;
            for i in 0..b {
                let rhs: DVector<f64> = gram.view((b, i), (p, 1)).column(0).into_owned();
                let c = chol.solve(&rhs);
                for k in 0..p {
                    solenoidal[(b + k, i)] = -c[k];
                }
            }
            for k in 0..p {
                potential[(b + k, k)] = 1.0;
            }
        }
        Ok(SolenoidalSubspace { m, columns, solenoidal, potential, gram })
    }

    pub fn dimension(&self) -> usize {
        self.solenoidal.ncols()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InjectivityReport {
    pub m: usize,
    pub rows: usize,
    pub solenoidal_dimension: usize,
    pub potential_dimension: usize,
    pub quadrature_n: usize,
    /// Singular values of I_m on the solenoidal subspace, L²-whitened.
    pub singular_values: Vec<f64>,
    pub potential_singular_values: Vec<f64>,
    /// Largest whitened singular value of the doubling difference.
    pub quadrature_floor: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub kernel_gap: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Singular values of X·C·W where W whitens the Gram Cᵀ G C.
fn whitened_singular_values(x: &DMatrix<f64>, coords: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<Vec<f64>> {
    if coords.ncols() == 0 {
        return Ok(Vec::new());
    }
    let s = coords.transpose() * gram * coords;
    let s = (&s + s.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if lmin <= 1e-12 * lmax {
        return Err(LabError::IllConditioned(if lmin > 0.0 { lmax / lmin } else { f64::INFINITY }));
    }
    let mut w = eig.eigenvectors.clone();
    for (k, l) in eig.eigenvalues.iter().enumerate() {
        w.column_mut(k).scale_mut(1.0 / l.sqrt());
    }
    let y = x * coords * w;
    let mut sv: Vec<f64> = y.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Rank separation between the solenoidal subspace and the known kernel.
/// The kernel scale is the largest of the potential singular values and the
/// quadrature floor (the only scale available when m = 0).
pub fn injectivity_test(x: &XrayMatrix, sub: &SolenoidalSubspace, threshold: f64) -> Result<InjectivityReport> {
    if x.entries.ncols() != sub.columns.len() {
        return Err(LabError::Config("matrix columns do not match the subspace".into()));
    }
    let dim = sub.dimension();
    if x.rows.len() < dim {
        return Err(LabError::RankDeficientCensus { rows: x.rows.len(), dim });
    }
    let sv = whitened_singular_values(&x.entries, &sub.solenoidal, &sub.gram)?;
    let pot = whitened_singular_values(&x.entries, &sub.potential, &sub.gram)?;
    let floor = whitened_singular_values(&x.refinement, &sub.solenoidal, &sub.gram)?.first().copied().unwrap_or(0.0);
    let sigma_min = sv.last().copied().unwrap_or(0.0);
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let kernel = pot.first().copied().unwrap_or(0.0).max(floor);
    let kernel_gap = if kernel > 0.0 { sigma_min / kernel } else { f64::INFINITY };
    Ok(InjectivityReport {
        m: x.m,
        rows: x.rows.len(),
        solenoidal_dimension: dim,
        potential_dimension: sub.potential.ncols(),
        quadrature_n: x.quadrature_n,
        singular_values: sv,
        potential_singular_values: pot,
        quadrature_floor: floor,
        sigma_min,
        sigma_max,
        kernel_gap,
        threshold,
        pass: kernel_gap > threshold,
    })
}
