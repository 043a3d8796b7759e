// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

//! The truncated self-adjoint trace class `C₁^sa` and its positive cone.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Relative asymmetry accepted by [`HermitianMatrix::new`].
pub const DEFAULT_EQ_TOL: f64 = 1e-10;

/// A self-adjoint `D × D` matrix. Construction symmetrises `(M + M*)/2`
/// and rejects inputs whose asymmetry exceeds the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: DMatrix<C64>,
}

/// Eigenvalues in ascending order with matching unit eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

/// Outcome of a cone-membership test.
#[derive(Debug, Clone)]
pub struct PsdCheck {
    pub psd: bool,
    pub min_eigenvalue: f64,
    /// Unit eigenvector with `(u x, x) = min_eigenvalue`; present on failure.
    pub witness: Option<DVector<C64>>,
}

/// Asymmetry `max |M_ij − conj(M_ji)|` of a square matrix.
pub fn asymmetry(m: &DMatrix<C64>) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..d {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn symmetrise(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

impl HermitianMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        Self::with_tolerance(m, DEFAULT_EQ_TOL)
    }

    /// Accepts `m` when its asymmetry is at most `tol · max(1, max|m_ij|)`.
    pub fn with_tolerance(m: DMatrix<C64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("Hermitian input".into()));
        }
        let asym = asymmetry(&m);
        let allowed = tol * max_abs(&m).max(1.0);
        if asym > allowed {
            return Err(Error::NotHermitian {
                asymmetry: asym,
                tolerance: allowed,
            });
        }
        Ok(Self {
            entries: symmetrise(&m),
        })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self {
            entries: DMatrix::from_diagonal(&v),
        }
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &DVector<C64>) -> Self {
        Self {
            entries: symmetrise(&(v * v.adjoint())),
        }
    }

    /// `|e_n⟩⟨e_n|`.
    pub fn basis_projector(n: usize, dim: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(n, n)] = C64::new(1.0, 0.0);
        Self { entries: m }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    /// `Tr(self · a)` for a general matrix `a`.
    pub fn pair(&self, a: &DMatrix<C64>) -> C64 {
        let d = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.entries[(i, j)] * a[(j, i)];
            }
        }
        acc
    }

    pub fn purity(&self) -> f64 {
        self.pair(&self.entries).re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    pub fn spectrum(&self) -> Spectrum {
        let eig = SymmetricEigen::new(self.entries.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_columns(
            &order
                .iter()
                .map(|&k| eig.eigenvectors.column(k).into_owned())
                .collect::<Vec<_>>(),
        );
        Spectrum { values, vectors }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Sum of absolute eigenvalues.
    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|x| x.abs()).sum()
    }

    /// `|u| = v + w` from the spectral decomposition.
    pub fn abs(&self) -> Self {
        let (v, w) = self.jordan_decompose();
        v.add(&w).expect("same dimension")
    }

    /// Unique `v, w >= 0` with `u = v − w`, `|u| = v + w` and `v w = 0`.
    pub fn jordan_decompose(&self) -> (Self, Self) {
        let sp = self.spectrum();
        let d = self.dim();
        let mut pos = DMatrix::zeros(d, d);
        let mut neg = DMatrix::zeros(d, d);
        for (k, &lam) in sp.values.iter().enumerate() {
            let x = sp.vectors.column(k);
            let proj = x * x.adjoint();
            if lam > 0.0 {
                pos += proj * C64::new(lam, 0.0);
            } else if lam < 0.0 {
                neg += proj * C64::new(-lam, 0.0);
            }
        }
        (
            Self {
                entries: symmetrise(&pos),
            },
            Self {
                entries: symmetrise(&neg),
            },
        )
    }

    pub fn is_psd(&self, tol: f64) -> PsdCheck {
        let sp = self.spectrum();
        let min = sp.values.first().copied().unwrap_or(0.0);
        let psd = min >= -tol;
        PsdCheck {
            psd,
            min_eigenvalue: min,
            witness: (!psd).then(|| sp.vectors.column(0).into_owned()),
        }
    }

    /// `A X A*` for an arbitrary square `A`.
    pub fn sandwich(&self, a: &DMatrix<C64>) -> Result<Self> {
        if a.nrows() != self.dim() || a.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: a.nrows(),
            });
        }
        Ok(Self {
            entries: symmetrise(&(a * &self.entries * a.adjoint())),
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        same_dim(self, rhs)?;
        Ok(Self {
            entries: &self.entries + &rhs.entries,
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        same_dim(self, rhs)?;
        Ok(Self {
            entries: &self.entries - &rhs.entries,
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            entries: &self.entries * C64::new(c, 0.0),
        }
    }

    /// Largest entrywise deviation from `rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        max_abs(&(&self.entries - &rhs.entries))
    }

    /// Highest level `n` with a nonzero row or column (`None` for zero).
    pub fn support_top(&self, tol: f64) -> Option<usize> {
        let d = self.dim();
        (0..d).rev().find(|&n| {
            (0..d).any(|k| self.entries[(n, k)].norm() > tol || self.entries[(k, n)].norm() > tol)
        })
    }
}

fn same_dim(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `u ≤ v` in the PSD order, i.e. `v − u >= 0` within `tol`.
pub fn psd_order_le(u: &HermitianMatrix, v: &HermitianMatrix, tol: f64) -> Result<PsdCheck> {
    Ok(v.sub(u)?.is_psd(tol))
}

/// Convergence record of a monotone bounded sequence in the PSD cone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneNetRecord {
    /// `‖u_{k+1} − u_k‖₁` for consecutive elements.
    pub increment_norms: Vec<f64>,
    /// `Tr(u_{k+1} − u_k)`; equal to the norms on a monotone sequence.
    pub increment_traces: Vec<f64>,
    pub traces: Vec<f64>,
    pub trace_bound: f64,
    /// Largest `| ‖Δ‖₁ − Tr Δ |` seen.
    pub norm_trace_gap: f64,
}

/// Checks the hypotheses of the monotone convergence mechanism on a finite
/// sequence (each element PSD, nondecreasing, traces bounded) and returns
/// the last element with the Cauchy record `‖u_{k+1} − u_k‖₁ = Tr(u_{k+1} − u_k)`.
pub fn monotone_net_limit(
    sequence: &[HermitianMatrix],
    trace_bound: f64,
    tol: f64,
) -> Result<(HermitianMatrix, MonotoneNetRecord)> {
    let first = sequence.first().ok_or(Error::Precondition {
        index: 0,
        reason: "empty sequence".into(),
    })?;
    let mut record = MonotoneNetRecord {
        increment_norms: Vec::new(),
        increment_traces: Vec::new(),
        traces: Vec::new(),
        trace_bound,
        norm_trace_gap: 0.0,
    };
    for (k, u) in sequence.iter().enumerate() {
        if u.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: u.dim(),
            });
        }
        let check = u.is_psd(tol);
        if !check.psd {
            return Err(Error::Precondition {
                index: k,
                reason: format!("not PSD (min eigenvalue {:.3e})", check.min_eigenvalue),
            });
        }
        let tr = u.trace();
        if tr > trace_bound + tol {
            return Err(Error::Precondition {
                index: k,
                reason: format!("trace {tr} exceeds bound {trace_bound}"),
            });
        }
        record.traces.push(tr);
        if k > 0 {
            let delta = u.sub(&sequence[k - 1])?;
            let step = delta.is_psd(tol);
            if !step.psd {
                return Err(Error::OrderViolation {
                    index: k,
                    min_eigenvalue: step.min_eigenvalue,
                });
            }
            let norm = delta.trace_norm();
            let trace = delta.trace();
            record.norm_trace_gap = record.norm_trace_gap.max((norm - trace).abs());
            record.increment_norms.push(norm);
            record.increment_traces.push(trace);
        }
    }
    Ok((
        sequence.last().cloned().unwrap_or_else(|| first.clone()),
        record,
    ))
}
