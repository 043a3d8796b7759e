// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

//! Linear maps on `D × D` matrices.
//!
//! A [`SuperOperator`] is a `D² × D²` matrix acting on column-stacked
//! inputs: entry `(i, j)` of `ρ` sits at index `i + j·D`. Under that
//! convention the sandwich `ρ ↦ A ρ B*` is `conj(B) ⊗ A`.
//!
//! Storage is compressed sparse rows. Exponentials and resolvent solves
//! are dense, but run independently on each connected block of the
//! sparsity graph: the maps of the boson model never mix different
//! off-diagonals `n − m`, so their blocks have at most `D` rows.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockOperator;
use crate::hermitian::{HermitianMatrix, DEFAULT_EQ_TOL};
use crate::sampling;
use crate::C64;

/// Largest `t·‖S‖₁` handed to the exponential.
const MAX_SCALED_NORM: f64 = 1e8;
/// Condition estimates above this make a solve fail.
const MAX_CONDITION: f64 = 1e13;
/// Relative residual accepted from a block solve.
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    label: String,
}

/// Index pair `(i, j)` of the entry stored at vector position `k`.
#[inline]
fn unvec(k: usize, dim: usize) -> (usize, usize) {
    (k % dim, k / dim)
}

#[inline]
fn vec_index(i: usize, j: usize, dim: usize) -> usize {
    i + j * dim
}

pub(crate) fn vectorise(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub(crate) fn devectorise(v: &DVector<C64>, dim: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

impl SuperOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped. Rejects maps that do not preserve Hermiticity.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let op = Self::assemble(dim, triplets, label.into());
        op.check_hermiticity_preserving(DEFAULT_EQ_TOL)?;
        Ok(op)
    }

    fn assemble(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
        label: String,
    ) -> Self {
        let n = dim * dim;
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); n];
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            *rows[r].entry(c).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != C64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
            label,
        }
    }

    pub fn from_dense(dim: usize, m: &DMatrix<C64>, label: impl Into<String>) -> Result<Self> {
        let n = dim * dim;
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
            });
        }
        let triplets = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, m[(r, c)]));
        Self::from_triplets(dim, triplets, label)
    }

    /// Tabulates an arbitrary linear map by evaluating it on matrix units.
    pub fn from_linear_map(
        dim: usize,
        label: impl Into<String>,
        f: impl Fn(&DMatrix<C64>) -> DMatrix<C64>,
    ) -> Result<Self> {
        let mut triplets = Vec::new();
        for l in 0..dim {
            for k in 0..dim {
                let mut unit = DMatrix::zeros(dim, dim);
                unit[(k, l)] = C64::new(1.0, 0.0);
                let out = f(&unit);
                let col = vec_index(k, l, dim);
                for (r, v) in out.iter().enumerate() {
                    if *v != C64::new(0.0, 0.0) {
                        triplets.push((r, col, *v));
                    }
                }
            }
        }
        Self::from_triplets(dim, triplets, label)
    }

    pub fn identity(dim: usize) -> Self {
        let n = dim * dim;
        Self::assemble(dim, (0..n).map(|k| (k, k, C64::new(1.0, 0.0))), "id".into())
    }

    pub fn zero(dim: usize) -> Self {
        Self::assemble(dim, std::iter::empty(), "0".into())
    }

    /// `ρ ↦ A ρ B` as triplets of `Bᵀ ⊗ A`.
    fn two_sided_triplets(
        a: &DMatrix<C64>,
        b: &DMatrix<C64>,
        coeff: C64,
    ) -> Vec<(usize, usize, C64)> {
        let dim = a.nrows();
        let nz = |m: &DMatrix<C64>| {
            let mut out = Vec::new();
            for c in 0..dim {
                for r in 0..dim {
                    if m[(r, c)] != C64::new(0.0, 0.0) {
                        out.push((r, c, m[(r, c)]));
                    }
                }
            }
            out
        };
        let a_nz = nz(a);
        let b_nz = nz(b);
        let mut triplets = Vec::with_capacity(a_nz.len() * b_nz.len());
        // (A ρ B)_{ij} = Σ A_{ik} ρ_{kl} B_{lj}
        for &(i, k, av) in &a_nz {
            for &(l, j, bv) in &b_nz {
                triplets.push((vec_index(i, j, dim), vec_index(k, l, dim), coeff * av * bv));
            }
        }
        triplets
    }

    /// `ρ ↦ Σ c_i V_i ρ V_i*` with `c_i >= 0`; positivity preserving by construction.
    pub fn from_sandwich_sum(terms: &[(f64, &FockOperator)]) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(_, v)| v.dim())
            .ok_or_else(|| Error::InvalidConfig("sandwich sum needs at least one term".into()))?;
        let mut triplets = Vec::new();
        let mut labels = Vec::new();
        for &(c, v) in terms {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.dim(),
                });
            }
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::OutOfRange {
                    what: "sandwich coefficient",
                    value: c,
                    bound: "c >= 0".into(),
                });
            }
            if c == 0.0 {
                continue;
            }
            triplets.extend(Self::two_sided_triplets(
                v.matrix(),
                &v.matrix().adjoint(),
                C64::new(c, 0.0),
            ));
            labels.push(format!("{c}·{}(·){}*", v.label(), v.label()));
        }
        let label = if labels.is_empty() {
            "0".to_string()
        } else {
            labels.join(" + ")
        };
        Self::from_triplets(dim, triplets, label)
    }

    /// `ρ ↦ A ρ + ρ A*`.
    pub fn from_left_right(a: &FockOperator) -> Result<Self> {
        let dim = a.dim();
        let id = DMatrix::<C64>::identity(dim, dim);
        let one = C64::new(1.0, 0.0);
        let mut triplets = Self::two_sided_triplets(a.matrix(), &id, one);
        triplets.extend(Self::two_sided_triplets(&id, &a.matrix().adjoint(), one));
        Self::from_triplets(dim, triplets, format!("{0}(·) + (·){0}*", a.label()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn entry(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(pos) => self.vals[span.start + pos],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim * self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim * self.dim;
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Exact structural test: `S[(i,j),(k,l)] = conj S[(j,i),(l,k)]`
    /// is equivalent to `S(ρ)* = S(ρ*)`.
    fn check_hermiticity_preserving(&self, tol: f64) -> Result<()> {
        let d = self.dim;
        let mut worst = 0.0f64;
        let mut scale = 1.0f64;
        for (r, c, v) in self.triplets() {
            let (i, j) = unvec(r, d);
            let (k, l) = unvec(c, d);
            let mirror = self.entry(vec_index(j, i, d), vec_index(l, k, d));
            worst = worst.max((v - mirror.conj()).norm());
            scale = scale.max(v.norm());
        }
        if worst > tol * scale {
            return Err(Error::HermiticityViolation {
                label: self.label.clone(),
                asymmetry: worst,
                tolerance: tol * scale,
            });
        }
        Ok(())
    }

    fn apply_vec(&self, x: &DVector<C64>) -> DVector<C64> {
        let n = self.dim * self.dim;
        DVector::from_iterator(
            n,
            (0..n).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum::<C64>()),
        )
    }

    /// Applies the map to an arbitrary (not necessarily Hermitian) matrix.
    pub fn apply_matrix(&self, m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.nrows(),
            });
        }
        Ok(devectorise(&self.apply_vec(&vectorise(m)), self.dim))
    }

    pub fn apply(&self, rho: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.apply_with_tol(rho, DEFAULT_EQ_TOL)
    }

    pub fn apply_with_tol(&self, rho: &HermitianMatrix, tol: f64) -> Result<HermitianMatrix> {
        let out = self.apply_matrix(rho.matrix())?;
        self.hermitian_output(out, tol)
    }

    fn hermitian_output(&self, out: DMatrix<C64>, tol: f64) -> Result<HermitianMatrix> {
        HermitianMatrix::with_tolerance(out, tol).map_err(|e| match e {
            Error::NotHermitian {
                asymmetry,
                tolerance,
            } => Error::HermiticityViolation {
                label: self.label.clone(),
                asymmetry,
                tolerance,
            },
            other => other,
        })
    }

    fn check_same_dim(&self, rhs: &Self) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        Ok(())
    }

    fn combine(&self, rhs: &Self, sign: f64, label: String) -> Result<Self> {
        self.check_same_dim(rhs)?;
        let s = C64::new(sign, 0.0);
        Ok(Self::assemble(
            self.dim,
            self.triplets()
                .chain(rhs.triplets().map(|(r, c, v)| (r, c, s * v))),
            label,
        ))
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.combine(rhs, 1.0, format!("{} + {}", self.label, rhs.label))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.combine(rhs, -1.0, format!("{} - ({})", self.label, rhs.label))
    }

    /// Multiplication by a real scalar (complex scalars would break Hermiticity).
    pub fn scale(&self, c: f64) -> Self {
        let z = C64::new(c, 0.0);
        Self::assemble(
            self.dim,
            self.triplets().map(|(r, col, v)| (r, col, z * v)),
            format!("{c}·({})", self.label),
        )
    }

    /// The composition `self ∘ first`, i.e. the matrix product `self · first`.
    pub fn compose(&self, first: &Self) -> Result<Self> {
        self.check_same_dim(first)?;
        let n = self.dim * self.dim;
        let mut triplets = Vec::new();
        let mut acc = vec![C64::new(0.0, 0.0); n];
        let mut touched = Vec::new();
        for r in 0..n {
            for (k, a) in self.row(r) {
                for (c, b) in first.row(k) {
                    if acc[c] == C64::new(0.0, 0.0) {
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &c in &touched {
                triplets.push((r, c, acc[c]));
                acc[c] = C64::new(0.0, 0.0);
            }
            touched.clear();
        }
        Ok(Self::assemble(
            self.dim,
            triplets,
            format!("({})∘({})", self.label, first.label),
        ))
    }

    /// The adjoint for the bilinear trace pairing:
    /// `Tr((S ρ) A) = Tr(ρ (S* A))`, i.e. `S*[(i,j),(k,l)] = S[(l,k),(j,i)]`.
    pub fn trace_adjoint(&self) -> Self {
        let d = self.dim;
        Self::assemble(
            d,
            self.triplets().map(|(r, c, v)| {
                let (l, k) = unvec(r, d);
                let (j, i) = unvec(c, d);
                (vec_index(i, j, d), vec_index(k, l, d), v)
            }),
            format!("({})*", self.label),
        )
    }

    /// Maximum absolute column sum of the `D² × D²` matrix.
    pub fn one_norm(&self) -> f64 {
        let n = self.dim * self.dim;
        let mut sums = vec![0.0f64; n];
        for (_, c, v) in self.triplets() {
            sums[c] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Connected components of the sparsity graph, each sorted, ordered by
    /// their smallest index.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.dim * self.dim;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (r, c, _) in self.triplets() {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for k in 0..n {
            let root = find(&mut parent, k);
            groups.entry(root).or_default().push(k);
        }
        groups.into_values().collect()
    }

    fn dense_block(&self, block: &[usize], local: &[usize]) -> DMatrix<C64> {
        let m = block.len();
        let mut out = DMatrix::zeros(m, m);
        for (a, &r) in block.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[(a, local[c])] = v;
            }
        }
        out
    }

    fn local_index(blocks: &[Vec<usize>], n: usize) -> Vec<usize> {
        let mut local = vec![0usize; n];
        for block in blocks {
            for (a, &k) in block.iter().enumerate() {
                local[k] = a;
            }
        }
        local
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::OutOfRange {
                what: "t",
                value: t,
                bound: "finite t >= 0".into(),
            });
        }
        let scaled = t * self.one_norm();
        if scaled > MAX_SCALED_NORM {
            return Err(Error::Overflow {
                label: self.label.clone(),
                scaled_norm: scaled,
            });
        }
        Ok(())
    }

    fn block_exp(&self, block: &[usize], local: &[usize], t: f64) -> Result<DMatrix<C64>> {
        let m = self.dense_block(block, local) * C64::new(t, 0.0);
        let e = m.exp();
        if e.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Overflow {
                label: self.label.clone(),
                scaled_norm: t * self.one_norm(),
            });
        }
        Ok(e)
    }

    /// `e^{tS}` by scaling and squaring with a Padé core, block by block.
    pub fn exponential(&self, t: f64) -> Result<Self> {
        self.check_time(t)?;
        let n = self.dim * self.dim;
        let blocks = self.blocks();
        let local = Self::local_index(&blocks, n);
        let mut triplets = Vec::new();
        for block in &blocks {
            let e = self.block_exp(block, &local, t)?;
            for (a, &r) in block.iter().enumerate() {
                for (b, &c) in block.iter().enumerate() {
                    triplets.push((r, c, e[(a, b)]));
                }
            }
        }
        Ok(Self::assemble(
            self.dim,
            triplets,
            format!("exp({t}·{})", self.label),
        ))
    }

    /// `e^{tS} ρ`, exponentiating only the blocks that `ρ` touches.
    pub fn exp_apply(&self, t: f64, rho: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.check_time(t)?;
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        let n = self.dim * self.dim;
        let x = vectorise(rho.matrix());
        let blocks = self.blocks();
        let local = Self::local_index(&blocks, n);
        let mut y = DVector::zeros(n);
        for block in &blocks {
            if block.iter().all(|&k| x[k] == C64::new(0.0, 0.0)) {
                continue;
            }
            let e = self.block_exp(block, &local, t)?;
            let xb = DVector::from_iterator(block.len(), block.iter().map(|&k| x[k]));
            let yb = e * xb;
            for (a, &k) in block.iter().enumerate() {
                y[k] = yb[a];
            }
        }
        self.hermitian_output(devectorise(&y, self.dim), DEFAULT_EQ_TOL)
    }

    /// `e^{tS} ρ` for a batch of inputs; each touched block is
    /// exponentiated once.
    pub fn exp_apply_many(&self, t: f64, rhos: &[HermitianMatrix]) -> Result<Vec<HermitianMatrix>> {
        self.check_time(t)?;
        for rho in rhos {
            if rho.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: rho.dim(),
                });
            }
        }
        let n = self.dim * self.dim;
        let xs: Vec<DVector<C64>> = rhos.iter().map(|r| vectorise(r.matrix())).collect();
        let mut ys: Vec<DVector<C64>> = vec![DVector::zeros(n); rhos.len()];
        let blocks = self.blocks();
        let local = Self::local_index(&blocks, n);
        for block in &blocks {
            let touched = |x: &DVector<C64>| block.iter().any(|&k| x[k] != C64::new(0.0, 0.0));
            if !xs.iter().any(touched) {
                continue;
            }
            let e = self.block_exp(block, &local, t)?;
            for (x, y) in xs.iter().zip(ys.iter_mut()) {
                if !touched(x) {
                    continue;
                }
                let xb = DVector::from_iterator(block.len(), block.iter().map(|&k| x[k]));
                let yb = &e * xb;
                for (a, &k) in block.iter().enumerate() {
                    y[k] = yb[a];
                }
            }
        }
        ys.iter()
            .map(|y| self.hermitian_output(devectorise(y, self.dim), DEFAULT_EQ_TOL))
            .collect()
    }

    /// The connected blocks with their dense sub-matrices.
    pub fn dense_blocks(&self) -> Vec<(Vec<usize>, DMatrix<C64>)> {
        let n = self.dim * self.dim;
        let blocks = self.blocks();
        let local = Self::local_index(&blocks, n);
        blocks
            .into_iter()
            .map(|b| {
                let m = self.dense_block(&b, &local);
                (b, m)
            })
            .collect()
    }

    /// Factorises `shift·I + scale·S` for repeated solves.
    pub fn shifted_solver(&self, shift: f64, scale: f64) -> Result<ShiftedSolver> {
        let n = self.dim * self.dim;
        let blocks = self.blocks();
        let local = Self::local_index(&blocks, n);
        let mut factors = Vec::with_capacity(blocks.len());
        let mut worst_condition = 1.0f64;
        let label = format!("{shift}·I + {scale}·({})", self.label);
        for block in &blocks {
            let mut m = self.dense_block(block, &local) * C64::new(scale, 0.0);
            for a in 0..block.len() {
                m[(a, a)] += C64::new(shift, 0.0);
            }
            let norm = one_norm_dense(&m);
            let lu = m.lu();
            let inv = lu.try_inverse().ok_or_else(|| Error::Singular {
                label: label.clone(),
                condition: f64::INFINITY,
            })?;
            let condition = norm * one_norm_dense(&inv);
            if !condition.is_finite() || condition > MAX_CONDITION {
                return Err(Error::Singular {
                    label: label.clone(),
                    condition,
                });
            }
            worst_condition = worst_condition.max(condition);
            factors.push(lu);
        }
        Ok(ShiftedSolver {
            op: self.clone(),
            shift,
            scale,
            blocks,
            factors,
            condition: worst_condition,
            label,
        })
    }

    /// `(λ I + S)^{-1} u`.
    pub fn resolvent_apply(&self, lambda: f64, u: &HermitianMatrix) -> Result<HermitianMatrix> {
        check_lambda(lambda)?;
        self.shifted_solver(lambda, 1.0)?.solve(u)
    }

    /// `(λ I + S)^{-1}` as an explicit superoperator (block inverses).
    pub fn resolvent_operator(&self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let solver = self.shifted_solver(lambda, 1.0)?;
        let mut triplets = Vec::new();
        for (block, lu) in solver.blocks.iter().zip(&solver.factors) {
            let inv = lu.try_inverse().ok_or_else(|| Error::Singular {
                label: solver.label.clone(),
                condition: f64::INFINITY,
            })?;
            for (a, &r) in block.iter().enumerate() {
                for (b, &c) in block.iter().enumerate() {
                    triplets.push((r, c, inv[(a, b)]));
                }
            }
        }
        Ok(Self::assemble(
            self.dim,
            triplets,
            format!("({lambda}·I + {})^-1", self.label),
        ))
    }

    /// `(I + (t/n) S)^{-n} u`, the implicit Euler approximation of `e^{-tS} u`.
    pub fn euler_power(
        &self,
        t: f64,
        steps: usize,
        u: &HermitianMatrix,
    ) -> Result<HermitianMatrix> {
        if steps == 0 {
            return Err(Error::OutOfRange {
                what: "n",
                value: 0.0,
                bound: "n >= 1".into(),
            });
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::OutOfRange {
                what: "t",
                value: t,
                bound: "finite t >= 0".into(),
            });
        }
        let solver = self.shifted_solver(1.0, t / steps as f64)?;
        let mut x = u.clone();
        for _ in 0..steps {
            x = solver.solve(&x)?;
        }
        Ok(x)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::OutOfRange {
            what: "lambda",
            value: lambda,
            bound: "lambda > 0".into(),
        });
    }
    Ok(())
}

fn one_norm_dense(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU factors of `shift·I + scale·S`, one per block.
#[derive(Debug, Clone)]
pub struct ShiftedSolver {
    op: SuperOperator,
    shift: f64,
    scale: f64,
    blocks: Vec<Vec<usize>>,
    factors: Vec<LU<C64, Dyn, Dyn>>,
    condition: f64,
    label: String,
}

impl ShiftedSolver {
    /// Worst 1-norm condition number over the blocks.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, u: &HermitianMatrix) -> Result<HermitianMatrix> {
        let dim = self.op.dim;
        if u.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: u.dim(),
            });
        }
        let rhs = vectorise(u.matrix());
        let mut x = DVector::zeros(dim * dim);
        for (block, lu) in self.blocks.iter().zip(&self.factors) {
            if block.iter().all(|&k| rhs[k] == C64::new(0.0, 0.0)) {
                continue;
            }
            let b = DVector::from_iterator(block.len(), block.iter().map(|&k| rhs[k]));
            let xb = lu.solve(&b).ok_or_else(|| Error::Singular {
                label: self.label.clone(),
                condition: self.condition,
            })?;
            for (a, &k) in block.iter().enumerate() {
                x[k] = xb[a];
            }
        }
        let residual = (&x * C64::new(self.shift, 0.0)
            + self.op.apply_vec(&x) * C64::new(self.scale, 0.0)
            - &rhs)
            .norm();
        let bound = RESIDUAL_TOL * rhs.norm().max(f64::MIN_POSITIVE);
        if residual > bound {
            return Err(Error::Residual {
                label: self.label.clone(),
                residual,
                bound,
            });
        }
        self.op
            .hermitian_output(devectorise(&x, dim), DEFAULT_EQ_TOL)
    }
}

/// Outcome of [`positivity_probe`]. A clean report means no violation was
/// found among the samples, not that the map is positivity preserving.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub samples: usize,
    pub worst_min_eigenvalue: f64,
    /// The input attaining `worst_min_eigenvalue`.
    #[serde(skip)]
    pub witness_input: Option<HermitianMatrix>,
    pub seed: u64,
}

impl ProbeReport {
    pub fn violation_found(&self, tol: f64) -> bool {
        self.worst_min_eigenvalue < -tol
    }
}

fn symmetrised_output(s: &SuperOperator, rho: &HermitianMatrix) -> HermitianMatrix {
    let out = s.apply_matrix(rho.matrix()).expect("dimension checked");
    let sym = (&out + out.adjoint()) * C64::new(0.5, 0.0);
    HermitianMatrix::with_tolerance(sym, f64::INFINITY).expect("symmetrised")
}

/// Evaluates `S` on every basis projector and on `n_samples` seeded PSD
/// inputs (alternating rank-one and full-rank Gram states), reporting the
/// most negative output eigenvalue.
pub fn positivity_probe(s: &SuperOperator, n_samples: usize, seed: u64) -> ProbeReport {
    positivity_probe_with(s, n_samples, seed, &[])
}

/// [`positivity_probe`] with extra deterministic candidate inputs.
pub fn positivity_probe_with(
    s: &SuperOperator,
    n_samples: usize,
    seed: u64,
    candidates: &[HermitianMatrix],
) -> ProbeReport {
    let d = s.dim();
    let mut rng = sampling::rng(seed);
    let inputs = candidates
        .iter()
        .cloned()
        .chain((0..d).map(|n| HermitianMatrix::basis_projector(n, d)))
        .chain((0..n_samples.max(1)).map(|k| sampling::psd_state(&mut rng, d, d - 1, k)));
    let mut worst = f64::INFINITY;
    let mut witness = None;
    let mut count = 0;
    for input in inputs {
        count += 1;
        let m = symmetrised_output(s, &input).min_eigenvalue();
        if m < worst {
            worst = m;
            witness = Some(input);
        }
    }
    ProbeReport {
        samples: count,
        worst_min_eigenvalue: worst,
        witness_input: witness,
        seed,
    }
}

/// Certified lower bound on the trace-norm-induced norm of `S`.
#[derive(Debug, Clone)]
pub struct NormProbe {
    pub lower_bound: f64,
    pub witness: DVector<C64>,
}

/// Maximises `‖S(|v⟩⟨v|)‖₁` over unit vectors: basis vectors, seeded
/// Gaussian samples, then a seeded local ascent from the best candidate.
/// Pure states are the extreme points of the Hermitian trace-norm ball, so
/// every value is a valid lower bound.
pub fn induced_trace_norm_probe(s: &SuperOperator, n_samples: usize, seed: u64) -> NormProbe {
    let d = s.dim();
    let mut rng = sampling::rng(seed);
    let value = |v: &DVector<C64>| symmetrised_output(s, &HermitianMatrix::outer(v)).trace_norm();

    let mut best_v = crate::fock::basis_vector(0, d);
    let mut best = value(&best_v);
    let candidates = (1..d)
        .map(|n| crate::fock::basis_vector(n, d))
        .collect::<Vec<_>>();
    for v in candidates {
        let f = value(&v);
        if f > best {
            best = f;
            best_v = v;
        }
    }
    for _ in 0..n_samples {
        let v = sampling::unit_vector(&mut rng, d, d - 1);
        let f = value(&v);
        if f > best {
            best = f;
            best_v = v;
        }
    }

    let mut step = 0.25;
    let mut failures = 0;
    for _ in 0..(20 * n_samples.max(10)) {
        if step < 1e-6 {
            break;
        }
        let kick = sampling::unit_vector(&mut rng, d, d - 1) * C64::new(step, 0.0);
        let trial = &best_v + kick;
        let trial = &trial / C64::new(trial.norm(), 0.0);
        let f = value(&trial);
        if f > best {
            best = f;
            best_v = trial;
            failures = 0;
        } else {
            failures += 1;
            if failures >= 20 {
                step *= 0.5;
                failures = 0;
            }
        }
    }
    NormProbe {
        lower_bound: best,
        witness: best_v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{self, TruncationConfig};

    fn cfg(d: usize) -> TruncationConfig {
        TruncationConfig::new(d, 0).unwrap()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn sandwich_identity_and_ladders() {
        let d = 3;
        let id = fock::FockOperator::identity(d);
        let s = SuperOperator::from_sandwich_sum(&[(1.0, &id)]).unwrap();
        assert_eq!(s.to_dense(), SuperOperator::identity(d).to_dense());

        let b = fock::annihilation(&cfg(d));
        let lower = SuperOperator::from_sandwich_sum(&[(1.0, &b)]).unwrap();
        let out = lower
            .apply(&HermitianMatrix::basis_projector(1, d))
            .unwrap();
        assert!(out.max_abs_diff(&HermitianMatrix::basis_projector(0, d)) < 1e-15);

        let bd = fock::creation(&cfg(d));
        let raise = SuperOperator::from_sandwich_sum(&[(1.0, &bd)]).unwrap();
        let out = raise
            .apply(&HermitianMatrix::basis_projector(0, d))
            .unwrap();
        assert!(out.max_abs_diff(&HermitianMatrix::basis_projector(1, d)) < 1e-15);

        assert!(SuperOperator::from_sandwich_sum(&[(-1.0, &b)]).is_err());
    }

    #[test]
    fn left_right_examples() {
        let d = 4;
        let id = fock::FockOperator::identity(d);
        let doubling = SuperOperator::from_left_right(&id).unwrap();
        let rho = sampling::hermitian(&mut sampling::rng(3), d, d - 1);
        assert!(doubling.apply(&rho).unwrap().max_abs_diff(&rho.scale(2.0)) < 1e-14);

        let diag = [0.5, -1.0, 2.0, 0.25];
        let a = fock::FockOperator::new(
            DMatrix::from_diagonal(&DVector::from_iterator(4, diag.iter().map(|&x| c(x)))),
            "A",
        )
        .unwrap();
        let s = SuperOperator::from_left_right(&a).unwrap();
        let out = s.apply_matrix(rho.matrix()).unwrap();
        for n in 0..d {
            for m in 0..d {
                let expected = rho.matrix()[(n, m)] * c(diag[n] + diag[m]);
                assert!((out[(n, m)] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_non_hermiticity_preserving() {
        // ρ ↦ i ρ
        let n = 4;
        let m = DMatrix::<C64>::identity(n, n) * C64::new(0.0, 1.0);
        assert!(matches!(
            SuperOperator::from_dense(2, &m, "i·id"),
            Err(Error::HermiticityViolation { .. })
        ));
    }

    #[test]
    fn apply_identity_zero_and_composition() {
        let d = 3;
        let mut rng = sampling::rng(11);
        let rho = sampling::hermitian(&mut rng, d, d - 1);
        assert_eq!(SuperOperator::identity(d).apply(&rho).unwrap(), rho);
        assert_eq!(
            SuperOperator::zero(d).apply(&rho).unwrap(),
            HermitianMatrix::zeros(d)
        );
        let b = fock::annihilation(&cfg(d));
        let s1 = SuperOperator::from_sandwich_sum(&[(0.7, &b)]).unwrap();
        let s2 = SuperOperator::from_left_right(&fock::hamiltonian(1.3, &cfg(d)).unwrap()).unwrap();
        let two_step = s2.apply(&s1.apply(&rho).unwrap()).unwrap();
        let composed = s2.compose(&s1).unwrap().apply(&rho).unwrap();
        assert!(two_step.max_abs_diff(&composed) < 1e-13);
        // matrix-product oracle on the dense representation
        let dense = s2.to_dense() * s1.to_dense();
        assert!((dense - s2.compose(&s1).unwrap().to_dense()).norm() < 1e-13);
    }

    #[test]
    fn trace_adjoint_of_sandwich() {
        let d = 4;
        let v = fock::FockOperator::new(sampling::complex_matrix(&mut sampling::rng(5), d, d), "V")
            .unwrap();
        let s = SuperOperator::from_sandwich_sum(&[(1.0, &v)]).unwrap();
        let adj = s.trace_adjoint();
        let a = sampling::hermitian(&mut sampling::rng(6), d, d - 1);
        let expected = v.matrix().adjoint() * a.matrix() * v.matrix();
        assert!((adj.apply_matrix(a.matrix()).unwrap() - expected).norm() < 1e-12);
        assert_eq!(
            SuperOperator::identity(d).trace_adjoint().to_dense(),
            SuperOperator::identity(d).to_dense()
        );
    }

    #[test]
    fn exponential_basics() {
        let d = 3;
        let b = fock::annihilation(&cfg(d));
        let s = SuperOperator::from_sandwich_sum(&[(1.0, &b)]).unwrap();
        let e0 = s.exponential(0.0).unwrap();
        assert!((e0.to_dense() - SuperOperator::identity(d).to_dense()).norm() < 1e-15);

        let diag = fock::FockOperator::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![c(-0.2), c(0.1), c(-1.0)])),
            "A",
        )
        .unwrap();
        let lr = SuperOperator::from_left_right(&diag).unwrap();
        let e = lr.exponential(0.8).unwrap().to_dense();
        let g = lr.to_dense();
        for k in 0..9 {
            assert!((e[(k, k)] - (g[(k, k)] * c(0.8)).exp()).norm() < 1e-14);
        }
        assert!(s.exponential(-1.0).is_err());
        assert!(matches!(
            s.scale(1e9).exponential(1.0),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn batched_exponential_matches_single() {
        let d = 5;
        let b = fock::annihilation(&cfg(d));
        let s = SuperOperator::from_sandwich_sum(&[(0.8, &b)])
            .unwrap()
            .sub(&SuperOperator::from_left_right(&fock::number_op(&cfg(d))).unwrap())
            .unwrap();
        let mut rng = sampling::rng(2);
        let rhos: Vec<_> = (0..4)
            .map(|k| sampling::psd_state(&mut rng, d, 2 + k % 2, k))
            .collect();
        let many = s.exp_apply_many(0.6, &rhos).unwrap();
        for (rho, out) in rhos.iter().zip(&many) {
            assert!(s.exp_apply(0.6, rho).unwrap().max_abs_diff(out) < 1e-15);
        }
        let total: usize = s
            .dense_blocks()
            .iter()
            .map(|(b, m)| {
                assert_eq!(m.nrows(), b.len());
                b.len()
            })
            .sum();
        assert_eq!(total, d * d);
    }

    #[test]
    fn resolvent_trivial_cases() {
        let d = 3;
        let u = sampling::hermitian(&mut sampling::rng(9), d, d - 1);
        let x = SuperOperator::zero(d).resolvent_apply(2.0, &u).unwrap();
        assert!(x.max_abs_diff(&u.scale(0.5)) < 1e-14);
        assert!(SuperOperator::zero(d).resolvent_apply(0.0, &u).is_err());
        let singular = SuperOperator::identity(d).scale(-1.0);
        assert!(matches!(
            singular.resolvent_apply(1.0, &u),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn euler_of_zero_generator_is_identity() {
        let d = 3;
        let u = sampling::hermitian(&mut sampling::rng(4), d, d - 1);
        for n in [1, 5, 40] {
            let x = SuperOperator::zero(d).euler_power(1.0, n, &u).unwrap();
            assert!(x.max_abs_diff(&u) < 1e-15);
        }
    }

    #[test]
    fn probe_transpose_is_positive_on_samples() {
        let t = SuperOperator::from_linear_map(2, "transpose", |m| m.transpose()).unwrap();
        let report = positivity_probe(&t, 50, 1);
        assert!(!report.violation_found(1e-12));
        assert!(report.witness_input.is_some());
    }

    #[test]
    fn norm_probe_identity_and_scaling() {
        let d = 3;
        let id = SuperOperator::identity(d);
        assert!((induced_trace_norm_probe(&id, 10, 1).lower_bound - 1.0).abs() < 1e-12);
        let scaled = id.scale(-2.5);
        assert!((induced_trace_norm_probe(&scaled, 10, 1).lower_bound - 2.5).abs() < 1e-12);
    }

    #[test]
    fn blocks_follow_off_diagonal_index() {
        let d = 4;
        let b = fock::annihilation(&cfg(d));
        let s = SuperOperator::from_sandwich_sum(&[(1.0, &b)]).unwrap();
        let blocks = s.blocks();
        // one block per offset n - m
        assert_eq!(blocks.len(), 2 * d - 1);
        for block in blocks {
            let offsets: Vec<i64> = block
                .iter()
                .map(|&k| {
                    let (i, j) = unvec(k, d);
                    i as i64 - j as i64
                })
                .collect();
            assert!(offsets.windows(2).all(|w| w[0] == w[1]));
        }
    }
}
