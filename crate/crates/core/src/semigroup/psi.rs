// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};

use super::ModelParams;
use crate::error::{Error, Result};
use crate::fock;
use crate::hermitian::HermitianMatrix;
use crate::superop::SuperOperator;
use crate::C64;

const MAX_BISECTIONS: usize = 200;

/// `Ψ(ρ) = (I + n̂)^{-1} ρ (I + n̂)^{-1}`.
pub fn psi_map(p: &ModelParams) -> Result<SuperOperator> {
    let inv = fock::inverse_shifted_number(1.0, &p.trunc);
    Ok(SuperOperator::from_sandwich_sum(&[(1.0, &inv)])?.with_label("Psi"))
}

/// `ρ = positive − negative` with both parts PSD and of the form
/// `(I + t n̂)^{-1} X (I + t n̂)^{-1}`.
#[derive(Debug, Clone)]
pub struct PsiDecomposition {
    pub positive: HermitianMatrix,
    pub negative: HermitianMatrix,
    pub t: f64,
    pub bisections: usize,
}

/// Halves `t` from 1 until `ρ_t = (I + t n̂) ρ (I + t n̂)` satisfies
/// `‖ρ_t‖₁ <= ‖ρ‖₁ + ε`, then pulls the Jordan parts of `ρ_t` back.
pub fn psi_decompose(rho: &HermitianMatrix, eps: f64, p: &ModelParams) -> Result<PsiDecomposition> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::OutOfRange {
            what: "eps",
            value: eps,
            bound: "eps > 0".into(),
        });
    }
    let d = p.dim();
    if rho.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.dim(),
        });
    }
    let weight = |t: f64| {
        DMatrix::from_diagonal(&DVector::from_iterator(
            d,
            (0..d).map(|n| C64::new(1.0 + t * n as f64, 0.0)),
        ))
    };
    let budget = rho.trace_norm() + eps;
    let mut t = 1.0;
    for bisections in 0..MAX_BISECTIONS {
        let rho_t = rho.sandwich(&weight(t))?;
        if rho_t.trace_norm() <= budget {
            let (v, w) = rho_t.jordan_decompose();
            let back = fock::inverse_shifted_number(t, &p.trunc).into_matrix();
            return Ok(PsiDecomposition {
                positive: v.sandwich(&back)?,
                negative: w.sandwich(&back)?,
                t,
                bisections,
            });
        }
        t *= 0.5;
    }
    Err(Error::Bisection {
        iterations: MAX_BISECTIONS,
    })
}

/// Trace-one kernel vector of `L`, located by singular value decomposition
/// of each block; exactly one singular value may fall below the threshold.
pub fn stationary_state(l: &SuperOperator) -> Result<HermitianMatrix> {
    let d = l.dim();
    let dense_tol = 1e-8 * l.one_norm().max(1.0);
    let mut kernel: Vec<(Vec<usize>, DVector<C64>)> = Vec::new();
    let mut count = 0;
    for block in l.blocks() {
        let m = block.len();
        let mut b = DMatrix::<C64>::zeros(m, m);
        for (a, &r) in block.iter().enumerate() {
            for (c, &col) in block.iter().enumerate() {
                b[(a, c)] = l.entry(r, col);
            }
        }
        let svd = b.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s <= dense_tol {
                count += 1;
                kernel.push((block.clone(), v_t.row(k).adjoint()));
            }
        }
    }
    if count != 1 {
        return Err(Error::AmbiguousKernel { dimension: count });
    }
    let (block, mut x) = kernel.pop().expect("one kernel vector");
    if let Some(pi) = rate_block_kernel(l, &block) {
        x = pi;
    }
    let mut m = DMatrix::<C64>::zeros(d, d);
    for (a, &k) in block.iter().enumerate() {
        m[(k % d, k / d)] = x[a];
    }
    let tr: C64 = m.diagonal().iter().sum();
    if tr.norm() < f64::EPSILON {
        return Err(Error::Singular {
            label: l.label().to_string(),
            condition: f64::INFINITY,
        });
    }
    let m = m / tr;
    let rho = HermitianMatrix::with_tolerance((&m + m.adjoint()) * C64::new(0.5, 0.0), 1e-6)?;
    let residual = l.apply_matrix(rho.matrix())?;
    let residual = HermitianMatrix::with_tolerance(
        (&residual + residual.adjoint()) * C64::new(0.5, 0.0),
        f64::INFINITY,
    )?
    .trace_norm();
    if residual > 1e-8 {
        return Err(Error::Residual {
            label: l.label().to_string(),
            residual,
            bound: 1e-8,
        });
    }
    Ok(rho)
}

/// When `−L` restricted to `block` is a real Metzler matrix with zero
/// column sums (a rate matrix on populations), its kernel is computed by
/// Grassmann–Taksar–Heyman elimination, which avoids cancellation and keeps
/// every component to high relative accuracy.
fn rate_block_kernel(l: &SuperOperator, block: &[usize]) -> Option<DVector<C64>> {
    let m = block.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut scale = 0.0f64;
    for (i, &r) in block.iter().enumerate() {
        for (j, &c) in block.iter().enumerate() {
            let v = -l.entry(r, c);
            if v.im != 0.0 || (i != j && v.re < 0.0) {
                return None;
            }
            a[(i, j)] = v.re;
            scale = scale.max(v.re.abs());
        }
    }
    for j in 0..m {
        let col: f64 = a.column(j).sum();
        if col.abs() > 1e-12 * scale.max(1.0) {
            return None;
        }
    }
    // g[i][j]: rate from state i to state j
    let mut g = a.transpose();
    for n in (1..m).rev() {
        let s: f64 = (0..n).map(|j| g[(n, j)]).sum();
        if s <= 0.0 {
            return None;
        }
        for i in 0..n {
            g[(i, n)] /= s;
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g[(i, j)] += g[(i, n)] * g[(n, j)];
                }
            }
        }
    }
    let mut pi = vec![0.0f64; m];
    pi[0] = 1.0;
    for j in 1..m {
        pi[j] = (0..j).map(|i| pi[i] * g[(i, j)]).sum();
    }
    let total: f64 = pi.iter().sum();
    Some(DVector::from_iterator(
        m,
        pi.iter().map(|x| C64::new(x / total, 0.0)),
    ))
}
