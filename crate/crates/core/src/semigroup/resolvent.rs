// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::superop::{devectorise, vectorise, SuperOperator};
use crate::C64;

/// Convergence record of [`neumann_series_resolvent`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeumannRecord {
    pub terms: usize,
    pub converged: bool,
    /// `‖(λ+H)^{-1}(K(λ+H)^{-1})ⁿ u‖₁` for each term.
    pub increment_norms: Vec<f64>,
    /// Smallest eigenvalue of each term; non-negative for PSD `u`.
    pub increment_min_eigenvalues: Vec<f64>,
    pub last_increment: f64,
}

/// `Σₙ (λ+H)^{-1} (K (λ+H)^{-1})ⁿ u`, summed until an increment drops below
/// `tol` in trace norm or `max_terms` terms have been added. A sum that has
/// not converged is still returned, flagged in the record.
pub fn neumann_series_resolvent(
    h: &SuperOperator,
    k: &SuperOperator,
    lambda: f64,
    u: &HermitianMatrix,
    tol: f64,
    max_terms: usize,
) -> Result<(HermitianMatrix, NeumannRecord)> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::OutOfRange {
            what: "lambda",
            value: lambda,
            bound: "lambda > 0".into(),
        });
    }
    if max_terms == 0 {
        return Err(Error::OutOfRange {
            what: "max_terms",
            value: 0.0,
            bound: "max_terms >= 1".into(),
        });
    }
    let solver = h.shifted_solver(lambda, 1.0)?;
    let mut term = solver.solve(u)?;
    let mut sum = term.clone();
    let mut record = NeumannRecord {
        terms: 1,
        converged: false,
        increment_norms: Vec::new(),
        increment_min_eigenvalues: Vec::new(),
        last_increment: 0.0,
    };
    loop {
        let values = term.eigenvalues();
        let norm: f64 = values.iter().map(|x| x.abs()).sum();
        record.increment_norms.push(norm);
        record
            .increment_min_eigenvalues
            .push(values.first().copied().unwrap_or(0.0));
        record.last_increment = norm;
        if norm < tol {
            record.converged = true;
            break;
        }
        if record.terms >= max_terms {
            break;
        }
        term = solver.solve(&k.apply(&term)?)?;
        sum = sum.add(&term)?;
        record.terms += 1;
    }
    Ok((sum, record))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `(λ + L)^{-1} u = ∫₀^∞ e^{-λt} e^{-tL} u dt` by composite Gauss–Legendre
/// quadrature, truncated where `e^{-λt}` falls below `1e-16`. Each block of
/// `L` touched by `u` is integrated separately, with panel width `2 / (λ + ‖B‖₁)`
/// and the state carried across panels by `e^{-hB}`.
pub fn laplace_resolvent(
    l: &SuperOperator,
    lambda: f64,
    u: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::OutOfRange {
            what: "lambda",
            value: lambda,
            bound: "lambda > 0".into(),
        });
    }
    if u.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: u.dim(),
        });
    }
    let horizon = 16.0 * std::f64::consts::LN_10 / lambda;
    let rule = gauss_legendre(8);
    let x = vectorise(u.matrix());
    let mut y = DVector::<C64>::zeros(x.len());
    for (block, b) in l.dense_blocks() {
        let xb = DVector::from_iterator(block.len(), block.iter().map(|&k| x[k]));
        if xb.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            continue;
        }
        let norm = b
            .column_iter()
            .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let h = (2.0 / (lambda + norm)).min(horizon);
        let panels = (horizon / h).ceil() as usize;
        let minus_b = -b;
        let exp_at = |tau: f64| -> Result<DMatrix<C64>> {
            let e = (&minus_b * C64::new(tau, 0.0)).exp();
            if e.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::Overflow {
                    label: l.label().to_string(),
                    scaled_norm: tau * norm,
                });
            }
            Ok(e)
        };
        let step = exp_at(h)?;
        let nodes = rule
            .iter()
            .map(|&(x, w)| {
                Ok((
                    0.5 * h * (1.0 + x),
                    0.5 * h * w,
                    exp_at(0.5 * h * (1.0 + x))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut state = xb;
        let mut acc = DVector::<C64>::zeros(block.len());
        for j in 0..panels {
            let a = j as f64 * h;
            for (offset, weight, map) in &nodes {
                let w = weight * (-lambda * (a + offset)).exp();
                acc += map * &state * C64::new(w, 0.0);
            }
            state = &step * state;
        }
        for (i, &k) in block.iter().enumerate() {
            y[k] = acc[i];
        }
    }
    HermitianMatrix::with_tolerance(devectorise(&y, l.dim()), 1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::TruncationConfig;
    use crate::sampling;
    use crate::semigroup::{build_H, build_Q, build_generator, Generator, ModelParams};

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(8);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-14);
        let x14: f64 = rule.iter().map(|(x, w)| w * x.powi(14)).sum();
        assert!((x14 - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn zero_perturbation_is_single_term() {
        let p = ModelParams::new(1.0, 1.0, 0.25, TruncationConfig::new(6, 2).unwrap()).unwrap();
        let h = build_H(&p).unwrap();
        let u = HermitianMatrix::basis_projector(2, 6);
        let (sum, rec) =
            neumann_series_resolvent(&h, &SuperOperator::zero(6), 1.0, &u, 1e-12, 10).unwrap();
        assert!(rec.converged);
        assert_eq!(rec.terms, 2);
        assert!(sum.max_abs_diff(&h.resolvent_apply(1.0, &u).unwrap()) < 1e-15);
    }

    #[test]
    fn scalar_geometric_series() {
        // On D = 1 every Hermiticity-preserving map is a real scalar.
        let scalar = |x: f64| {
            SuperOperator::from_dense(
                1,
                &DMatrix::from_element(1, 1, crate::C64::new(x, 0.0)),
                "s",
            )
            .unwrap()
        };
        let (hh, kk, lambda) = (2.0, 1.5, 0.5);
        let u = HermitianMatrix::from_real_diagonal(&[1.0]);
        let (sum, rec) =
            neumann_series_resolvent(&scalar(hh), &scalar(kk), lambda, &u, 1e-14, 1000).unwrap();
        assert!(rec.converged);
        assert!((sum.trace() - 1.0 / (lambda + hh - kk)).abs() < 1e-12);
    }

    #[test]
    fn boson_series_matches_direct_solve() {
        let p = ModelParams::new(1.0, 1.0, 0.25, TruncationConfig::new(24, 4).unwrap()).unwrap();
        let h = build_H(&p).unwrap();
        let q = build_Q(&p).unwrap();
        let u = HermitianMatrix::basis_projector(2, 24);
        let (sum, rec) = neumann_series_resolvent(&h, &q, 1.0, &u, 1e-12, 500).unwrap();
        assert!(rec.converged);
        let direct = h.sub(&q).unwrap().resolvent_apply(1.0, &u).unwrap();
        assert!(sum.sub(&direct).unwrap().trace_norm() < 1e-8);
        assert!(rec.increment_min_eigenvalues.iter().all(|&m| m >= -1e-12));
        assert!(rec.increment_norms.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn max_terms_flags_non_convergence() {
        let p = ModelParams::new(1.0, 1.0, 0.25, TruncationConfig::new(10, 2).unwrap()).unwrap();
        let (h, q) = (build_H(&p).unwrap(), build_Q(&p).unwrap());
        let u = HermitianMatrix::basis_projector(3, 10);
        let (_, rec) = neumann_series_resolvent(&h, &q, 1.0, &u, 1e-14, 3).unwrap();
        assert!(!rec.converged);
        assert_eq!(rec.terms, 3);
        assert!(rec.last_increment > 1e-14);
    }

    #[test]
    fn laplace_matches_direct_solve() {
        let p = ModelParams::new(1.0, 1.0, 0.25, TruncationConfig::new(8, 2).unwrap()).unwrap();
        let l = build_generator(&p, Generator::Full).unwrap();
        let u = sampling::mixed_state(&mut sampling::rng(2), 8, 5);
        for lambda in [0.5, 1.0, 2.0] {
            let quad = laplace_resolvent(&l, lambda, &u).unwrap();
            let direct = l.resolvent_apply(lambda, &u).unwrap();
            assert!(quad.sub(&direct).unwrap().trace_norm() < 1e-9);
        }
    }
}
