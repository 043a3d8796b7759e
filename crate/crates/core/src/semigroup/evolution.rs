// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{build_generator, FamilyKind, Generator, ModelParams};
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::superop::SuperOperator;

/// Per-time diagnostics of an evolved state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub trace: f64,
    pub trace_norm: f64,
    pub min_eigenvalue: f64,
    pub purity: f64,
    pub mean_occupation: f64,
}

impl Diagnostics {
    pub fn of(t: f64, rho: &HermitianMatrix) -> Self {
        let values = rho.eigenvalues();
        let m = rho.matrix();
        Self {
            t,
            trace: rho.trace(),
            trace_norm: values.iter().map(|x| x.abs()).sum(),
            min_eigenvalue: values.first().copied().unwrap_or(0.0),
            purity: rho.purity(),
            mean_occupation: (0..rho.dim()).map(|n| n as f64 * m[(n, n)].re).sum(),
        }
    }
}

/// States `T_t ρ0` on a time grid.
#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub states: Vec<HermitianMatrix>,
}

impl EvolutionRecord {
    /// Diagnostics, recomputed from the stored states on every call.
    pub fn diagnostics(&self) -> Vec<Diagnostics> {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, rho)| Diagnostics::of(t, rho))
            .collect()
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidConfig("empty time grid".into()));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidConfig(
            "time grid must be finite and non-negative".into(),
        ));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `T_t ρ0 = e^{-tL} ρ0` for each `t` in the grid.
pub fn evolve(
    l: &SuperOperator,
    rho0: &HermitianMatrix,
    t_grid: &[f64],
) -> Result<EvolutionRecord> {
    check_grid(t_grid)?;
    let minus_l = l.scale(-1.0);
    let states = t_grid
        .iter()
        .map(|&t| {
            if t == 0.0 {
                Ok(rho0.clone())
            } else {
                minus_l.exp_apply(t, rho0)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolutionRecord {
        times: t_grid.to_vec(),
        states,
    })
}

/// One row of a regularisation sweep: distances of `T^α` and of
/// `(λ + L_α)^{-1}` (at `λ = 1`) from their unregularised counterparts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: f64,
    /// `‖T_t ρ0 − T^α_t ρ0‖₁`.
    pub evolution_error: f64,
    /// `min-eig(T_t ρ0 − T^α_t ρ0)`.
    pub evolution_margin: f64,
    pub resolvent_error: f64,
    pub resolvent_margin: f64,
}

pub fn regularization_sweep(
    p: &ModelParams,
    kind: FamilyKind,
    indices: &[f64],
    t: f64,
    rho0: &HermitianMatrix,
) -> Result<Vec<SweepRow>> {
    if indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "sweep indices must be increasing".into(),
        ));
    }
    let full = build_generator(p, Generator::Full)?;
    let target = full.scale(-1.0).exp_apply(t, rho0)?;
    let target_res = full.resolvent_apply(1.0, rho0)?;
    indices
        .iter()
        .map(|&index| {
            let fam = kind.member(index)?;
            let l = build_generator(p, Generator::Regularized(fam))?;
            let diff = target.sub(&l.scale(-1.0).exp_apply(t, rho0)?)?;
            let diff_res = target_res.sub(&l.resolvent_apply(1.0, rho0)?)?;
            Ok(SweepRow {
                index,
                evolution_error: diff.trace_norm(),
                evolution_margin: diff.min_eigenvalue(),
                resolvent_error: diff_res.trace_norm(),
                resolvent_margin: diff_res.min_eigenvalue(),
            })
        })
        .collect()
}
