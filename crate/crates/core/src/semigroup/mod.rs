// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

//! The damped boson and its regularised generators.
//!
//! With `h = E n̂` and `h_σ = i h + ½(σ₋ b*b + σ₊ b b*)` the model consists of
//!
//! - `H ρ = h_σ ρ + ρ h_σ*`, the generator of the sub-semigroup `S_t = e^{-tH}`,
//! - `Q ρ = σ₋ b ρ b* + σ₊ b* ρ b`, the jump part,
//! - `L = H − K` for `K = Q` or a regularisation `K_α ≤ Q`,
//!
//! and `T_t = e^{-tL}`. Everything lives on `span{e_0..e_{D-1}}`, where
//! `b b*` loses its top diagonal entry; `h_σ` uses the same truncated
//! `b b*`, which keeps `Tr(Hρ) = Tr(Qρ)` exact for every `ρ`.

mod evolution;
mod psi;
mod resolvent;

pub use evolution::{evolve, regularization_sweep, Diagnostics, EvolutionRecord, SweepRow};
pub use psi::{psi_decompose, psi_map, stationary_state, PsiDecomposition};
pub use resolvent::{laplace_resolvent, neumann_series_resolvent, NeumannRecord};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, FockOperator, TruncationConfig};
use crate::superop::SuperOperator;
use crate::C64;

/// Physical parameters plus the truncation they are realised on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub energy: f64,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    pub trunc: TruncationConfig,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            energy: 1.0,
            sigma_minus: 1.0,
            sigma_plus: 0.25,
            trunc: TruncationConfig::default(),
        }
    }
}

impl ModelParams {
    pub fn new(
        energy: f64,
        sigma_minus: f64,
        sigma_plus: f64,
        trunc: TruncationConfig,
    ) -> Result<Self> {
        let p = Self {
            energy,
            sigma_minus,
            sigma_plus,
            trunc,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.trunc.validate()?;
        if !(self.energy.is_finite() && self.energy > 0.0) {
            return Err(Error::OutOfRange {
                what: "energy",
                value: self.energy,
                bound: "E > 0".into(),
            });
        }
        for (what, v) in [
            ("sigma_minus", self.sigma_minus),
            ("sigma_plus", self.sigma_plus),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::OutOfRange {
                    what,
                    value: v,
                    bound: "sigma >= 0".into(),
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.trunc.dim
    }

    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        self.trunc.dim = dim;
        self.validate()?;
        Ok(self)
    }

    pub fn with_sigmas(mut self, sigma_minus: f64, sigma_plus: f64) -> Result<Self> {
        self.sigma_minus = sigma_minus;
        self.sigma_plus = sigma_plus;
        self.validate()?;
        Ok(self)
    }

    /// `σ₊ < σ₋`, where the limit semigroup is trace preserving.
    pub fn is_markov_regime(&self) -> bool {
        self.sigma_plus < self.sigma_minus
    }

    pub fn is_isolated(&self) -> bool {
        self.sigma_minus == 0.0 && self.sigma_plus == 0.0
    }
}

/// The three ways of approximating `Q` from below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index")]
pub enum RegularizationFamily {
    /// `σ₋ P_N b ρ b* P_N + σ₊ P_N b* ρ b P_N`, i.e. `P_N (Qρ) P_N`.
    NumberCutoff(usize),
    /// `Q(P_N ρ P_N)`.
    CompressFirst(usize),
    /// `r Q` with `0 <= r < 1`.
    KatoScaling(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    NumberCutoff,
    CompressFirst,
    KatoScaling,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 3] = [
        FamilyKind::NumberCutoff,
        FamilyKind::CompressFirst,
        FamilyKind::KatoScaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::NumberCutoff => "number_cutoff",
            FamilyKind::CompressFirst => "compress_first",
            FamilyKind::KatoScaling => "kato_scaling",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Family member at `index`; cut-off kinds need an integral index.
    pub fn member(self, index: f64) -> Result<RegularizationFamily> {
        let integral = || -> Result<usize> {
            if index >= 0.0 && index.fract() == 0.0 && index.is_finite() {
                Ok(index as usize)
            } else {
                Err(Error::OutOfRange {
                    what: "N",
                    value: index,
                    bound: "non-negative integer".into(),
                })
            }
        };
        Ok(match self {
            FamilyKind::NumberCutoff => RegularizationFamily::NumberCutoff(integral()?),
            FamilyKind::CompressFirst => RegularizationFamily::CompressFirst(integral()?),
            FamilyKind::KatoScaling => RegularizationFamily::KatoScaling(index),
        })
    }

    /// The largest admissible member, closest to `Q`.
    pub fn converged(self, dim: usize) -> RegularizationFamily {
        match self {
            FamilyKind::NumberCutoff => RegularizationFamily::NumberCutoff(dim - 2),
            FamilyKind::CompressFirst => RegularizationFamily::CompressFirst(dim - 2),
            FamilyKind::KatoScaling => RegularizationFamily::KatoScaling(1.0 - 1e-8),
        }
    }
}

impl RegularizationFamily {
    pub fn kind(&self) -> FamilyKind {
        match self {
            RegularizationFamily::NumberCutoff(_) => FamilyKind::NumberCutoff,
            RegularizationFamily::CompressFirst(_) => FamilyKind::CompressFirst,
            RegularizationFamily::KatoScaling(_) => FamilyKind::KatoScaling,
        }
    }

    pub fn index(&self) -> f64 {
        match *self {
            RegularizationFamily::NumberCutoff(n) | RegularizationFamily::CompressFirst(n) => {
                n as f64
            }
            RegularizationFamily::KatoScaling(r) => r,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            RegularizationFamily::NumberCutoff(n) | RegularizationFamily::CompressFirst(n) => {
                if n + 2 > dim {
                    return Err(Error::OutOfRange {
                        what: "N",
                        value: n as f64,
                        bound: format!("0 <= N <= D - 2 = {}", dim.saturating_sub(2)),
                    });
                }
            }
            RegularizationFamily::KatoScaling(r) => {
                if !(0.0..1.0).contains(&r) {
                    return Err(Error::OutOfRange {
                        what: "r",
                        value: r,
                        bound: "0 <= r < 1".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("{}({})", self.kind().name(), self.index())
    }
}

/// Which generator to exponentiate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Generator {
    /// `H` alone: the sub-semigroup `S_t`.
    SubSemigroup,
    /// `H − Q`.
    Full,
    /// `H − K_α`.
    Regularized(RegularizationFamily),
}

#[cfg(test)]
fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `h_σ = i E n̂ + ½(σ₋ b*b + σ₊ b b*)`, diagonal with entries
/// `iEn + ½(σ₋ n + σ₊ ν_n)`, `ν_n = n + 1` below the top level and `ν_{D-1} = 0`.
pub fn build_h_sigma(p: &ModelParams) -> Result<FockOperator> {
    p.validate()?;
    let d = p.dim();
    let diag = (0..d).map(|n| {
        let nu = if n + 1 < d { (n + 1) as f64 } else { 0.0 };
        C64::new(
            0.5 * (p.sigma_minus * n as f64 + p.sigma_plus * nu),
            p.energy * n as f64,
        )
    });
    let m = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, diag));
    FockOperator::new(m, "h_sigma")
}

#[allow(non_snake_case)]
pub fn build_H(p: &ModelParams) -> Result<SuperOperator> {
    Ok(SuperOperator::from_left_right(&build_h_sigma(p)?)?.with_label("H"))
}

/// `(Q₋, Q₊)` with `Q₋ρ = σ₋ b ρ b*`, `Q₊ρ = σ₊ b* ρ b`.
#[allow(non_snake_case)]
pub fn build_Q_pm(p: &ModelParams) -> Result<(SuperOperator, SuperOperator)> {
    p.validate()?;
    let b = fock::annihilation(&p.trunc);
    let bd = fock::creation(&p.trunc);
    let q_minus = SuperOperator::from_sandwich_sum(&[(p.sigma_minus, &b)])?.with_label("Q-");
    let q_plus = SuperOperator::from_sandwich_sum(&[(p.sigma_plus, &bd)])?.with_label("Q+");
    Ok((q_minus, q_plus))
}

#[allow(non_snake_case)]
pub fn build_Q(p: &ModelParams) -> Result<SuperOperator> {
    p.validate()?;
    let b = fock::annihilation(&p.trunc);
    let bd = fock::creation(&p.trunc);
    Ok(
        SuperOperator::from_sandwich_sum(&[(p.sigma_minus, &b), (p.sigma_plus, &bd)])?
            .with_label("Q"),
    )
}

/// Constants of the tilted jump operator `Q̃ = e^{-2s} Q₋ + e^{2s} Q₊`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltConstants {
    pub s: f64,
    /// `(e^{-2s} σ₋ + e^{2s} σ₊) / (σ₋ + σ₊)`.
    pub r: f64,
    /// `2 σ₋ σ₊ sinh(2s) / (σ₋ + σ₊)`.
    pub c: f64,
    /// `σ₊ e^{2s} < σ₋`.
    pub in_regime: bool,
}

impl TiltConstants {
    pub fn new(p: &ModelParams, s: f64) -> Self {
        let total = p.sigma_minus + p.sigma_plus;
        let (r, c) = if total > 0.0 {
            (
                ((-2.0 * s).exp() * p.sigma_minus + (2.0 * s).exp() * p.sigma_plus) / total,
                2.0 * p.sigma_minus * p.sigma_plus * (2.0 * s).sinh() / total,
            )
        } else {
            (1.0, 0.0)
        };
        Self {
            s,
            r,
            c,
            in_regime: p.sigma_plus * (2.0 * s).exp() < p.sigma_minus,
        }
    }
}

#[allow(non_snake_case)]
pub fn build_Q_tilde(p: &ModelParams, s: f64) -> Result<(SuperOperator, TiltConstants)> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::OutOfRange {
            what: "s",
            value: s,
            bound: "s >= 0".into(),
        });
    }
    let (qm, qp) = build_Q_pm(p)?;
    let q = qm.scale((-2.0 * s).exp()).add(&qp.scale((2.0 * s).exp()))?;
    Ok((q.with_label(format!("Q~({s})")), TiltConstants::new(p, s)))
}

/// `R ρ = e^{-s n̂} ρ e^{-s n̂}`.
pub fn build_tilt(p: &ModelParams, s: f64) -> Result<SuperOperator> {
    let t = fock::exp_tilt(s, &p.trunc)?;
    Ok(SuperOperator::from_sandwich_sum(&[(1.0, &t)])?.with_label(format!("R({s})")))
}

#[allow(non_snake_case)]
pub fn build_regularized_Q(p: &ModelParams, fam: RegularizationFamily) -> Result<SuperOperator> {
    p.validate()?;
    fam.validate(p.dim())?;
    let b = fock::annihilation(&p.trunc);
    let bd = fock::creation(&p.trunc);
    let op = match fam {
        RegularizationFamily::NumberCutoff(n) => {
            let pn = fock::projector(n, &p.trunc)?;
            SuperOperator::from_sandwich_sum(&[
                (p.sigma_minus, &pn.compose(&b)?),
                (p.sigma_plus, &pn.compose(&bd)?),
            ])?
        }
        RegularizationFamily::CompressFirst(n) => {
            let pn = fock::projector(n, &p.trunc)?;
            SuperOperator::from_sandwich_sum(&[
                (p.sigma_minus, &b.compose(&pn)?),
                (p.sigma_plus, &bd.compose(&pn)?),
            ])?
        }
        RegularizationFamily::KatoScaling(r) => build_Q(p)?.scale(r),
    };
    Ok(op.with_label(format!("K[{}]", fam.label())))
}

/// The generator `L` with `T_t = e^{-tL}`.
pub fn build_generator(p: &ModelParams, g: Generator) -> Result<SuperOperator> {
    let h = build_H(p)?;
    Ok(match g {
        Generator::SubSemigroup => h,
        Generator::Full => h.sub(&build_Q(p)?)?.with_label("L"),
        Generator::Regularized(fam) => h
            .sub(&build_regularized_Q(p, fam)?)?
            .with_label(format!("L[{}]", fam.label())),
    })
}
