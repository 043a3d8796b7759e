// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

use serde_json::json;

use super::{check_rng, state_json, CheckReport, Verdict, LOW_SUPPORT};
use crate::error::Result;
use crate::fock;
use crate::hermitian::{monotone_net_limit, HermitianMatrix};
use crate::sampling;
use crate::semigroup::{
    build_Q, build_generator, build_regularized_Q, evolve, psi_decompose, psi_map,
    stationary_state, FamilyKind, Generator, ModelParams, RegularizationFamily,
};

/// `Q_N ρ = P_N (Qρ) P_N` entrywise for every `N` on seeded Hermitian `ρ`.
pub fn check_cutoff_compression_identity(
    p: &ModelParams,
    samples: usize,
    seed: u64,
) -> CheckReport {
    let name = "cutoff_compression_identity";
    let tol = p.trunc.eq_tol;
    let rep = CheckReport::new(name, p, seed, tol);
    let run = || -> Result<(f64, usize)> {
        let d = p.dim();
        let q = build_Q(p)?;
        let mut rng = check_rng(seed, name);
        let states: Vec<_> = (0..samples)
            .map(|_| sampling::hermitian(&mut rng, d, d - 1))
            .collect();
        let images = states
            .iter()
            .map(|rho| q.apply(rho))
            .collect::<Result<Vec<_>>>()?;
        let mut worst = (0.0f64, 0);
        for n in 0..=d - 2 {
            let qn = build_regularized_Q(p, RegularizationFamily::NumberCutoff(n))?;
            let proj = fock::projector(n, &p.trunc)?.into_matrix();
            for (rho, image) in states.iter().zip(&images) {
                let v = qn.apply(rho)?.max_abs_diff(&image.sandwich(&proj)?);
                if v > worst.0 {
                    worst = (v, n);
                }
            }
        }
        Ok(worst)
    };
    match run() {
        Ok((worst, n)) => rep.finish(
            worst,
            if worst <= tol {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            },
            Some(json!({ "n": n })),
            format!(
                "N = 0..=D-2, {samples} Hermitian states; largest entrywise deviation at N = {n}"
            ),
        ),
        Err(e) => rep.failed(e),
    }
}

fn weak_schedule(kind: FamilyKind, dim: usize) -> Vec<RegularizationFamily> {
    match kind {
        FamilyKind::KatoScaling => [0.0, 0.5, 0.9, 0.99, 0.999, 1.0 - 1e-8]
            .into_iter()
            .map(RegularizationFamily::KatoScaling)
            .collect(),
        _ => (0..=dim - 2)
            .map(|n| kind.member(n as f64).expect("integral"))
            .collect(),
    }
}

/// Diagonal matrix elements `((K_α ρ) e_m, e_m)` approach `((Qρ) e_m, e_m)`
/// for `m <= D-2` along each family. The deviation at the largest index
/// is asserted; the full schedule is recorded.
pub fn check_weak_convergence(p: &ModelParams, seed: u64) -> CheckReport {
    let name = "weak_convergence";
    let tol = 1e-7;
    let rep = CheckReport::new(name, p, seed, tol);
    let run = || -> Result<(f64, serde_json::Value, usize)> {
        let d = p.dim();
        let mut rng = check_rng(seed, name);
        let rho = sampling::mixed_state(&mut rng, d, p.trunc.interior_top());
        let target = build_Q(p)?.apply(&rho)?;
        let diag = |m: &HermitianMatrix| -> Vec<f64> {
            (0..=d - 2).map(|k| m.matrix()[(k, k)].re).collect()
        };
        let want = diag(&target);
        let scale = want.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        let mut worst = 0.0f64;
        let mut schedules = serde_json::Map::new();
        let mut increases = 0;
        for kind in FamilyKind::ALL {
            let mut errors = Vec::new();
            for fam in weak_schedule(kind, d) {
                let got = diag(&build_regularized_Q(p, fam)?.apply(&rho)?);
                let err = got
                    .iter()
                    .zip(&want)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
                    / scale;
                errors.push(err);
            }
            increases += errors.windows(2).filter(|w| w[1] > w[0]).count();
            worst = worst.max(*errors.last().expect("non-empty schedule"));
            schedules.insert(kind.name().to_string(), json!(errors));
        }
        Ok((worst, serde_json::Value::Object(schedules), increases))
    };
    match run() {
        Ok((worst, schedules, increases)) => rep.finish(
            worst,
            if worst <= tol { Verdict::NoViolationFound } else { Verdict::ViolationFound },
            Some(schedules),
            format!("relative deviation at the largest index per family; the schedules increase at {increases} steps"),
        ),
        Err(e) => rep.failed(e),
    }
}

/// `T^{r_k}_t ρ` with `r_k = 1 − 2^{-k}` is PSD, nondecreasing and bounded
/// in trace, with increments whose trace norm equals their trace.
pub fn check_monotone_net(p: &ModelParams, t: f64, seed: u64) -> CheckReport {
    let name = "monotone_net";
    let tol = p.trunc.eq_tol;
    let rep = CheckReport::new(name, p, seed, tol);
    let run = || -> Result<(f64, String)> {
        let d = p.dim();
        let mut rng = check_rng(seed, name);
        let rho = sampling::mixed_state(&mut rng, d, LOW_SUPPORT.min(p.trunc.interior_top()));
        let sequence = (0..=12)
            .map(|k| {
                let fam = RegularizationFamily::KatoScaling(1.0 - 0.5f64.powi(k));
                build_generator(p, Generator::Regularized(fam))?
                    .scale(-1.0)
                    .exp_apply(t, &rho)
            })
            .collect::<Result<Vec<_>>>()?;
        let full = build_generator(p, Generator::Full)?
            .scale(-1.0)
            .exp_apply(t, &rho)?;
        match monotone_net_limit(&sequence, rho.trace(), p.trunc.psd_tol) {
            Ok((limit, record)) => Ok((
                record.norm_trace_gap,
                format!(
                    "t = {t}, 13 members: last increment {:.3e}, distance of the last member to the full evolution {:.3e}",
                    record.increment_norms.last().copied().unwrap_or(0.0),
                    limit.sub(&full)?.trace_norm()
                ),
            )),
            Err(e) => Ok((f64::INFINITY, format!("monotone sequence rejected: {e}"))),
        }
    };
    match run() {
        Ok((worst, notes)) => rep.finish(
            worst,
            if worst <= tol {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            },
            None,
            notes,
        ),
        Err(e) => rep.failed(e),
    }
}

/// `ρ = ρ₁ − ρ₂` with PSD parts and `Tr ρ₁ + Tr ρ₂ <= ‖ρ‖₁ + ε` for
/// `ρ = Ψ(ρ₀)`.
pub fn check_psi_decomposition(p: &ModelParams, samples: usize, seed: u64) -> CheckReport {
    let name = "psi_decomposition";
    let tol = p.trunc.eq_tol;
    let eps = 1e-3;
    let rep = CheckReport::new(name, p, seed, tol);
    let run = || -> Result<(f64, HermitianMatrix, usize)> {
        let psi = psi_map(p)?;
        let mut rng = check_rng(seed, name);
        let mut worst = 0.0f64;
        let mut witness = HermitianMatrix::zeros(p.dim());
        let mut max_bisections = 0;
        for _ in 0..samples {
            let rho = psi.apply(&sampling::hermitian(&mut rng, p.dim(), p.dim() - 1))?;
            let dec = psi_decompose(&rho, eps, p)?;
            max_bisections = max_bisections.max(dec.bisections);
            let v = [
                dec.positive.sub(&dec.negative)?.max_abs_diff(&rho),
                (dec.positive.trace() + dec.negative.trace() - rho.trace_norm() - eps).max(0.0),
                (-dec.positive.min_eigenvalue()).max(0.0),
                (-dec.negative.min_eigenvalue()).max(0.0),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            if v > worst {
                worst = v;
                witness = rho;
            }
        }
        Ok((worst, witness, max_bisections))
    };
    match run() {
        Ok((worst, witness, bisections)) => rep.finish(
            worst,
            if worst <= tol {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            },
            Some(state_json(&witness)),
            format!("eps = {eps}, {samples} states; at most {bisections} halvings of t"),
        ),
        Err(e) => rep.failed(e),
    }
}

/// Kernel of the full generator: diagonal, geometric populations with ratio
/// `σ₊/σ₋` up to level 20, and the long-time limit of the vacuum.
pub fn check_stationary_state(p: &ModelParams, seed: u64) -> CheckReport {
    let name = "stationary_state";
    let tol = 1e-6;
    let rep = CheckReport::new(name, p, seed, tol);
    if !p.is_markov_regime() {
        return rep.skipped("needs sigma+ < sigma-");
    }
    let run = || -> Result<(f64, String)> {
        let d = p.dim();
        let l = build_generator(p, Generator::Full)?;
        let rho = stationary_state(&l)?;
        let m = rho.matrix();
        let ratio = p.sigma_plus / p.sigma_minus;
        let top = 20.min(p.trunc.interior_top().saturating_sub(1));
        let ratio_err = (0..top)
            .map(|n| (m[(n + 1, n + 1)].re / m[(n, n)].re - ratio).abs())
            .fold(0.0, f64::max);
        let mut off = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    off = off.max(m[(i, j)].norm());
                }
            }
        }
        let late = evolve(&l, &HermitianMatrix::basis_projector(0, d), &[50.0])?;
        let relax = late.states[0].sub(&rho)?.trace_norm();
        Ok((
            ratio_err.max(off).max(relax),
            format!(
                "populations up to level {top}: ratio error {ratio_err:.3e} (expected {ratio}); largest coherence {off:.3e}; ||T_50 |e_0><e_0| - rho||_1 = {relax:.3e}"
            ),
        ))
    };
    match run() {
        Ok((worst, notes)) => rep.finish(
            worst,
            if worst <= tol {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            },
            None,
            notes,
        ),
        Err(e) => rep.failed(e),
    }
}
