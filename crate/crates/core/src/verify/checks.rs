// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{check_rng, state_json, vector_json, CheckReport, Verdict, LOW_SUPPORT};
use crate::error::{Error, Result};
use crate::fock;
use crate::hermitian::HermitianMatrix;
use crate::sampling::{self, SeededRng};
use crate::semigroup::{
    build_H, build_Q, build_Q_pm, build_Q_tilde, build_generator, build_regularized_Q, build_tilt,
    laplace_resolvent, neumann_series_resolvent, regularization_sweep, FamilyKind, Generator,
    ModelParams, RegularizationFamily, TiltConstants,
};
use crate::superop::{induced_trace_norm_probe, positivity_probe_with, SuperOperator};
use crate::C64;

fn interior_psd(
    rng: &mut SeededRng,
    p: &ModelParams,
    top: usize,
    n: usize,
) -> Vec<HermitianMatrix> {
    (0..n)
        .map(|k| sampling::psd_state(rng, p.dim(), top, k))
        .collect()
}

fn interior_hermitian(
    rng: &mut SeededRng,
    p: &ModelParams,
    top: usize,
    n: usize,
) -> Vec<HermitianMatrix> {
    (0..n)
        .map(|_| sampling::hermitian(rng, p.dim(), top))
        .collect()
}

/// `[a, b, ...]` in scientific notation.
fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn low_top(p: &ModelParams) -> usize {
    LOW_SUPPORT.min(p.trunc.interior_top())
}

/// Amount by which `x` fails to be PSD, relative to `max(1, scale)`.
fn cone_violation(x: &HermitianMatrix, scale: f64) -> f64 {
    (-x.min_eigenvalue()).max(0.0) / scale.max(1.0)
}

/// `|Tr(Qρ) − Tr(Hρ)|` on interior states, and `Tr(K_α ρ) <= Tr(Hρ)` for
/// regularised jump maps.
pub fn check_trace_inequality(p: &ModelParams, samples: usize, seed: u64) -> CheckReport {
    let name = "trace_inequality";
    let rep = CheckReport::new(name, p, seed, 1e-9);
    let run = || -> Result<(f64, HermitianMatrix, String)> {
        let d = p.dim();
        let h = build_H(p)?;
        let q = build_Q(p)?;
        let mid = (d - 2) / 2;
        let fams = [
            RegularizationFamily::NumberCutoff(0),
            RegularizationFamily::NumberCutoff(mid),
            RegularizationFamily::NumberCutoff(d - 2),
            RegularizationFamily::CompressFirst(0),
            RegularizationFamily::CompressFirst(mid),
            RegularizationFamily::CompressFirst(d - 2),
            RegularizationFamily::KatoScaling(0.0),
            RegularizationFamily::KatoScaling(0.5),
            RegularizationFamily::KatoScaling(0.99),
        ];
        let ks = fams
            .iter()
            .map(|&f| build_regularized_Q(p, f))
            .collect::<Result<Vec<_>>>()?;
        let mut rng = check_rng(seed, name);
        let mut states = vec![
            HermitianMatrix::basis_projector(0, d),
            HermitianMatrix::basis_projector(1.min(d - 1), d),
        ];
        states.extend(interior_psd(&mut rng, p, p.trunc.interior_top(), samples));
        let mut worst = 0.0f64;
        let mut witness = states[0].clone();
        let mut worst_identity = 0.0f64;
        for rho in &states {
            let th = h.apply(rho)?.trace();
            let tq = q.apply(rho)?.trace();
            let identity = (tq - th).abs() / (1.0 + th.abs());
            worst_identity = worst_identity.max(identity);
            let mut v = identity;
            for k in &ks {
                v = v.max((k.apply(rho)?.trace() - th).max(0.0));
            }
            if v > worst {
                worst = v;
                witness = rho.clone();
            }
        }
        let notes = format!(
            "{} PSD states; worst |Tr(Q rho) - Tr(H rho)| / (1 + Tr(H rho)) = {:.3e}; {} regularised maps checked for Tr(K rho) <= Tr(H rho)",
            states.len(),
            worst_identity,
            ks.len()
        );
        Ok((worst, witness, notes))
    };
    match run() {
        Ok((worst, witness, notes)) => {
            let verdict = if worst <= 1e-9 {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            };
            rep.finish(worst, verdict, Some(state_json(&witness)), notes)
        }
        Err(e) => rep.failed(e),
    }
}

/// `‖Qρ‖₁ <= ‖Hρ‖₁` on interior Hermitian `ρ`.
pub fn check_relative_bound(p: &ModelParams, samples: usize, seed: u64) -> CheckReport {
    let name = "relative_bound";
    let rep = CheckReport::new(name, p, seed, 1e-8);
    let run = || -> Result<(f64, HermitianMatrix, String)> {
        let d = p.dim();
        let h = build_H(p)?;
        let q = build_Q(p)?;
        let mut rng = check_rng(seed, name);
        let mut states = vec![
            HermitianMatrix::zeros(d),
            HermitianMatrix::basis_projector(1, d),
        ];
        if d > 3 {
            let mut m = nalgebra::DMatrix::<C64>::zeros(d, d);
            m[(1, 3)] = C64::new(1.0, 0.0);
            m[(3, 1)] = C64::new(1.0, 0.0);
            states.push(HermitianMatrix::new(m)?);
        }
        states.extend(interior_hermitian(
            &mut rng,
            p,
            p.trunc.interior_top(),
            samples,
        ));
        let mut worst = 0.0f64;
        let mut witness = states[0].clone();
        let mut tightest = f64::INFINITY;
        for rho in &states {
            let nh = h.apply(rho)?.trace_norm();
            let nq = q.apply(rho)?.trace_norm();
            let v = (nq - nh).max(0.0) / (1.0 + nh);
            if nh > 0.0 {
                tightest = tightest.min(nh - nq);
            }
            if v > worst {
                worst = v;
                witness = rho.clone();
            }
        }
        Ok((
            worst,
            witness,
            format!(
                "{} Hermitian states; smallest gap ||H rho||_1 - ||Q rho||_1 = {:.3e}",
                states.len(),
                tightest
            ),
        ))
    };
    match run() {
        Ok((worst, witness, notes)) => {
            let verdict = if worst <= 1e-8 {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            };
            rep.finish(worst, verdict, Some(state_json(&witness)), notes)
        }
        Err(e) => rep.failed(e),
    }
}

/// One point of the coherence scan `((Hρ)φ, φ)` with `ρ = |ψ⟩⟨ψ|`,
/// `ψ = e_1 + iλ e_k`, `φ = e_1 + e_k` and `E = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceRow {
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    pub k: usize,
    pub lambda: f64,
    pub closed_form: f64,
    pub matrix_value: f64,
    pub negative: bool,
}

pub fn coherence_closed_form(sigma_minus: f64, sigma_plus: f64, lambda: f64, k: usize) -> f64 {
    let k = k as f64;
    -2.0 * (k - 1.0) * lambda
        + (sigma_minus + sigma_plus) * (1.0 + k * lambda * lambda)
        + sigma_plus * (1.0 + lambda * lambda)
}

/// Direct evaluation of `((Hρ)φ, φ)` from the assembled generator (`E = 1`).
pub fn coherence_matrix_value(p: &ModelParams, lambda: f64, k: usize) -> Result<f64> {
    let d = p.dim();
    if k < 2 || k + 2 > d {
        return Err(Error::OutOfRange {
            what: "k",
            value: k as f64,
            bound: format!("2 <= k <= D - 2 = {}", d.saturating_sub(2)),
        });
    }
    let unit = ModelParams { energy: 1.0, ..*p };
    let h = build_H(&unit)?;
    let mut psi = fock::basis_vector(1, d);
    psi[k] = C64::new(0.0, lambda);
    let mut phi = fock::basis_vector(1, d);
    phi[k] = C64::new(1.0, 0.0);
    let out = h.apply(&HermitianMatrix::outer(&psi))?;
    Ok((phi.adjoint() * out.matrix() * &phi)[(0, 0)].re)
}

pub fn coherence_k_scan() -> Vec<usize> {
    (2..=20).collect()
}

pub fn coherence_lambda_scan() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// Evaluates the coherence scan for each `(σ₋, σ₊)` pair, skipping `k`
/// outside `2..=D-2`.
pub fn coherence_scan(
    p: &ModelParams,
    sigmas: &[(f64, f64)],
    ks: &[usize],
    lambdas: &[f64],
) -> Result<Vec<CoherenceRow>> {
    let mut rows = Vec::new();
    for &(sm, sp) in sigmas {
        let q = p.with_sigmas(sm, sp)?;
        for &k in ks.iter().filter(|&&k| k >= 2 && k + 2 <= p.dim()) {
            for &lambda in lambdas {
                let closed_form = coherence_closed_form(sm, sp, lambda, k);
                let matrix_value = coherence_matrix_value(&q, lambda, k)?;
                rows.push(CoherenceRow {
                    sigma_minus: sm,
                    sigma_plus: sp,
                    k,
                    lambda,
                    closed_form,
                    matrix_value,
                    negative: matrix_value < 0.0,
                });
            }
        }
    }
    Ok(rows)
}

/// Searches for a pure state on which `H` produces a negative diagonal
/// value, comparing the closed form with the matrix evaluation.
pub fn check_positivity_counterexample(
    p: &ModelParams,
    ks: &[usize],
    lambdas: &[f64],
    seed: u64,
) -> CheckReport {
    let name = "sub_generator_not_positivity_preserving";
    let rep = CheckReport::new(name, p, seed, 1e-9);
    let rows = match coherence_scan(p, &[(p.sigma_minus, p.sigma_plus)], ks, lambdas) {
        Ok(rows) => rows,
        Err(e) => return rep.failed(e),
    };
    if rows.is_empty() {
        return rep.skipped("no k in 2..=D-2 within the scan");
    }
    let disagreement = rows
        .iter()
        .map(|r| (r.closed_form - r.matrix_value).abs())
        .fold(0.0, f64::max);
    let most_negative = rows
        .iter()
        .min_by(|a, b| a.matrix_value.total_cmp(&b.matrix_value))
        .copied()
        .expect("non-empty");
    let found = most_negative.matrix_value < 0.0;
    let worst = if found {
        disagreement
    } else {
        disagreement.max(most_negative.matrix_value)
    };
    let in_regime = rows
        .iter()
        .filter(|r| r.negative && r.lambda * (r.sigma_minus + r.sigma_plus) < 1.0)
        .count();
    let notes = format!(
        "{} scan points (E = 1); max |closed form - matrix| = {:.3e}; {} negative values, {} of them with lambda (sigma- + sigma+) < 1",
        rows.len(),
        disagreement,
        rows.iter().filter(|r| r.negative).count(),
        in_regime
    );
    let witness = json!({
        "k": most_negative.k,
        "lambda": most_negative.lambda,
        "closed_form": most_negative.closed_form,
        "matrix_value": most_negative.matrix_value,
    });
    let verdict = if found {
        Verdict::ViolationFound
    } else {
        Verdict::NoViolationFound
    };
    rep.finish(worst, verdict, Some(witness), notes)
}

/// `Tr(S_t |e_1⟩⟨e_1|) = e^{-(σ₋ + 2σ₊)t}` on 20 points of `[0, 2]`.
pub fn check_sub_semigroup_trace_decay(p: &ModelParams, seed: u64) -> CheckReport {
    let name = "sub_semigroup_trace_decay";
    let rep = CheckReport::new(name, p, seed, 1e-10);
    if p.dim() < 3 {
        return rep.skipped("needs D >= 3");
    }
    let run = || -> Result<(f64, f64)> {
        let h = build_generator(p, Generator::SubSemigroup)?;
        let rate = p.sigma_minus + 2.0 * p.sigma_plus;
        let grid: Vec<f64> = (0..20).map(|k| 2.0 * k as f64 / 19.0).collect();
        let rec =
            crate::semigroup::evolve(&h, &HermitianMatrix::basis_projector(1, p.dim()), &grid)?;
        let mut worst = (0.0, 0.0);
        for d in rec.diagnostics() {
            let err = (d.trace - (-rate * d.t).exp()).abs();
            if err > worst.0 {
                worst = (err, d.t);
            }
        }
        Ok(worst)
    };
    match run() {
        Ok((worst, t)) => rep.finish(
            worst,
            if worst <= 1e-10 {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            },
            Some(json!({ "t": t })),
            "20 grid points on [0, 2], rho = |e_1><e_1|".into(),
        ),
        Err(e) => rep.failed(e),
    }
}

pub fn default_domination_families(p: &ModelParams) -> Vec<RegularizationFamily> {
    let mut fams: Vec<RegularizationFamily> = [0.0, 0.25, 0.5, 0.75]
        .into_iter()
        .map(RegularizationFamily::KatoScaling)
        .collect();
    for n in [0, 4, 8].into_iter().filter(|&n| n + 2 <= p.dim()) {
        fams.push(RegularizationFamily::NumberCutoff(n));
        fams.push(RegularizationFamily::CompressFirst(n));
    }
    fams
}

/// `S_t <= T^α_t` and `(λ + H)^{-1} <= (λ + L_α)^{-1}` on PSD inputs.
pub fn check_domination_equivalence(
    p: &ModelParams,
    fams: &[RegularizationFamily],
    t_grid: &[f64],
    lambda_grid: &[f64],
    samples: usize,
    seed: u64,
) -> CheckReport {
    let name = "sub_semigroup_domination";
    let tol = p.trunc.psd_tol;
    let rep = CheckReport::new(name, p, seed, tol);
    let run = || -> Result<(f64, serde_json::Value, String)> {
        let h = build_H(p)?;
        let mut rng = check_rng(seed, name);
        let states = interior_psd(&mut rng, p, p.trunc.interior_top(), samples);
        let sub: Vec<Vec<HermitianMatrix>> = t_grid
            .iter()
            .map(|&t| h.scale(-1.0).exp_apply_many(t, &states))
            .collect::<Result<_>>()?;
        let sub_res: Vec<SuperOperator> = lambda_grid
            .iter()
            .map(|&l| h.resolvent_operator(l))
            .collect::<Result<_>>()?;
        let mut worst = 0.0f64;
        let mut witness = json!(null);
        let mut smallest_margin = f64::INFINITY;
        for &fam in fams {
            let l = build_generator(p, Generator::Regularized(fam))?;
            for (&t, s_states) in t_grid.iter().zip(&sub) {
                let t_states = l.scale(-1.0).exp_apply_many(t, &states)?;
                for ((a, b), rho) in t_states.iter().zip(s_states).zip(&states) {
                    let diff = a.sub(b)?;
                    smallest_margin = smallest_margin.min(diff.min_eigenvalue());
                    let v = cone_violation(&diff, a.trace_norm() + b.trace_norm());
                    if v > worst {
                        worst = v;
                        witness = json!({ "family": fam, "t": t, "input": state_json(rho) });
                    }
                }
            }
            for (&lambda, s_res) in lambda_grid.iter().zip(&sub_res) {
                let solver = l.shifted_solver(lambda, 1.0)?;
                for rho in &states {
                    let a = solver.solve(rho)?;
                    let b = s_res.apply(rho)?;
                    let diff = a.sub(&b)?;
                    let v = cone_violation(&diff, a.trace_norm() + b.trace_norm());
                    if v > worst {
                        worst = v;
                        witness =
                            json!({ "family": fam, "lambda": lambda, "input": state_json(rho) });
                    }
                }
            }
        }
        let notes = format!(
            "{} families x {} times x {} resolvent points x {} PSD states; smallest min-eig(T^a_t rho - S_t rho) = {:.3e}",
            fams.len(),
            t_grid.len(),
            lambda_grid.len(),
            states.len(),
            smallest_margin
        );
        Ok((worst, witness, notes))
    };
    match run() {
        Ok((worst, witness, notes)) => {
            let verdict = if worst <= tol {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            };
            rep.finish(worst, verdict, Some(witness), notes)
        }
        Err(e) => rep.failed(e),
    }
}

fn contraction_generators(p: &ModelParams) -> Vec<Generator> {
    let mid = (p.dim() - 2) / 2;
    vec![
        Generator::SubSemigroup,
        Generator::Full,
        Generator::Regularized(RegularizationFamily::KatoScaling(0.5)),
        Generator::Regularized(RegularizationFamily::NumberCutoff(mid)),
        Generator::Regularized(RegularizationFamily::CompressFirst(mid)),
    ]
}

/// `‖T_t ρ‖₁ <= ‖ρ‖₁` for Hermitian `ρ` and several generators.
pub fn check_contraction(p: &ModelParams, samples: usize, seed: u64) -> CheckReport {
    let name = "semigroup_contraction";
    let tol = p.trunc.psd_tol;
    let rep = CheckReport::new(name, p, seed, tol);
    let run = || -> Result<(f64, serde_json::Value)> {
        let mut rng = check_rng(seed, name);
        let states = interior_hermitian(&mut rng, p, p.trunc.interior_top(), samples);
        let mut worst = 0.0f64;
        let mut witness = json!(null);
        for g in contraction_generators(p) {
            let minus_l = build_generator(p, g)?.scale(-1.0);
            for t in [0.1, 0.5, 1.0] {
                for (out, rho) in minus_l.exp_apply_many(t, &states)?.iter().zip(&states) {
                    let v = (out.trace_norm() - rho.trace_norm()).max(0.0);
                    if v > worst {
                        worst = v;
                        witness = json!({ "generator": g, "t": t, "input": state_json(rho) });
                    }
                }
            }
        }
        Ok((worst, witness))
    };
    match run() {
        Ok((worst, witness)) => rep.finish(
            worst,
            if worst <= tol {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            },
            Some(witness),
            format!("{samples} Hermitian states, t in {{0.1, 0.5, 1}}, five generators"),
        ),
        Err(e) => rep.failed(e),
    }
}

/// `‖λ (λ + L)^{-1} ρ‖₁ <= ‖ρ‖₁`.
pub fn check_resolvent_contraction(p: &ModelParams, samples: usize, seed: u64) -> CheckReport {
    let name = "resolvent_contraction";
    let tol = p.trunc.psd_tol;
    let rep = CheckReport::new(name, p, seed, tol);
    let lambdas = [0.5, 1.0, 2.0, 5.0, 10.0];
    let run = || -> Result<(f64, serde_json::Value)> {
        let mut rng = check_rng(seed, name);
        let states = interior_hermitian(&mut rng, p, p.trunc.interior_top(), samples);
        let mut worst = 0.0f64;
        let mut witness = json!(null);
        for g in contraction_generators(p) {
            let l = build_generator(p, g)?;
            for lambda in lambdas {
                let solver = l.shifted_solver(lambda, 1.0)?;
                for rho in &states {
                    let v =
                        (solver.solve(rho)?.scale(lambda).trace_norm() - rho.trace_norm()).max(0.0);
                    if v > worst {
                        worst = v;
                        witness =
                            json!({ "generator": g, "lambda": lambda, "input": state_json(rho) });
                    }
                }
            }
        }
        Ok((worst, witness))
    };
    match run() {
        Ok((worst, witness)) => rep.finish(
            worst,
            if worst <= tol {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            },
            Some(witness),
            format!("{samples} Hermitian states, lambda in {lambdas:?}, five generators"),
        ),
        Err(e) => rep.failed(e),
    }
}

/// Declared drift tolerance at truncation `D`: `1e-6` at `D = 40`, shrinking
/// tenfold per doubling.
pub fn trace_drift_tolerance(dim: usize) -> f64 {
    1e-6 * (40.0 / dim as f64).powf(10f64.log2())
}

/// `max |Tr(T_t ρ) − Tr ρ|` over states and times for the full generator.
pub fn trace_drift(p: &ModelParams, states: &[HermitianMatrix], t_grid: &[f64]) -> Result<f64> {
    let minus_l = build_generator(p, Generator::Full)?.scale(-1.0);
    let mut worst = 0.0f64;
    for &t in t_grid {
        for (out, rho) in minus_l.exp_apply_many(t, states)?.iter().zip(states) {
            worst = worst.max((out.trace() - rho.trace()).abs());
        }
    }
    Ok(worst)
}

/// Pads a state with zero rows and columns up to dimension `dim`.
pub fn embed(rho: &HermitianMatrix, dim: usize) -> HermitianMatrix {
    let mut m = nalgebra::DMatrix::<C64>::zeros(dim, dim);
    let d = rho.dim().min(dim);
    m.view_mut((0, 0), (d, d))
        .copy_from(&rho.matrix().view((0, 0), (d, d)));
    HermitianMatrix::new(m).expect("embedding keeps Hermiticity")
}

/// `|Tr(T_t ρ) − Tr ρ| <= tol(D)` for low-lying states, repeated at `2D`.
pub fn check_trace_preservation(
    p: &ModelParams,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> CheckReport {
    let name = "trace_preservation";
    let d = p.dim();
    let tol = trace_drift_tolerance(d);
    let rep = CheckReport::new(name, p, seed, tol);
    let mut rng = check_rng(seed, name);
    let mut states = vec![HermitianMatrix::basis_projector(0, d)];
    states.extend(interior_psd(&mut rng, p, low_top(p), samples));
    if !p.is_markov_regime() {
        let drift = trace_drift(p, &states, t_grid);
        return rep.skipped(match drift {
            Ok(x) => format!(
                "sigma+ >= sigma-: trace preservation is not claimed; recorded drift {x:.3e}"
            ),
            Err(e) => format!(
                "sigma+ >= sigma-: trace preservation is not claimed; drift unavailable ({e})"
            ),
        });
    }
    let run = || -> Result<(f64, f64)> {
        let base = trace_drift(p, &states, t_grid)?;
        let doubled = p.with_dim(2 * d)?;
        let big: Vec<_> = states.iter().map(|s| embed(s, 2 * d)).collect();
        Ok((base, trace_drift(&doubled, &big, t_grid)?))
    };
    match run() {
        Ok((base, doubled)) => {
            let tol2 = trace_drift_tolerance(2 * d);
            let worst = base.max(doubled * tol / tol2);
            let notes = format!(
                "support <= {}, t <= {}: drift(D={d}) = {base:.3e} (tol {tol:.3e}); drift(D={}) = {doubled:.3e} (tol {tol2:.3e}); ratio {:.3e}",
                low_top(p),
                t_grid.iter().cloned().fold(0.0, f64::max),
                2 * d,
                if doubled > 0.0 { base / doubled } else { f64::INFINITY }
            );
            rep.finish(
                worst,
                if worst <= tol {
                    Verdict::NoViolationFound
                } else {
                    Verdict::ViolationFound
                },
                None,
                notes,
            )
        }
        Err(e) => rep.failed(e),
    }
}

/// Converged members of each family on the same low-lying states.
fn converged_states(
    p: &ModelParams,
    t: f64,
    states: &[HermitianMatrix],
) -> Result<Vec<(FamilyKind, Vec<HermitianMatrix>)>> {
    FamilyKind::ALL
        .iter()
        .map(|&kind| {
            let l = build_generator(p, Generator::Regularized(kind.converged(p.dim())))?;
            Ok((kind, l.scale(-1.0).exp_apply_many(t, states)?))
        })
        .collect()
}

/// Independence of the limit from the family, and domination of every
/// Kato-scaled semigroup by the full one.
pub fn check_minimality(p: &ModelParams, t: f64, samples: usize, seed: u64) -> Vec<CheckReport> {
    let name = "regularisation_independence";
    let mut independence = CheckReport::new(name, p, seed, 1e-6);
    let mut rng = check_rng(seed, name);
    let states = interior_psd(&mut rng, p, low_top(p), samples);
    independence = match converged_states(p, t, &states) {
        Ok(all) => {
            let mut worst = 0.0f64;
            let mut witness = json!(null);
            for i in 0..all.len() {
                for j in i + 1..all.len() {
                    for ((a, b), rho) in all[i].1.iter().zip(&all[j].1).zip(&states) {
                        let v = match a.sub(b) {
                            Ok(x) => x.trace_norm(),
                            Err(_) => f64::INFINITY,
                        };
                        if v > worst {
                            worst = v;
                            witness = json!({
                                "families": [all[i].0.name(), all[j].0.name()],
                                "input": state_json(rho),
                            });
                        }
                    }
                }
            }
            let notes = format!(
                "t = {t}; number_cutoff(D-2), compress_first(D-2), kato_scaling(1-1e-8); {} states supported on levels <= {}",
                states.len(),
                low_top(p)
            );
            let verdict = if worst <= 1e-6 {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            };
            independence.finish(worst, verdict, Some(witness), notes)
        }
        Err(e) => independence.failed(e),
    };

    let name = "minimality_domination";
    let tol = p.trunc.psd_tol;
    let domination = CheckReport::new(name, p, seed, tol);
    let mut rng = check_rng(seed, name);
    let states = interior_psd(&mut rng, p, p.trunc.interior_top(), samples);
    let rs = [0.0, 0.25, 0.5, 0.9, 0.99];
    let run = || -> Result<(f64, serde_json::Value, Vec<f64>)> {
        let full = build_generator(p, Generator::Full)?
            .scale(-1.0)
            .exp_apply_many(t, &states)?;
        let mut worst = 0.0f64;
        let mut witness = json!(null);
        let mut margins = Vec::new();
        for r in rs {
            let fam = RegularizationFamily::KatoScaling(r);
            let out = build_generator(p, Generator::Regularized(fam))?
                .scale(-1.0)
                .exp_apply_many(t, &states)?;
            let mut margin = f64::INFINITY;
            for ((a, b), rho) in full.iter().zip(&out).zip(&states) {
                let diff = a.sub(b)?;
                margin = margin.min(diff.min_eigenvalue());
                let v = cone_violation(&diff, a.trace_norm() + b.trace_norm());
                if v > worst {
                    worst = v;
                    witness = json!({ "family": fam, "input": state_json(rho) });
                }
            }
            margins.push(margin);
        }
        Ok((worst, witness, margins))
    };
    let domination = match run() {
        Ok((worst, witness, margins)) => domination.finish(
            worst,
            if worst <= tol { Verdict::NoViolationFound } else { Verdict::ViolationFound },
            Some(witness),
            format!("t = {t}; kato_scaling r in {rs:?} below the full semigroup; smallest min-eig per r: {}", sci(&margins)),
        ),
        Err(e) => domination.failed(e),
    };
    vec![independence, domination]
}

/// Whether the full semigroup dominates the cut-off semigroups. This needs
/// `Q − K_α` to be positivity preserving, which the cut-off families do
/// not guarantee, so the outcome is reported as a finding.
pub fn check_cutoff_minimality_domination(
    p: &ModelParams,
    t: f64,
    samples: usize,
    seed: u64,
) -> CheckReport {
    let name = "minimality_domination_cutoff";
    let tol = p.trunc.psd_tol;
    let rep = CheckReport::new(name, p, seed, tol).informational();
    let run = || -> Result<(f64, serde_json::Value, String)> {
        let mut rng = check_rng(seed, name);
        let states = interior_psd(&mut rng, p, p.trunc.interior_top(), samples);
        let full = build_generator(p, Generator::Full)?
            .scale(-1.0)
            .exp_apply_many(t, &states)?;
        let mut worst = 0.0f64;
        let mut witness = json!(null);
        let mut violating = Vec::new();
        for kind in [FamilyKind::NumberCutoff, FamilyKind::CompressFirst] {
            for n in 0..=p.dim() - 2 {
                let fam = kind.member(n as f64)?;
                let out = build_generator(p, Generator::Regularized(fam))?
                    .scale(-1.0)
                    .exp_apply_many(t, &states)?;
                let mut fam_worst = 0.0f64;
                for ((a, b), rho) in full.iter().zip(&out).zip(&states) {
                    let diff = a.sub(b)?;
                    let v = cone_violation(&diff, a.trace_norm() + b.trace_norm());
                    fam_worst = fam_worst.max(v);
                    if v > worst {
                        worst = v;
                        witness = json!({ "family": fam, "min_eigenvalue": diff.min_eigenvalue(), "input": state_json(rho) });
                    }
                }
                if fam_worst > tol {
                    violating.push(fam.label());
                }
            }
        }
        let notes = format!(
            "t = {t}; finding: {} of {} cut-off members are not dominated by the full semigroup on the sampled states{}",
            violating.len(),
            2 * (p.dim() - 1),
            if violating.is_empty() { String::new() } else { format!(" (first: {})", violating[0]) }
        );
        Ok((worst, witness, notes))
    };
    match run() {
        Ok((worst, witness, notes)) => rep.finish(
            worst,
            if worst <= tol {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            },
            Some(witness),
            notes,
        ),
        Err(e) => rep.failed(e),
    }
}

/// Intertwining of the jump maps with `R ρ = e^{-s n̂} ρ e^{-s n̂}` and the
/// tilted trace identity `Tr(Q̃ρ) = r Tr(Hρ) + c Tr ρ`.
pub fn check_tilt_commutation(p: &ModelParams, s: f64, samples: usize, seed: u64) -> CheckReport {
    let name = "tilt_commutation";
    let rep = CheckReport::new(name, p, seed, 1e-9);
    let run = || -> Result<(f64, TiltConstants, [f64; 4], HermitianMatrix)> {
        let h = build_H(p)?;
        let (qm, qp) = build_Q_pm(p)?;
        let (qt, consts) = build_Q_tilde(p, s)?;
        let r = build_tilt(p, s)?;
        let mut rng = check_rng(seed, name);
        let states = interior_hermitian(&mut rng, p, p.trunc.interior_top(), samples);
        let mut parts = [0.0f64; 4];
        let mut worst = 0.0f64;
        let mut witness = states
            .first()
            .cloned()
            .unwrap_or_else(|| HermitianMatrix::zeros(p.dim()));
        for rho in &states {
            let r_rho = r.apply(rho)?;
            let e = [
                qm.apply(&r_rho)?
                    .sub(&r.apply(&qm.apply(rho)?)?.scale((-2.0 * s).exp()))?
                    .trace_norm(),
                qp.apply(&r_rho)?
                    .sub(&r.apply(&qp.apply(rho)?)?.scale((2.0 * s).exp()))?
                    .trace_norm(),
                h.apply(&r_rho)?
                    .sub(&r.apply(&h.apply(rho)?)?)?
                    .trace_norm(),
                (qt.apply(rho)?.trace()
                    - (consts.r * h.apply(rho)?.trace() + consts.c * rho.trace()))
                .abs(),
            ];
            for (part, v) in parts.iter_mut().zip(e) {
                *part = part.max(v);
            }
            let v = e.into_iter().fold(0.0, f64::max);
            if v > worst {
                worst = v;
                witness = rho.clone();
            }
        }
        Ok((worst, consts, parts, witness))
    };
    match run() {
        Ok((worst, consts, parts, witness)) => {
            let notes = format!(
                "s = {s}: r = {:.6}, c = {:.6}, regime sigma+ e^(2s) < sigma- is {}; worst errors [Q-R, Q+R, HR, trace] = {}",
                consts.r, consts.c, consts.in_regime, sci(&parts)
            );
            rep.finish(
                worst,
                if worst <= 1e-9 { Verdict::NoViolationFound } else { Verdict::ViolationFound },
                Some(json!({ "r": consts.r, "c": consts.c, "in_regime": consts.in_regime, "input": state_json(&witness) })),
                notes,
            )
        }
        Err(e) => rep.failed(e),
    }
}

/// Neumann series for `(λ + H − Q)^{-1} |e_2⟩⟨e_2|`: PSD increments and
/// agreement with the direct solve.
pub fn check_neumann_resolvent(p: &ModelParams, lambda: f64, seed: u64) -> CheckReport {
    let name = "neumann_resolvent";
    let rep = CheckReport::new(name, p, seed, 1e-8);
    if p.dim() < 3 {
        return rep.skipped("needs D >= 3");
    }
    let run = || -> Result<(f64, String)> {
        let h = build_H(p)?;
        let q = build_Q(p)?;
        let u = HermitianMatrix::basis_projector(2, p.dim());
        let (sum, record) = neumann_series_resolvent(&h, &q, lambda, &u, 1e-12, 500)?;
        let direct = h.sub(&q)?.resolvent_apply(lambda, &u)?;
        let err = sum.sub(&direct)?.trace_norm();
        let neg = record
            .increment_min_eigenvalues
            .iter()
            .fold(0.0f64, |acc, &m| acc.max(-m));
        let worst = if record.converged {
            err.max(neg)
        } else {
            f64::INFINITY
        };
        Ok((
            worst,
            format!(
                "lambda = {lambda}, u = |e_2><e_2|: {} terms, converged = {}, ||sum - direct||_1 = {err:.3e}, most negative increment eigenvalue {:.3e}",
                record.terms, record.converged, -neg
            ),
        ))
    };
    match run() {
        Ok((worst, notes)) => rep.finish(
            worst,
            if worst <= 1e-8 {
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

/// Direct solve, Laplace quadrature of the exponential and Neumann series
/// for `(λ + L)^{-1} u` agree pairwise.
pub fn check_resolvent_agreement(p: &ModelParams, lambda: f64, seed: u64) -> CheckReport {
    let name = "resolvent_three_routes";
    let rep = CheckReport::new(name, p, seed, 1e-6);
    let run = || -> Result<(f64, String, HermitianMatrix)> {
        let mut rng = check_rng(seed, name);
        let u = sampling::mixed_state(&mut rng, p.dim(), low_top(p));
        let h = build_H(p)?;
        let q = build_Q(p)?;
        let l = h.sub(&q)?;
        let direct = l.resolvent_apply(lambda, &u)?;
        let quad = laplace_resolvent(&l, lambda, &u)?;
        let (series, record) = neumann_series_resolvent(&h, &q, lambda, &u, 1e-12, 2000)?;
        let d = [
            direct.sub(&quad)?.trace_norm(),
            direct.sub(&series)?.trace_norm(),
            quad.sub(&series)?.trace_norm(),
        ];
        let worst = d.into_iter().fold(0.0, f64::max);
        Ok((
            worst,
            format!(
                "lambda = {lambda}: |direct - quadrature| = {:.3e}, |direct - series| = {:.3e}, |quadrature - series| = {:.3e}; series terms {}",
                d[0], d[1], d[2], record.terms
            ),
            u,
        ))
    };
    match run() {
        Ok((worst, notes, u)) => rep.finish(
            worst,
            if worst <= 1e-6 {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            },
            Some(state_json(&u)),
            notes,
        ),
        Err(e) => rep.failed(e),
    }
}

/// Lower bound on `‖Q (λ + H)^{-1}‖` from the induced-norm probe.
pub fn check_relative_bound_resolvent(
    p: &ModelParams,
    lambdas: &[f64],
    samples: usize,
    seed: u64,
) -> CheckReport {
    let name = "jump_resolvent_norm";
    let tol = p.trunc.psd_tol;
    let rep = CheckReport::new(name, p, seed, tol);
    let run = || -> Result<(f64, serde_json::Value, Vec<f64>)> {
        let h = build_H(p)?;
        let q = build_Q(p)?;
        let mut worst = 0.0f64;
        let mut witness = json!(null);
        let mut bounds = Vec::new();
        for (i, &lambda) in lambdas.iter().enumerate() {
            let op = q.compose(&h.resolvent_operator(lambda)?)?;
            let probe = induced_trace_norm_probe(
                &op,
                samples,
                sampling::derive_seed(seed, &format!("{name}/{i}")),
            );
            bounds.push(probe.lower_bound);
            let v = (probe.lower_bound - 1.0).max(0.0);
            if v >= worst {
                worst = v;
                witness = json!({ "lambda": lambda, "lower_bound": probe.lower_bound, "vector": vector_json(&probe.witness) });
            }
        }
        Ok((worst, witness, bounds))
    };
    match run() {
        Ok((worst, witness, bounds)) => rep.finish(
            worst,
            if worst <= tol {
                Verdict::NoViolationFound
            } else {
                Verdict::ViolationFound
            },
            Some(witness),
            format!("lambda in {lambdas:?}: probed lower bounds {bounds:.9?}"),
        ),
        Err(e) => rep.failed(e),
    }
}

pub const KATO_SWEEP: [f64; 5] = [0.0, 0.5, 0.9, 0.99, 1.0 - 1e-6];

/// Errors of the Kato-scaled family decrease along the sweep.
pub fn check_kato_sweep(p: &ModelParams, t: f64, seed: u64) -> CheckReport {
    let name = "kato_sweep_monotone";
    let rep = CheckReport::new(name, p, seed, 0.0);
    if p.is_isolated() {
        return rep.skipped("sigma- = sigma+ = 0: every family member equals the full generator");
    }
    let run = || -> Result<(f64, Vec<crate::semigroup::SweepRow>)> {
        let mut rng = check_rng(seed, name);
        let rho = sampling::mixed_state(&mut rng, p.dim(), low_top(p));
        let rows = regularization_sweep(p, FamilyKind::KatoScaling, &KATO_SWEEP, t, &rho)?;
        let worst = rows
            .windows(2)
            .map(|w| {
                (w[1].evolution_error - w[0].evolution_error)
                    .max(w[1].resolvent_error - w[0].resolvent_error)
            })
            .fold(0.0f64, f64::max);
        Ok((worst, rows))
    };
    match run() {
        Ok((worst, rows)) => {
            let errors: Vec<f64> = rows.iter().map(|r| r.evolution_error).collect();
            rep.finish(
                worst,
                if worst <= 0.0 {
                    Verdict::NoViolationFound
                } else {
                    Verdict::ViolationFound
                },
                Some(json!({ "rows": rows })),
                format!(
                    "t = {t}, r in {KATO_SWEEP:?}: evolution errors {}",
                    sci(&errors)
                ),
            )
        }
        Err(e) => rep.failed(e),
    }
}

/// Number cut-off sweep over `N = 0..=D-2`; the error column is recorded
/// and must vanish at the largest index on low-lying states.
pub fn check_cutoff_sweep(p: &ModelParams, t: f64, seed: u64) -> CheckReport {
    let name = "cutoff_sweep_convergence";
    let rep = CheckReport::new(name, p, seed, 1e-8);
    let run = || -> Result<(f64, Vec<crate::semigroup::SweepRow>)> {
        let mut rng = check_rng(seed, name);
        let rho = sampling::mixed_state(&mut rng, p.dim(), low_top(p));
        let indices: Vec<f64> = (0..=p.dim() - 2).map(|n| n as f64).collect();
        let rows = regularization_sweep(p, FamilyKind::NumberCutoff, &indices, t, &rho)?;
        let last = rows.last().expect("D >= 2");
        Ok((last.evolution_error.max(last.resolvent_error), rows))
    };
    match run() {
        Ok((worst, rows)) => {
            let increases = rows
                .windows(2)
                .filter(|w| w[1].evolution_error > w[0].evolution_error)
                .count();
            rep.finish(
                worst,
                if worst <= 1e-8 { Verdict::NoViolationFound } else { Verdict::ViolationFound },
                Some(json!({ "rows": rows })),
                format!(
                    "t = {t}; error at N = D-2: {worst:.3e}; the error column increases at {increases} of {} steps (monotonicity not asserted)",
                    rows.len().saturating_sub(1)
                ),
            )
        }
        Err(e) => rep.failed(e),
    }
}

/// Member `N` of the sequence used to compare neighbours of a family.
fn nth_member(kind: FamilyKind, n: usize) -> RegularizationFamily {
    match kind {
        FamilyKind::NumberCutoff => RegularizationFamily::NumberCutoff(n),
        FamilyKind::CompressFirst => RegularizationFamily::CompressFirst(n),
        FamilyKind::KatoScaling => {
            RegularizationFamily::KatoScaling(1.0 - 0.5f64.powi(n as i32 + 1))
        }
    }
}

/// Probes whether `K_{N+1} − K_N` is positivity preserving, including the
/// deterministic candidates `e_{N+1} + e_{N+2}/√2` and `e_N + e_{N+1}/√2`.
/// For the Kato family the members are `r_N = 1 − 2^{-(N+1)}`.
pub fn check_condition_iii(
    p: &ModelParams,
    kind: FamilyKind,
    n: usize,
    samples: usize,
    seed: u64,
) -> CheckReport {
    let name = format!("condition_iii_{}", kind.name());
    let tol = p.trunc.psd_tol;
    let mut rep = CheckReport::new(&name, p, seed, tol);
    if kind != FamilyKind::KatoScaling {
        rep = rep.informational();
    }
    let d = p.dim();
    if n + 3 > d {
        return rep.skipped(format!("needs N <= D - 3, got N = {n}"));
    }
    let run = || -> Result<(f64, serde_json::Value, f64)> {
        let lo = build_regularized_Q(p, nth_member(kind, n))?;
        let hi = build_regularized_Q(p, nth_member(kind, n + 1))?;
        let diff = hi.sub(&lo)?;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut w = DVector::<C64>::zeros(d);
        w[n + 1] = C64::new(1.0, 0.0);
        w[n + 2] = C64::new(s, 0.0);
        let mut shifted = DVector::<C64>::zeros(d);
        shifted[n] = C64::new(1.0, 0.0);
        shifted[n + 1] = C64::new(s, 0.0);
        let candidates = [HermitianMatrix::outer(&w), HermitianMatrix::outer(&shifted)];
        let candidate_values = candidates
            .iter()
            .map(|c| Ok(diff.apply(c)?.min_eigenvalue()))
            .collect::<Result<Vec<f64>>>()?;
        let probe = positivity_probe_with(
            &diff,
            samples,
            sampling::derive_seed(seed, &name),
            &candidates,
        );
        let worst = (-probe.worst_min_eigenvalue).max(0.0);
        let witness = json!({
            "n": n,
            "members": [nth_member(kind, n), nth_member(kind, n + 1)],
            "candidate": { "vector": vector_json(&w), "min_eigenvalue": candidate_values[0] },
            "shifted_candidate": { "vector": vector_json(&shifted), "min_eigenvalue": candidate_values[1] },
            "worst": {
                "min_eigenvalue": probe.worst_min_eigenvalue,
                "input": probe.witness_input.as_ref().map(state_json),
            },
            "samples": probe.samples,
        });
        Ok((worst, witness, candidate_values[0].min(candidate_values[1])))
    };
    match run() {
        Ok((worst, witness, cand)) => {
            let verdict = if worst > tol {
                Verdict::ViolationFound
            } else if kind == FamilyKind::KatoScaling {
                Verdict::HoldsByConstruction
            } else {
                Verdict::NoViolationFound
            };
            let notes = if worst > tol {
                format!(
                    "finding: the difference of members N+1 and N maps a PSD input to a matrix with eigenvalue {:.6} (candidate inputs reach {cand:.6}); recorded without interpretation",
                    -worst
                )
            } else {
                "difference of neighbouring members kept every probed PSD input PSD".to_string()
            };
            rep.finish(worst, verdict, Some(witness), notes)
        }
        Err(e) => rep.failed(e),
    }
}
