// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use serde_json::{json, Value};

use super::config::RunConfig;
use super::output::{csv, fmt_num, write_atomic};
use super::EXIT_OK;
use crate::hermitian::HermitianMatrix;
use crate::sampling;
use crate::semigroup::{
    self, build_generator, regularization_sweep, FamilyKind, Generator, ModelParams, SweepRow,
};
use crate::verify::{self, coherence_scan, embed, trace_drift, trace_drift_tolerance, LOW_SUPPORT};
use crate::{Error, C64};

pub enum Failure {
    Usage(String),
    Check(String),
}

type Outcome = std::result::Result<i32, Failure>;

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn check(e: Error) -> Failure {
    Failure::Check(e.to_string())
}

fn write(dir: &Path, name: &str, contents: &str) -> std::result::Result<(), Failure> {
    write_atomic(dir, name, contents).map_err(check)
}

fn manifest(
    cfg: &RunConfig,
    command: &str,
    outputs: &[&str],
    results: Value,
    started: Instant,
) -> std::result::Result<(), Failure> {
    let m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config": cfg,
        "outputs": outputs,
        "results": results,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&m).expect("manifest serialises") + "\n";
    write(&cfg.out_dir, "manifest.json", &text)
}

pub fn verify(cfg: &RunConfig) -> Outcome {
    let started = Instant::now();
    let p = cfg.model().map_err(usage)?;
    let reports = verify::run_suite_with(&p, cfg.seed, cfg.sample_counts());
    let text = serde_json::to_string_pretty(&reports).expect("reports serialise") + "\n";
    write(&cfg.out_dir, "reports.json", &text)?;
    let mut failed = Vec::new();
    for r in &reports {
        let tag = match (r.passed, r.verdict) {
            (_, verify::Verdict::Skipped) => "SKIP",
            (true, _) => "PASS",
            (false, _) if r.informational && !cfg.strict_iii => "NOTE",
            (false, _) => "FAIL",
        };
        println!(
            "{tag} {} worst={} tol={}",
            r.name,
            fmt_num(r.worst_violation),
            fmt_num(r.tolerance)
        );
        if r.blocks(cfg.strict_iii) {
            failed.push(r.name.clone());
        }
    }
    let markov_missing = cfg.require_markov && !p.is_markov_regime();
    if markov_missing {
        failed.push(
            "trace_preservation (skipped: sigma+ >= sigma-, required by require_markov)".into(),
        );
    }
    manifest(
        cfg,
        "verify",
        &["reports.json"],
        json!({ "checks": reports.len(), "failed": failed }),
        started,
    )?;
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        Err(Failure::Check(failed.join(", ")))
    }
}

fn seeded_state(p: &ModelParams, seed: u64, tag: &str) -> HermitianMatrix {
    let mut rng = sampling::rng(sampling::derive_seed(seed, tag));
    sampling::mixed_state(&mut rng, p.dim(), LOW_SUPPORT.min(p.trunc.interior_top()))
}

fn read_state_file(path: &str, dim: usize) -> std::result::Result<HermitianMatrix, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
    let v = v.get("state").unwrap_or(&v);
    let part = |key: &str| -> std::result::Result<Vec<Vec<f64>>, String> {
        match v.get(key) {
            None if key == "im" => Ok(vec![vec![0.0; dim]; dim]),
            None => Err(format!("{path}: missing `{key}`")),
            Some(x) => {
                serde_json::from_value(x.clone()).map_err(|e| format!("{path}: `{key}`: {e}"))
            }
        }
    };
    let (re, im) = (part("re")?, part("im")?);
    if re.len() != dim || im.len() != dim || re.iter().chain(&im).any(|r| r.len() != dim) {
        return Err(format!("{path}: state must be {dim} x {dim}"));
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| C64::new(re[i][j], im[i][j]));
    HermitianMatrix::new(m).map_err(|e| format!("{path}: {e}"))
}

/// Initial state from `basis:N`, `seeded` or `file:PATH`.
fn initial_state(
    cfg: &RunConfig,
    p: &ModelParams,
) -> std::result::Result<HermitianMatrix, Failure> {
    let descr = cfg.state.as_str();
    let d = p.dim();
    if let Some(n) = descr.strip_prefix("basis:") {
        let n: usize = n
            .parse()
            .map_err(|_| Failure::Usage(format!("state `{descr}`: expected basis:N")))?;
        if n >= d {
            return Err(Failure::Usage(format!(
                "state `{descr}`: level must be below D = {d}"
            )));
        }
        Ok(HermitianMatrix::basis_projector(n, d))
    } else if descr == "seeded" {
        Ok(seeded_state(p, cfg.seed, "evolve/state"))
    } else if let Some(path) = descr.strip_prefix("file:") {
        read_state_file(path, d).map_err(Failure::Usage)
    } else {
        Err(Failure::Usage(format!(
            "state `{descr}`: expected basis:N, seeded or file:PATH"
        )))
    }
}

pub fn evolve(cfg: &RunConfig) -> Outcome {
    let started = Instant::now();
    let p = cfg.model().map_err(usage)?;
    let g = cfg.generator_choice().map_err(usage)?;
    let rho0 = initial_state(cfg, &p)?;
    let grid = cfg.time_grid().map_err(usage)?;
    let l = build_generator(&p, g).map_err(check)?;
    let record = semigroup::evolve(&l, &rho0, &grid).map_err(check)?;
    let rows: Vec<Vec<String>> = record
        .diagnostics()
        .iter()
        .map(|d| {
            [
                d.t,
                d.trace,
                d.trace_norm,
                d.min_eigenvalue,
                d.purity,
                d.mean_occupation,
            ]
            .iter()
            .map(|&x| fmt_num(x))
            .collect()
        })
        .collect();
    let header = [
        "t",
        "trace",
        "trace_norm",
        "min_eig",
        "purity",
        "mean_occupation",
    ];
    write(&cfg.out_dir, "trajectory.csv", &csv(&header, &rows))?;
    manifest(
        cfg,
        "evolve",
        &["trajectory.csv"],
        json!({ "generator": g, "points": rows.len() }),
        started,
    )?;
    Ok(EXIT_OK)
}

fn sweep_rows(rows: &[SweepRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            [
                r.index,
                r.evolution_error,
                r.evolution_margin,
                r.resolvent_error,
                r.resolvent_margin,
            ]
            .iter()
            .map(|&x| fmt_num(x))
            .collect()
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

const SWEEP_HEADER: [&str; 4] = [
    "evolution_error",
    "evolution_margin",
    "resolvent_error",
    "resolvent_margin",
];

pub fn study(cfg: &RunConfig) -> Outcome {
    let started = Instant::now();
    let p = cfg.model().map_err(usage)?;
    let t = cfg.time_stop;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Failure::Usage(format!(
            "time_stop must be finite and non-negative, got {t}"
        )));
    }
    let rho = seeded_state(&p, cfg.seed, "study/state");
    let (header, rows, results): (Vec<&str>, Vec<Vec<String>>, Value) = match cfg.axis.as_str() {
        "cutoff" => {
            let kind = cfg.family_kind().map_err(usage)?;
            if kind == FamilyKind::KatoScaling {
                return Err(Failure::Usage(
                    "axis cutoff needs family number_cutoff or compress_first".into(),
                ));
            }
            let values = if cfg.values.is_empty() {
                (0..=p.dim() - 2).map(|n| n as f64).collect()
            } else {
                cfg.values.clone()
            };
            let rows = regularization_sweep(&p, kind, &values, t, &rho).map_err(usage)?;
            let last = rows.last().map(|r| r.evolution_error);
            (
                [&["N"][..], &SWEEP_HEADER[..]].concat(),
                sweep_rows(&rows),
                json!({ "family": kind.name(), "t": t, "last_evolution_error": last }),
            )
        }
        "kato" => {
            let values = if cfg.values.is_empty() {
                verify::KATO_SWEEP.to_vec()
            } else {
                cfg.values.clone()
            };
            let rows = regularization_sweep(&p, FamilyKind::KatoScaling, &values, t, &rho)
                .map_err(usage)?;
            let decreasing = rows
                .windows(2)
                .all(|w| w[1].evolution_error < w[0].evolution_error);
            (
                [&["r"][..], &SWEEP_HEADER[..]].concat(),
                sweep_rows(&rows),
                json!({ "t": t, "strictly_decreasing": decreasing }),
            )
        }
        "euler" => {
            let steps: Vec<usize> = if cfg.values.is_empty() {
                cfg.euler_steps.clone()
            } else {
                cfg.values.iter().map(|&v| v as usize).collect()
            };
            if steps.len() < 2 || steps.contains(&0) {
                return Err(Failure::Usage(
                    "axis euler needs at least two positive step counts".into(),
                ));
            }
            let l = build_generator(&p, Generator::Full).map_err(check)?;
            let exact = l.scale(-1.0).exp_apply(t, &rho).map_err(check)?;
            let mut points = Vec::new();
            for &n in &steps {
                let approx = l.euler_power(t, n, &rho).map_err(check)?;
                points.push((n as f64, approx.sub(&exact).map_err(check)?.trace_norm()));
            }
            let slope = log_log_slope(&points);
            let rows = points
                .iter()
                .map(|&(n, e)| vec![fmt_num(n), fmt_num(e)])
                .collect();
            (
                vec!["n", "euler_error"],
                rows,
                json!({ "t": t, "euler_slope": slope }),
            )
        }
        "truncation" => {
            let dims: Vec<usize> = if cfg.values.is_empty() {
                vec![20, 40, 80]
            } else {
                cfg.values.iter().map(|&v| v as usize).collect()
            };
            let grid = cfg.time_grid().map_err(usage)?;
            let base = p
                .with_dim(dims.iter().copied().min().unwrap_or(p.dim()))
                .map_err(usage)?;
            let rho = seeded_state(&base, cfg.seed, "study/state");
            let mut drifts = Vec::new();
            for &d in &dims {
                let pd = p.with_dim(d).map_err(usage)?;
                drifts.push(trace_drift(&pd, &[embed(&rho, d)], &grid).map_err(check)?);
            }
            let rows = dims
                .iter()
                .zip(&drifts)
                .map(|(&d, &x)| vec![d.to_string(), fmt_num(x), fmt_num(trace_drift_tolerance(d))])
                .collect();
            let ratios: Vec<f64> = drifts.windows(2).map(|w| w[0] / w[1]).collect();
            (
                vec!["D", "trace_drift", "tolerance"],
                rows,
                json!({ "drift_ratios": ratios }),
            )
        }
        other => {
            return Err(Failure::Usage(format!(
                "axis `{other}`: expected cutoff, kato, euler or truncation"
            )))
        }
    };
    write(&cfg.out_dir, "study.csv", &csv(&header, &rows))?;
    let mut results = results;
    results["axis"] = json!(cfg.axis);
    manifest(cfg, "study", &["study.csv"], results, started)?;
    Ok(EXIT_OK)
}

pub fn counterexample(cfg: &RunConfig) -> Outcome {
    let started = Instant::now();
    let p = cfg.model().map_err(usage)?;
    if let Some(&k) = cfg.k_values.iter().find(|&&k| k < 2 || k + 2 > p.dim()) {
        return Err(Failure::Usage(format!(
            "k = {k} outside 2..={}",
            p.dim() - 2
        )));
    }
    let mut sigmas = vec![(1.0, 1.0)];
    if (cfg.sigma_minus, cfg.sigma_plus) != (1.0, 1.0) {
        sigmas.push((cfg.sigma_minus, cfg.sigma_plus));
    }
    let rows = coherence_scan(&p, &sigmas, &cfg.k_values, &cfg.lambda_values).map_err(usage)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                fmt_num(r.lambda),
                fmt_num(r.closed_form),
                fmt_num(r.matrix_value),
                r.negative.to_string(),
                fmt_num(r.sigma_minus),
                fmt_num(r.sigma_plus),
            ]
        })
        .collect();
    let header = [
        "k",
        "lambda",
        "closed_form_value",
        "matrix_value",
        "negative",
        "sigma_minus",
        "sigma_plus",
    ];
    write(&cfg.out_dir, "counterexample.csv", &csv(&header, &table))?;
    let disagreement = rows
        .iter()
        .map(|r| (r.closed_form - r.matrix_value).abs())
        .fold(0.0, f64::max);
    let negatives = rows.iter().filter(|r| r.negative).count();
    manifest(
        cfg,
        "counterexample",
        &["counterexample.csv"],
        json!({ "rows": rows.len(), "negative_rows": negatives, "max_disagreement": disagreement }),
        started,
    )?;
    println!(
        "{} rows, {negatives} negative, max |closed form - matrix| = {}",
        rows.len(),
        fmt_num(disagreement)
    );
    if disagreement > 1e-9 {
        return Err(Failure::Check(format!(
            "closed form and matrix disagree by {}",
            fmt_num(disagreement)
        )));
    }
    if negatives == 0 {
        return Err(Failure::Check("no negative value in the scan".into()));
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&n: &f64| (n, 3.0 / n))
            .collect();
        assert!((log_log_slope(&pts) + 1.0).abs() < 1e-12);
    }
}
