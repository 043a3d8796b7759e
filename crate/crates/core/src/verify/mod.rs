// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

//! Executable properties of the truncated model.
//!
//! Each check draws its inputs from a stream derived from `(seed, name)`,
//! so reports do not depend on which other checks run or in what order.
//! A report distinguishes properties that hold by construction, sampled
//! properties for which no counterexample turned up, and properties with
//! an explicit witness against them.

mod checks;
mod invariants;

pub use checks::*;
pub use invariants::*;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::hermitian::HermitianMatrix;
use crate::sampling::{self, SeededRng};
use crate::semigroup::ModelParams;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    HoldsByConstruction,
    NoViolationFound,
    ViolationFound,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Informational findings never fail a suite run on their own.
    pub informational: bool,
    pub witness: Option<Value>,
    pub seed: u64,
    pub params: ModelParams,
    pub notes: String,
}

impl CheckReport {
    fn new(name: &str, p: &ModelParams, seed: u64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: false,
            worst_violation: 0.0,
            tolerance,
            verdict: Verdict::Skipped,
            informational: false,
            witness: None,
            seed,
            params: *p,
            notes: String::new(),
        }
    }

    fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    fn skipped(mut self, reason: impl Into<String>) -> Self {
        self.verdict = Verdict::Skipped;
        self.worst_violation = 0.0;
        self.passed = true;
        self.notes = reason.into();
        self
    }

    /// Sets the outcome; `passed` follows from the declared tolerance.
    fn finish(
        mut self,
        worst: f64,
        verdict: Verdict,
        witness: Option<Value>,
        notes: String,
    ) -> Self {
        let worst = if worst.is_nan() { f64::INFINITY } else { worst };
        self.worst_violation = worst;
        self.passed = worst <= self.tolerance;
        self.verdict = verdict;
        self.witness = witness;
        self.notes = notes;
        self
    }

    fn failed(self, err: crate::Error) -> Self {
        let note = format!("evaluation failed: {err}");
        self.finish(f64::INFINITY, Verdict::ViolationFound, None, note)
    }

    /// Whether this report should fail a suite run.
    pub fn blocks(&self, strict_informational: bool) -> bool {
        !self.passed && (!self.informational || strict_informational)
    }
}

/// Sample counts for the sampled checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub large: usize,
    pub medium: usize,
    pub small: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        Self {
            large: 200,
            medium: 100,
            small: 50,
        }
    }
}

impl SampleCounts {
    pub fn uniform(n: usize) -> Self {
        Self {
            large: n,
            medium: n,
            small: n,
        }
    }
}

/// Highest level of the low-lying states used where the truncation edge
/// must stay out of reach during an evolution.
pub const LOW_SUPPORT: usize = 10;

/// The `λ` values used by resolvent checks.
pub const LAMBDA_GRID: [f64; 4] = [0.5, 1.0, 2.0, 10.0];

fn check_rng(seed: u64, name: &str) -> SeededRng {
    sampling::rng(sampling::derive_seed(seed, name))
}

fn matrix_json(m: &DMatrix<C64>) -> Value {
    let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
            .collect()
    };
    json!({ "re": rows(|z| z.re), "im": rows(|z| z.im) })
}

fn state_json(rho: &HermitianMatrix) -> Value {
    json!({ "state": matrix_json(rho.matrix()) })
}

fn vector_json(v: &DVector<C64>) -> Value {
    json!({
        "re": v.iter().map(|z| z.re).collect::<Vec<_>>(),
        "im": v.iter().map(|z| z.im).collect::<Vec<_>>(),
    })
}

/// Runs every check with default sample counts.
pub fn run_suite(p: &ModelParams, seed: u64) -> Vec<CheckReport> {
    run_suite_with(p, seed, SampleCounts::default())
}

/// Runs every check; the result is sorted by name.
pub fn run_suite_with(p: &ModelParams, seed: u64, samples: SampleCounts) -> Vec<CheckReport> {
    let mut reports = vec![
        check_trace_inequality(p, samples.large, seed),
        check_relative_bound(p, samples.large, seed),
        check_positivity_counterexample(p, &coherence_k_scan(), &coherence_lambda_scan(), seed),
        check_sub_semigroup_trace_decay(p, seed),
        check_domination_equivalence(
            p,
            &default_domination_families(p),
            &[0.1, 0.5, 1.0],
            &LAMBDA_GRID,
            samples.small,
            seed,
        ),
        check_contraction(p, samples.small, seed),
        check_resolvent_contraction(p, samples.small, seed),
        check_trace_preservation(p, &[0.25, 0.5, 0.75, 1.0], samples.small, seed),
        check_cutoff_minimality_domination(p, 1.0, samples.small, seed),
        check_tilt_commutation(p, 0.3, samples.medium, seed),
        check_neumann_resolvent(p, 1.0, seed),
        check_resolvent_agreement(p, 1.0, seed),
        check_relative_bound_resolvent(p, &LAMBDA_GRID, samples.small, seed),
        check_kato_sweep(p, 1.0, seed),
        check_cutoff_sweep(p, 1.0, seed),
        check_cutoff_compression_identity(p, samples.medium, seed),
        check_weak_convergence(p, seed),
        check_monotone_net(p, 1.0, seed),
        check_psi_decomposition(p, samples.small, seed),
        check_stationary_state(p, seed),
    ];
    reports.extend(check_minimality(p, 1.0, samples.small, seed));
    for kind in crate::semigroup::FamilyKind::ALL {
        reports.push(check_condition_iii(p, kind, 0, samples.medium, seed));
    }
    reports.sort_by(|a, b| a.name.cmp(&b.name));
    reports
}
