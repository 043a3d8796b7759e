// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what} = {value} is out of range ({bound})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        bound: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("superoperator `{label}` broke Hermiticity: asymmetry {asymmetry:.3e} exceeds tolerance {tolerance:.3e}")]
    HermiticityViolation {
        label: String,
        asymmetry: f64,
        tolerance: f64,
    },

    #[error("non-finite entries in {0}")]
    NonFinite(String),

    #[error(
        "singular or ill-conditioned solve for `{label}` (condition estimate {condition:.3e})"
    )]
    Singular { label: String, condition: f64 },

    #[error("solve residual {residual:.3e} for `{label}` exceeds {bound:.3e}")]
    Residual {
        label: String,
        residual: f64,
        bound: f64,
    },

    #[error("exponential of `{label}` overflows (t·‖S‖₁ = {scaled_norm:.3e}); rescale time or generator")]
    Overflow { label: String, scaled_norm: f64 },

    #[error("sequence is not nondecreasing in PSD order at index {index} (min eigenvalue {min_eigenvalue:.3e})")]
    OrderViolation { index: usize, min_eigenvalue: f64 },

    #[error("sequence element {index} violates its precondition: {reason}")]
    Precondition { index: usize, reason: String },

    #[error("kernel dimension {dimension} differs from one")]
    AmbiguousKernel { dimension: usize },

    #[error("bisection did not converge after {iterations} iterations")]
    Bisection { iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
