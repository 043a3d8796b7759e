// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

//! Finite-truncation laboratory for minimal dynamical semigroups.
//!
//! The crate builds the damped one-mode boson on a truncated Fock space,
//! assembles Kato-style regularised generators `L_α = H − K_α`, evolves
//! states under `e^{-tL}` and turns the structural claims about such
//! semigroups (domination, contraction, trace preservation, minimality)
//! into seeded, tolerance-checked reports.
//!
//! Layout:
//!
//! - [`fock`]: ladder, number and projection operators on `span{e_0..e_{D-1}}`.
//! - [`hermitian`]: the self-adjoint trace class: cone, order, trace norm.
//! - [`superop`]: linear maps on matrices, exponentials, resolvents, probes.
//! - [`semigroup`]: the boson model and the regularisation machinery.
//! - [`verify`]: executable properties with witnesses.
//! - [`cli`]: the `katoreg` command-line front end.

pub mod cli;
pub mod error;
pub mod fock;
pub mod hermitian;
pub mod sampling;
pub mod semigroup;
pub mod superop;
pub mod verify;

pub use error::{Error, Result};
pub use fock::{FockOperator, TruncationConfig};
pub use hermitian::HermitianMatrix;
pub use semigroup::{EvolutionRecord, Generator, ModelParams, RegularizationFamily};
pub use superop::{ProbeReport, SuperOperator};
pub use verify::{CheckReport, Verdict};

pub use num_complex::Complex64 as C64;
