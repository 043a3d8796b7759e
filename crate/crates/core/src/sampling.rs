// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

//! Seeded random states. Every sampler takes an explicit RNG built by
//! [`rng`]; nothing reads entropy from the environment.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hermitian::HermitianMatrix;
use crate::C64;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for a named consumer of `seed`.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, folded into the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}

fn gaussian(rng: &mut SeededRng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Gaussian vector supported on levels `0..=top`, normalised to unit length.
pub fn unit_vector(rng: &mut SeededRng, dim: usize, top: usize) -> DVector<C64> {
    let top = top.min(dim - 1);
    let mut v = DVector::zeros(dim);
    for n in 0..=top {
        v[n] = gaussian(rng);
    }
    let norm = v.norm();
    if norm == 0.0 {
        v[0] = C64::new(1.0, 0.0);
        return v;
    }
    v / C64::new(norm, 0.0)
}

/// Rank-one pure state `|v⟩⟨v|` supported on levels `0..=top`.
pub fn pure_state(rng: &mut SeededRng, dim: usize, top: usize) -> HermitianMatrix {
    HermitianMatrix::outer(&unit_vector(rng, dim, top))
}

/// Trace-one Gram matrix `G G* / Tr(G G*)` with `G` Gaussian on `0..=top`.
pub fn mixed_state(rng: &mut SeededRng, dim: usize, top: usize) -> HermitianMatrix {
    let top = top.min(dim - 1);
    let mut g = DMatrix::zeros(dim, dim);
    for i in 0..=top {
        for j in 0..=top {
            g[(i, j)] = gaussian(rng);
        }
    }
    let gram = &g * g.adjoint();
    let tr: f64 = gram.diagonal().iter().map(|z| z.re).sum();
    HermitianMatrix::new(gram / C64::new(tr, 0.0)).expect("Gram matrix is Hermitian")
}

/// Alternates pure and mixed states; index `k` decides which.
pub fn psd_state(rng: &mut SeededRng, dim: usize, top: usize, k: usize) -> HermitianMatrix {
    if k.is_multiple_of(2) {
        pure_state(rng, dim, top)
    } else {
        mixed_state(rng, dim, top)
    }
}

/// GUE-like Hermitian matrix on `0..=top`, scaled to unit trace norm.
pub fn hermitian(rng: &mut SeededRng, dim: usize, top: usize) -> HermitianMatrix {
    let top = top.min(dim - 1);
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..=top {
        for j in 0..=top {
            m[(i, j)] = gaussian(rng);
        }
    }
    let h = HermitianMatrix::new((&m + m.adjoint()) * C64::new(0.5, 0.0)).expect("symmetrised");
    let norm = h.trace_norm();
    if norm == 0.0 {
        return h;
    }
    h.scale(1.0 / norm)
}

/// Arbitrary complex matrix with Gaussian entries (not Hermitian).
pub fn complex_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samplers_are_reproducible_and_supported() {
        let a = pure_state(&mut rng(7), 6, 3);
        let b = pure_state(&mut rng(7), 6, 3);
        assert_eq!(a, b);
        assert!(a.support_top(0.0).unwrap() <= 3);
        let m = mixed_state(&mut rng(1), 5, 4);
        assert!((m.trace() - 1.0).abs() < 1e-12);
        assert!(m.is_psd(1e-12).psd);
        let h = hermitian(&mut rng(2), 5, 2);
        assert!((h.trace_norm() - 1.0).abs() < 1e-12);
        assert!(h.support_top(0.0).unwrap() <= 2);
    }

    #[test]
    fn derived_seeds_differ_by_tag() {
        assert_ne!(derive_seed(42, "a"), derive_seed(42, "b"));
        assert_eq!(derive_seed(42, "a"), derive_seed(42, "a"));
    }
}
