// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

//! Truncated one-mode Fock space.
//!
//! Every operator here is the compression to `span{e_0, …, e_{D-1}}` of its
//! infinite-dimensional counterpart. `b*b` stays exact under that rule; the
//! single casualty is `b b*`, whose top diagonal entry is `0` instead of `D`
//! because the transition `e_{D-1} → e_D` leaves the truncated space. See
//! [`commutation_defect`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Truncation dimension, edge buffer and numerical tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    /// Number of retained levels `D`; basis `e_0..e_{D-1}`.
    pub dim: usize,
    /// Levels next to the cut that interior-only statements keep clear of.
    pub buffer: usize,
    pub psd_tol: f64,
    pub eq_tol: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            dim: 40,
            buffer: 4,
            psd_tol: 1e-9,
            eq_tol: 1e-10,
        }
    }
}

impl TruncationConfig {
    pub fn new(dim: usize, buffer: usize) -> Result<Self> {
        let cfg = Self {
            dim,
            buffer,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tolerances(mut self, psd_tol: f64, eq_tol: f64) -> Result<Self> {
        self.psd_tol = psd_tol;
        self.eq_tol = eq_tol;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::OutOfRange {
                what: "dim",
                value: self.dim as f64,
                bound: "dim >= 2".into(),
            });
        }
        if self.buffer > self.dim - 2 {
            return Err(Error::OutOfRange {
                what: "buffer",
                value: self.buffer as f64,
                bound: format!("buffer <= dim - 2 = {}", self.dim - 2),
            });
        }
        for (what, v) in [("psd_tol", self.psd_tol), ("eq_tol", self.eq_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::OutOfRange {
                    what,
                    value: v,
                    bound: "positive and finite".into(),
                });
            }
        }
        Ok(())
    }

    /// Highest level an interior state may occupy: `D - 1 - buffer`.
    pub fn interior_top(&self) -> usize {
        self.dim - 1 - self.buffer
    }
}

/// A `D × D` complex matrix acting on the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    entries: DMatrix<C64>,
    label: String,
}

impl FockOperator {
    pub fn new(entries: DMatrix<C64>, label: impl Into<String>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        if entries
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite("Fock operator entries".into()));
        }
        Ok(Self {
            entries,
            label: label.into(),
        })
    }

    fn from_diagonal(values: impl IntoIterator<Item = C64>, dim: usize, label: &str) -> Self {
        let diag = DVector::from_iterator(dim, values);
        Self {
            entries: DMatrix::from_diagonal(&diag),
            label: label.into(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
            label: "I".into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            label: format!("({})*", self.label),
        }
    }

    /// Operator product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        check_dims(self.dim(), rhs.dim())?;
        Ok(Self {
            entries: &self.entries * &rhs.entries,
            label: format!("{}·{}", self.label, rhs.label),
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        check_dims(self.dim(), rhs.dim())?;
        Ok(Self {
            entries: &self.entries + &rhs.entries,
            label: format!("{} + {}", self.label, rhs.label),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        check_dims(self.dim(), rhs.dim())?;
        Ok(Self {
            entries: &self.entries - &rhs.entries,
            label: format!("{} - {}", self.label, rhs.label),
        })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            entries: &self.entries * c,
            label: format!("({c})·{}", self.label),
        }
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        check_dims(self.dim(), v.len())?;
        Ok(&self.entries * v)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `b e_n = √n e_{n-1}`.
pub fn annihilation(cfg: &TruncationConfig) -> FockOperator {
    let d = cfg.dim;
    let mut m = DMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = real((n as f64).sqrt());
    }
    FockOperator {
        entries: m,
        label: "b".into(),
    }
}

/// `b* e_n = √(n+1) e_{n+1}`, with `b* e_{D-1} = 0`.
pub fn creation(cfg: &TruncationConfig) -> FockOperator {
    annihilation(cfg).adjoint().with_label("b*")
}

/// `n̂ = b*b = diag(0, 1, …, D-1)`.
pub fn number_op(cfg: &TruncationConfig) -> FockOperator {
    FockOperator::from_diagonal((0..cfg.dim).map(|n| real(n as f64)), cfg.dim, "n")
}

/// `h = E n̂`.
pub fn hamiltonian(energy: f64, cfg: &TruncationConfig) -> Result<FockOperator> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::OutOfRange {
            what: "energy",
            value: energy,
            bound: "E > 0".into(),
        });
    }
    Ok(FockOperator::from_diagonal(
        (0..cfg.dim).map(|n| real(energy * n as f64)),
        cfg.dim,
        "h",
    ))
}

/// Spectral projector of `n̂` onto levels `0..=n_max`.
pub fn projector(n_max: usize, cfg: &TruncationConfig) -> Result<FockOperator> {
    if n_max >= cfg.dim {
        return Err(Error::OutOfRange {
            what: "N",
            value: n_max as f64,
            bound: format!("0 <= N <= {}", cfg.dim - 1),
        });
    }
    Ok(FockOperator::from_diagonal(
        (0..cfg.dim).map(|n| real(if n <= n_max { 1.0 } else { 0.0 })),
        cfg.dim,
        &format!("P_{n_max}"),
    ))
}

/// `e^{-s n̂}`.
pub fn exp_tilt(s: f64, cfg: &TruncationConfig) -> Result<FockOperator> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::OutOfRange {
            what: "s",
            value: s,
            bound: "s >= 0".into(),
        });
    }
    Ok(FockOperator::from_diagonal(
        (0..cfg.dim).map(|n| real((-s * n as f64).exp())),
        cfg.dim,
        "exp(-s n)",
    ))
}

/// `(I + c n̂)^{-1}` for `c >= 0`.
pub fn inverse_shifted_number(c: f64, cfg: &TruncationConfig) -> FockOperator {
    FockOperator::from_diagonal(
        (0..cfg.dim).map(|n| real(1.0 / (1.0 + c * n as f64))),
        cfg.dim,
        "(I + c n)^-1",
    )
}

/// `b b* − b* b − I`: zero on levels `0..=D-2`, `−D` at `(D-1, D-1)`.
pub fn commutation_defect(cfg: &TruncationConfig) -> FockOperator {
    let b = annihilation(cfg).into_matrix();
    let bd = b.adjoint();
    let m = &b * &bd - &bd * &b - DMatrix::<C64>::identity(cfg.dim, cfg.dim);
    FockOperator {
        entries: m,
        label: "[b, b*] - I".into(),
    }
}

/// Basis vector `e_n`.
pub fn basis_vector(n: usize, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    v[n] = real(1.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(d: usize) -> TruncationConfig {
        TruncationConfig::new(d, 0).unwrap()
    }

    #[test]
    fn annihilation_entries() {
        let b = annihilation(&cfg(2));
        assert_eq!(b.matrix()[(0, 1)], real(1.0));
        assert_eq!(b.matrix()[(1, 0)], real(0.0));
        assert_eq!(b.matrix()[(0, 0)], real(0.0));

        let b3 = annihilation(&cfg(3));
        assert!((b3.matrix()[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        let out = b.apply(&basis_vector(0, 2)).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn creation_is_adjoint_and_drops_top_transition() {
        for d in 2..8 {
            let c = cfg(d);
            assert_eq!(creation(&c).matrix(), &annihilation(&c).matrix().adjoint());
        }
        assert_eq!(creation(&cfg(2)).matrix()[(1, 0)], real(1.0));
        let out = creation(&cfg(3)).apply(&basis_vector(2, 3)).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn number_operator_products() {
        let c = cfg(4);
        let n = number_op(&c);
        let prod = creation(&c).compose(&annihilation(&c)).unwrap();
        assert!((n.matrix() - prod.matrix()).norm() < 1e-14);

        let c3 = cfg(3);
        let ab = annihilation(&c3).compose(&creation(&c3)).unwrap();
        let expected = [1.0, 2.0, 0.0];
        for (i, e) in expected.iter().enumerate() {
            assert!((ab.matrix()[(i, i)].re - e).abs() < 1e-14);
        }
    }

    #[test]
    fn hamiltonian_scales_number_operator() {
        let h = hamiltonian(2.5, &cfg(2)).unwrap();
        assert_eq!(h.matrix()[(1, 1)], real(2.5));
        assert!(hamiltonian(0.0, &cfg(2)).is_err());
        let c = cfg(5);
        let h = hamiltonian(1.7, &c).unwrap();
        assert!((h.scale(real(1.0 / 1.7)).matrix() - number_op(&c).matrix()).norm() < 1e-14);
    }

    #[test]
    fn projector_laws() {
        let c = cfg(5);
        assert_eq!(projector(4, &c).unwrap().matrix(), &DMatrix::identity(5, 5));
        assert!(projector(5, &c).is_err());
        let p0 = projector(0, &cfg(2)).unwrap();
        assert_eq!(p0.matrix()[(0, 0)], real(1.0));
        assert_eq!(p0.matrix()[(1, 1)], real(0.0));
        let n = number_op(&c);
        for k in 0..5 {
            let p = projector(k, &c).unwrap();
            let p2 = p.compose(&p).unwrap();
            assert_eq!(p2.matrix(), p.matrix());
            assert_eq!(p.adjoint().matrix(), p.matrix());
            let comm = p.compose(&n).unwrap().sub(&n.compose(&p).unwrap()).unwrap();
            assert_eq!(comm.max_abs(), 0.0);
        }
    }

    #[test]
    fn tilt_is_decreasing() {
        let c = cfg(4);
        assert_eq!(
            exp_tilt(0.0, &c).unwrap().matrix(),
            &DMatrix::identity(4, 4)
        );
        let t = exp_tilt(0.3, &cfg(2)).unwrap();
        assert!((t.matrix()[(1, 1)].re - (-0.3f64).exp()).abs() < 1e-15);
        let t = exp_tilt(0.7, &c).unwrap();
        for n in 1..4 {
            assert!(t.matrix()[(n, n)].re < t.matrix()[(n - 1, n - 1)].re);
        }
        assert!(exp_tilt(-0.1, &c).is_err());
    }

    #[test]
    fn commutation_defect_lives_on_top_level() {
        let d2 = commutation_defect(&cfg(2));
        assert!((d2.matrix()[(0, 0)]).norm() < 1e-14);
        assert!((d2.matrix()[(1, 1)].re + 2.0).abs() < 1e-14);
        for d in [5, 9, 16] {
            let m = commutation_defect(&cfg(d));
            for i in 0..d {
                for j in 0..d {
                    if i == d - 1 && j == d - 1 {
                        assert!((m.matrix()[(i, j)].re + d as f64).abs() < 1e-12);
                    } else {
                        assert!(m.matrix()[(i, j)].norm() < 1e-12, "({i},{j}) at D={d}");
                    }
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(TruncationConfig::new(1, 0).is_err());
        assert!(TruncationConfig::new(4, 3).is_err());
        assert!(TruncationConfig::new(4, 2).is_ok());
        assert!(TruncationConfig::default()
            .with_tolerances(0.0, 1e-10)
            .is_err());
        assert_eq!(TruncationConfig::default().interior_top(), 35);
    }
}
