// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a flat `key = value` file or a previous
//! `manifest.json`, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::TruncationConfig;
use crate::semigroup::{FamilyKind, Generator, ModelParams, RegularizationFamily};
use crate::verify::SampleCounts;

/// Keys accepted in a flat configuration file.
pub const CONFIG_KEYS: [&str; 17] = [
    "dim",
    "buffer",
    "energy",
    "sigma_minus",
    "sigma_plus",
    "family",
    "index",
    "kato_r",
    "time_start",
    "time_stop",
    "time_steps",
    "euler_steps",
    "samples",
    "seed",
    "out_dir",
    "strict_iii",
    "require_markov",
];

/// Fully resolved configuration, echoed verbatim into `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub buffer: usize,
    pub energy: f64,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    pub family: String,
    pub index: usize,
    pub kato_r: f64,
    pub time_start: f64,
    pub time_stop: f64,
    pub time_steps: usize,
    pub euler_steps: Vec<usize>,
    /// One count for every sampled check; `None` keeps 200/100/50.
    pub samples: Option<usize>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub strict_iii: bool,
    pub require_markov: bool,
    /// `H`, `full` or `regularized`.
    pub generator: String,
    /// `basis:N`, `seeded` or `file:PATH`.
    pub state: String,
    /// `cutoff`, `kato`, `euler` or `truncation`.
    pub axis: String,
    /// Axis values; empty selects the axis default.
    pub values: Vec<f64>,
    pub k_values: Vec<usize>,
    pub lambda_values: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 40,
            buffer: 4,
            energy: 1.0,
            sigma_minus: 1.0,
            sigma_plus: 0.25,
            family: FamilyKind::NumberCutoff.name().to_string(),
            index: 0,
            kato_r: 0.5,
            time_start: 0.0,
            time_stop: 1.0,
            time_steps: 11,
            euler_steps: (3..=10).map(|k| 1usize << k).collect(),
            samples: None,
            seed: 42,
            out_dir: PathBuf::from("out"),
            strict_iii: false,
            require_markov: false,
            generator: "full".into(),
            state: "basis:1".into(),
            axis: "kato".into(),
            values: Vec::new(),
            k_values: (2..=20).collect(),
            lambda_values: (1..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("config key `{key}`: cannot parse `{value}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    /// Sets one flat-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "dim" => self.dim = parse(key, v)?,
            "buffer" => self.buffer = parse(key, v)?,
            "energy" => self.energy = parse(key, v)?,
            "sigma_minus" => self.sigma_minus = parse(key, v)?,
            "sigma_plus" => self.sigma_plus = parse(key, v)?,
            "family" => self.family = v.to_string(),
            "index" => self.index = parse(key, v)?,
            "kato_r" => self.kato_r = parse(key, v)?,
            "time_start" => self.time_start = parse(key, v)?,
            "time_stop" => self.time_stop = parse(key, v)?,
            "time_steps" => self.time_steps = parse(key, v)?,
            "euler_steps" => self.euler_steps = parse_list(key, v)?,
            "samples" => self.samples = Some(parse(key, v)?),
            "seed" => self.seed = parse(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "strict_iii" => self.strict_iii = parse(key, v)?,
            "require_markov" => self.require_markov = parse(key, v)?,
            _ => return Err(Error::InvalidConfig(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    n + 1
                ))
            })?;
            cfg.set(key.trim(), value)?;
        }
        Ok(cfg)
    }

    /// Reads the `config` object of a manifest, or a bare configuration object.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("manifest: {e}")))?;
        let inner = value.get("config").cloned().unwrap_or(value);
        serde_json::from_value(inner)
            .map_err(|e| Error::InvalidConfig(format!("manifest config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_key_values(&text)
        }
    }

    pub fn model(&self) -> Result<ModelParams> {
        let trunc = TruncationConfig::new(self.dim, self.buffer)?;
        ModelParams::new(self.energy, self.sigma_minus, self.sigma_plus, trunc)
    }

    pub fn family_kind(&self) -> Result<FamilyKind> {
        FamilyKind::parse(&self.family).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "family `{}`: expected one of number_cutoff, compress_first, kato_scaling",
                self.family
            ))
        })
    }

    /// The configured family member: `index` for cut-offs, `kato_r` for scaling.
    pub fn family_member(&self) -> Result<RegularizationFamily> {
        let fam = match self.family_kind()? {
            FamilyKind::KatoScaling => RegularizationFamily::KatoScaling(self.kato_r),
            kind => kind.member(self.index as f64)?,
        };
        fam.validate(self.dim)?;
        Ok(fam)
    }

    pub fn generator_choice(&self) -> Result<Generator> {
        match self.generator.as_str() {
            "H" | "sub" => Ok(Generator::SubSemigroup),
            "full" => Ok(Generator::Full),
            "regularized" => Ok(Generator::Regularized(self.family_member()?)),
            other => Err(Error::InvalidConfig(format!(
                "generator `{other}`: expected H, full or regularized"
            ))),
        }
    }

    /// `time_steps` equally spaced points from `time_start` to `time_stop`.
    pub fn time_grid(&self) -> Result<Vec<f64>> {
        if self.time_steps == 0 {
            return Err(Error::InvalidConfig("time_steps must be at least 1".into()));
        }
        if self.time_steps == 1 {
            return Ok(vec![self.time_start]);
        }
        let h = (self.time_stop - self.time_start) / (self.time_steps - 1) as f64;
        Ok((0..self.time_steps)
            .map(|k| {
                if k + 1 == self.time_steps {
                    self.time_stop
                } else {
                    self.time_start + k as f64 * h
                }
            })
            .collect())
    }

    pub fn sample_counts(&self) -> SampleCounts {
        self.samples.map(SampleCounts::uniform).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        self.family_kind()?;
        self.time_grid()?;
        if self.samples == Some(0) {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_cover_every_key() {
        let text = "dim = 12\nbuffer=2\nenergy = 2\nsigma_minus = 1.5\nsigma_plus = 0.5 # comment\n\
                    family = compress_first\nindex = 3\nkato_r = 0.9\ntime_start = 0\ntime_stop = 2\n\
                    time_steps = 5\neuler_steps = 8, 16\nsamples = 7\nseed = 9\nout_dir = res\n\
                    strict_iii = true\nrequire_markov = true\n";
        let cfg = RunConfig::from_key_values(text).unwrap();
        assert_eq!(cfg.dim, 12);
        assert_eq!(cfg.euler_steps, vec![8, 16]);
        assert_eq!(cfg.samples, Some(7));
        assert!(cfg.strict_iii && cfg.require_markov);
        assert_eq!(
            cfg.family_member().unwrap(),
            RegularizationFamily::CompressFirst(3)
        );
        assert_eq!(cfg.time_grid().unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        for key in CONFIG_KEYS {
            assert!(text.contains(key));
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_key_values("dim = 10\nsigma_mnus = 1\n").unwrap_err();
        assert!(err.to_string().contains("sigma_mnus"));
        let err = RunConfig::from_key_values("dim 10\n").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn manifest_round_trip() {
        let cfg = RunConfig {
            dim: 16,
            samples: Some(3),
            ..RunConfig::default()
        };
        let manifest = serde_json::json!({ "command": "verify", "config": cfg });
        assert_eq!(RunConfig::from_json(&manifest.to_string()).unwrap(), cfg);
        let bad = serde_json::json!({ "config": { "dimm": 3 } });
        assert!(RunConfig::from_json(&bad.to_string())
            .unwrap_err()
            .to_string()
            .contains("dimm"));
    }

    #[test]
    fn single_point_grid() {
        let cfg = RunConfig {
            time_steps: 1,
            ..RunConfig::default()
        };
        assert_eq!(cfg.time_grid().unwrap(), vec![0.0]);
    }
}
