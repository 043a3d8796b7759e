// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 failed check, 2 usage or configuration error.

mod commands;
mod config;
mod output;

pub use config::{RunConfig, CONFIG_KEYS};
pub use output::fmt_num;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Result;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "katoreg",
    version,
    about = "Regularised dynamical semigroups of a truncated damped oscillator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every check and write reports.json.
    Verify(Common),
    /// Evolve an initial state and write trajectory.csv.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// `H` (sub-semigroup), `full` or `regularized`.
        #[arg(long)]
        generator: Option<String>,
        /// `basis:N`, `seeded` or `file:PATH`.
        #[arg(long)]
        state: Option<String>,
    },
    /// Sweep one axis and write study.csv.
    Study {
        #[command(flatten)]
        common: Common,
        /// `cutoff`, `kato`, `euler` or `truncation`.
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Scan the coherence counterexample and write counterexample.csv.
    Counterexample {
        #[command(flatten)]
        common: Common,
        #[arg(long = "k", value_delimiter = ',')]
        k_values: Option<Vec<usize>>,
        #[arg(long = "lambda", value_delimiter = ',')]
        lambda_values: Option<Vec<f64>>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` file or a previous manifest.json.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    buffer: Option<usize>,
    #[arg(long)]
    energy: Option<f64>,
    #[arg(long)]
    sigma_minus: Option<f64>,
    #[arg(long)]
    sigma_plus: Option<f64>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    index: Option<usize>,
    #[arg(long)]
    kato_r: Option<f64>,
    #[arg(long)]
    time_start: Option<f64>,
    #[arg(long)]
    time_stop: Option<f64>,
    #[arg(long)]
    time_steps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    euler_steps: Option<Vec<usize>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    strict_iii: bool,
    #[arg(long)]
    require_markov: bool,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        take!(
            dim,
            buffer,
            energy,
            sigma_minus,
            sigma_plus,
            family,
            index,
            kato_r,
            time_start,
            time_stop,
            time_steps,
            euler_steps,
            seed,
            out_dir
        );
        if self.samples.is_some() {
            cfg.samples = self.samples;
        }
        cfg.strict_iii |= self.strict_iii;
        cfg.require_markov |= self.require_markov;
        Ok(cfg)
    }
}

fn resolve(cmd: &Command) -> Result<(&'static str, RunConfig)> {
    Ok(match cmd {
        Command::Verify(common) => ("verify", common.resolve()?),
        Command::Evolve {
            common,
            generator,
            state,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(g) = generator {
                cfg.generator = g.clone();
            }
            if let Some(s) = state {
                cfg.state = s.clone();
            }
            ("evolve", cfg)
        }
        Command::Study {
            common,
            axis,
            values,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(a) = axis {
                cfg.axis = a.clone();
            }
            if let Some(v) = values {
                cfg.values = v.clone();
            }
            ("study", cfg)
        }
        Command::Counterexample {
            common,
            k_values,
            lambda_values,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(k) = k_values {
                cfg.k_values = k.clone();
            }
            if let Some(l) = lambda_values {
                cfg.lambda_values = l.clone();
            }
            ("counterexample", cfg)
        }
    })
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (name, cfg) = match resolve(&cli.command).and_then(|(n, c)| c.validate().map(|_| (n, c))) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let outcome = match name {
        "verify" => commands::verify(&cfg),
        "evolve" => commands::evolve(&cfg),
        "study" => commands::study(&cfg),
        _ => commands::counterexample(&cfg),
    };
    match outcome {
        Ok(code) => code,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(commands::Failure::Check(msg)) => {
            eprintln!("failed: {msg}");
            EXIT_CHECK_FAILED
        }
    }
}
