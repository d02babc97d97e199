//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification suite reported failures, 2 usage,
//! configuration, or runtime error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::chaos::{cond_exp_monomial, single_term};
use crate::closure::{solve_closure, write_csv};
use crate::error::{Error, Result};
use crate::hermite::{hermite_phys, hermite_prob};
use crate::io::{chaos_to_doc, matrix_to_rows, read_document, ClosureConfig, CondExpConfig, SampleConfig};
use crate::measure::sample_mu_a;
use crate::verify::{run_suite, Suite, Tolerances, VerifyOptions};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "SEQGAUSS_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "seqgauss", version, about = "Gaussian analysis on truncated sequence spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Core,
    Hermite,
    Wick,
    Measure,
    Chaos,
    Closure,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Core => Suite::Core,
            SuiteArg::Hermite => Suite::Hermite,
            SuiteArg::Wick => Suite::Wick,
            SuiteArg::Measure => Suite::Measure,
            SuiteArg::Chaos => Suite::Chaos,
            SuiteArg::Closure => Suite::Closure,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    /// Probabilists' H_n.
    Prob,
    /// Physicists' H_n.
    Phys,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a module's invariant suite.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        /// Monte Carlo sample count.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Tolerance override, `name=value`; repeatable.
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
    },
    /// Draw samples of mu_A and write them as CSV.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
    },
    /// Conditional expectation of <f, .> given sequence directions.
    Condexp {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the moment-closure solver and write snapshots as CSV.
    Closure {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate Hermite polynomials as CSV (n, x, value).
    Hermite {
        #[arg(long)]
        max_n: usize,
        #[arg(long, value_enum, default_value_t = Convention::Prob)]
        convention: Convention,
        #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
        x_min: f64,
        #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
        x_max: f64,
        #[arg(long, default_value_t = 13)]
        points: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

/// Runs one command, writing reports to `out`.
pub fn execute(command: Command, out: &mut impl Write) -> Result<i32> {
    match command {
        Command::Verify { suite, seed, samples, tol } => {
            let opts = verify_options(seed, samples, &tol)?;
            let outcomes = run_suite(suite.into(), &opts);
            let failed: Vec<_> = outcomes.iter().filter(|c| !c.passed).collect();
            for c in &outcomes {
                writeln!(out, "{c}")?;
            }
            if failed.is_empty() {
                writeln!(out, "{} checks passed", outcomes.len())?;
                Ok(EXIT_OK)
            } else {
                writeln!(out, "{} of {} checks failed:", failed.len(), outcomes.len())?;
                for c in failed {
                    writeln!(out, "  {}", c.name)?;
                }
                Ok(EXIT_FAILED)
            }
        }
        Command::Sample { config, out: path, count, seed } => {
            let cfg: SampleConfig = read_document(&config)?;
            let (a, dims) = cfg.resolve()?;
            if count == 0 {
                return Err(Error::config("count", "must be positive"));
            }
            let batch = sample_mu_a(&a, dims, count, seed)?;
            batch.write_csv(create(&path)?)?;
            writeln!(out, "wrote {count} samples ({dims}) to {}", path.display())?;
            Ok(EXIT_OK)
        }
        Command::Condexp { config } => {
            let cfg: CondExpConfig = read_document(&config)?;
            let input = cfg.resolve()?;
            let pf = cond_exp_monomial(&input.f, &input.xs, &input.a)?;
            writeln!(out, "Pf =")?;
            for row in pf.to_rows() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:>14.8}")).collect();
                writeln!(out, "  {}", cells.join(" "))?;
            }
            let doc = serde_json::json!({
                "Pf": matrix_to_rows(pf.matrix()),
                "chaos": chaos_to_doc(&single_term(1.0, pf, 1)),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            Ok(EXIT_OK)
        }
        Command::Closure { config, out: path } => {
            let cfg: ClosureConfig = read_document(&config)?;
            let run = cfg.resolve()?;
            let snaps = solve_closure(
                &run.initial,
                &run.params,
                &run.spec,
                run.t_end,
                run.dt,
                run.stride,
                run.cfl,
            )?;
            write_csv(&snaps, run.params.grid(), create(&path)?)?;
            writeln!(out, "wrote {} snapshots to {}", snaps.len(), path.display())?;
            Ok(EXIT_OK)
        }
        Command::Hermite { max_n, convention, x_min, x_max, points, out: path } => {
            if points == 0 {
                return Err(Error::config("points", "must be positive"));
            }
            if !(x_min.is_finite() && x_max.is_finite() && x_min <= x_max) {
                return Err(Error::config("x-min", "grid bounds must be finite with x-min <= x-max"));
            }
            let eval = match convention {
                Convention::Prob => hermite_prob,
                Convention::Phys => hermite_phys,
            };
            let mut table = String::from("n,x,value\n");
            for n in 0..=max_n {
                for i in 0..points {
                    let x = if points == 1 {
                        x_min
                    } else {
                        x_min + (x_max - x_min) * i as f64 / (points - 1) as f64
                    };
                    // + 0.0 folds -0 into 0
                    table.push_str(&format!("{n},{x},{}\n", eval(n, x) + 0.0));
                }
            }
            match path {
                Some(p) => create(&p)?.write_all(table.as_bytes())?,
                None => out.write_all(table.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn verify_options(seed: u64, samples: usize, overrides: &[String]) -> Result<VerifyOptions> {
    if samples < 2 {
        return Err(Error::config("samples", "need at least 2 samples"));
    }
    let mut tol = Tolerances::default();
    for o in overrides {
        let (name, value) = o
            .split_once('=')
            .ok_or_else(|| Error::config("tol", format!("`{o}` is not of the form name=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("tol.{name}"), format!("`{value}` is not a number")))?;
        tol.set(name.trim(), value)
            .map_err(|e| Error::config(format!("tol.{name}"), e.to_string()))?;
    }
    Ok(VerifyOptions { seed, samples, tol })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))
}
