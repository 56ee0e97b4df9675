use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use a1gm::bench::to_json;
use a1gm::data::{gen_corner_missing, gen_grid_missing, load_csv, CsvOptions, Dataset};
use a1gm::grid::{a1gm_factors, build_permutations, split_blocks};
use a1gm::infogeo::{
    block_eta_violation, check_simultaneous_rank1, max_one_body_eta_gap, model_from_triple,
};
use a1gm::matrix::masked_kl_outer;
use a1gm::{run_compare, Error, ErrorKind, IterativeConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Closed-form rank-1 KL NMF for matrices with missing values.
#[derive(Parser)]
#[command(name = "a1gm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factorize a CSV matrix and print c, d and the masked cost.
    Factorize {
        #[command(flatten)]
        input: InputArgs,
        /// Also write the JSON result to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare A1GM with KL-WNMF on a CSV matrix.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Compare A1GM with KL-WNMF on synthetic data, one report per size.
    Bench {
        #[arg(long, value_enum)]
        synthetic: Synthetic,
        /// Matrix sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        size: Vec<usize>,
        /// Fraction of missing entries.
        #[arg(long, default_value_t = 0.05)]
        frac: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check the structure of the A1GM output in θ/η coordinates.
    Verify {
        #[command(flatten)]
        input: InputArgs,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Extra cell values treated as missing (added to "", NA, NaN, ?).
    #[arg(long = "missing-token")]
    missing_tokens: Vec<String>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Seed of the first WNMF trial; trial k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 200)]
    max_iter: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Synthetic {
    Corner,
    Grid,
}

#[derive(Serialize)]
struct FactorizeReport {
    dataset: String,
    shape: (usize, usize),
    n_missing: usize,
    expanded_missing: usize,
    increase_rate: f64,
    masked_cost: f64,
    expanded_masked_cost: f64,
    c: Vec<f64>,
    d: Vec<f64>,
}

#[derive(Serialize)]
struct VerifyReport {
    dataset: String,
    max_theta_violation: f64,
    max_eta_violation: f64,
    block_eta_violation: f64,
    max_one_body_eta_gap: f64,
}

impl InputArgs {
    fn load(&self) -> a1gm::Result<Dataset> {
        if !self.delimiter.is_ascii() {
            return Err(Error::InvalidArgument(format!(
                "delimiter must be ASCII, got {:?}",
                self.delimiter
            )));
        }
        let mut opts = CsvOptions {
            delimiter: self.delimiter as u8,
            ..Default::default()
        };
        opts.missing_tokens
            .extend(self.missing_tokens.iter().cloned());
        load_csv(&self.input, &opts)
    }
}

impl SolverArgs {
    fn config(&self) -> IterativeConfig {
        IterativeConfig {
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
            ..Default::default()
        }
    }
}

fn factorize(ds: &Dataset) -> a1gm::Result<FactorizeReport> {
    let f = a1gm_factors(&ds.phi, &ds.t)?;
    let masked_cost = masked_kl_outer(&ds.phi, &ds.t, &f.c, &f.d)?;
    let grid = a1gm::expand_to_grid(&ds.phi)?;
    let expanded_masked_cost = masked_kl_outer(&grid.mask, &ds.t, &f.c, &f.d)?;
    Ok(FactorizeReport {
        dataset: ds.name.clone(),
        shape: ds.t.shape(),
        n_missing: f.original_missing,
        expanded_missing: f.expanded_missing,
        increase_rate: f.increase_rate,
        masked_cost,
        expanded_masked_cost,
        c: f.c,
        d: f.d,
    })
}

fn verify(ds: &Dataset) -> a1gm::Result<VerifyReport> {
    let f = a1gm_factors(&ds.phi, &ds.t)?;
    let (rows, cols) = ds.t.shape();
    let (k1, k2) = (f.sets.rows.len(), f.sets.cols.len());
    let perms = build_permutations(&f.sets, rows, cols);
    let input = model_from_triple(&split_blocks(&ds.t, &perms, k1, k2))?;
    let output = model_from_triple(&split_blocks(&f.reconstruction(), &perms, k1, k2))?;
    let report = check_simultaneous_rank1(&output, 0.0);
    Ok(VerifyReport {
        dataset: ds.name.clone(),
        max_theta_violation: report.max_theta_violation,
        max_eta_violation: report.max_eta_violation,
        block_eta_violation: block_eta_violation(&output),
        max_one_body_eta_gap: max_one_body_eta_gap(&input, &output)?,
    })
}

fn run(cli: Cli) -> a1gm::Result<()> {
    match cli.command {
        Command::Factorize { input, out } => {
            let ds = input.load()?;
            let line = to_json(&factorize(&ds)?)?;
            if let Some(path) = out {
                fs::write(&path, format!("{line}\n"))?;
            }
            println!("{line}");
        }
        Command::Compare { input, solver } => {
            let ds = input.load()?;
            println!(
                "{}",
                to_json(&run_compare(&ds, &solver.config(), solver.trials)?)?
            );
        }
        Command::Bench {
            synthetic,
            size,
            frac,
            solver,
        } => {
            for n in size {
                let ds = match synthetic {
                    Synthetic::Corner => gen_corner_missing(n, frac, solver.seed)?,
                    Synthetic::Grid => gen_grid_missing(n, frac, solver.seed)?,
                };
                println!(
                    "{}",
                    to_json(&run_compare(&ds, &solver.config(), solver.trials)?)?
                );
            }
        }
        Command::Verify { input } => {
            let ds = input.load()?;
            println!("{}", to_json(&verify(&ds)?)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::InfeasibleMask => 3,
                ErrorKind::Numeric => 4,
            })
        }
    }
}
