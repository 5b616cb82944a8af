use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncftap::commands::{self, CliError, Generator, EXIT_INPUT};
use ncftap_core::ftap::{SolverKind, DEFAULT_TOL_POS};

/// Decide whether a finite quantum market admits a faithful martingale state or an
/// arbitrage, with certificates that can be re-verified.
#[derive(Parser)]
#[command(name = "ncftap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide EMS versus arbitrage (exit 0 EMS, 2 ARBITRAGE, 3 UNDECIDED, 1 input error).
    Check(CheckArgs),
    /// Stochastic integral of a strategy or biprocess file (or `identity`).
    Integrate(IntegrateArgs),
    /// Write a generated market file.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
        /// Output path; stdout when absent.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Print every filtration and process residual (exit 0 iff all pass).
    Validate {
        path: PathBuf,
        #[command(flatten)]
        tol: Tol,
    },
    /// Re-check a verdict written by `check --json` (exit 0 verified, 4 rejected).
    Verify {
        market: PathBuf,
        verdict: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Tol {
    /// Residual tolerance.
    #[arg(long, env = "NCFTAP_TOL", default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Barrier,
    Supergradient,
}

#[derive(Args)]
#[group(required = true, multiple = false, args = ["path", "batch"])]
struct CheckArgs {
    path: Option<PathBuf>,
    /// Check every *.json file in a directory.
    #[arg(long)]
    batch: Option<PathBuf>,
    #[command(flatten)]
    tol: Tol,
    /// Faithfulness margin a density must clear.
    #[arg(long = "tol-pos", default_value_t = DEFAULT_TOL_POS)]
    tol_pos: f64,
    #[arg(long, value_enum, default_value_t = Solver::Barrier)]
    solver: Solver,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct IntegrateArgs {
    path: PathBuf,
    /// `identity` or a strategy file.
    strategy: String,
    /// Window start; defaults to the first grid time.
    #[arg(long)]
    from: Option<f64>,
    /// Window end; defaults to the last grid time.
    #[arg(long)]
    to: Option<f64>,
    #[command(flatten)]
    tol: Tol,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Classical binomial tree embedded as a diagonal market.
    Classical {
        #[arg(long, default_value_t = 1.0)]
        spot: f64,
        #[arg(long)]
        up: f64,
        #[arg(long)]
        down: f64,
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        #[arg(long, default_value_t = 1)]
        periods: usize,
    },
    /// Quantum binomial market with rotated per-period bases.
    Qbinomial {
        #[arg(long, default_value_t = 1.0)]
        spot: f64,
        #[arg(long)]
        up: f64,
        #[arg(long)]
        down: f64,
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        #[arg(long, default_value_t = 1)]
        periods: usize,
        /// Basis angle; once for all periods or once per period.
        #[arg(long = "angle", allow_negative_numbers = true)]
        angles: Vec<f64>,
    },
    /// Seeded random market.
    Random {
        #[arg(long)]
        seed: u64,
        /// Block sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,2")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        periods: usize,
        /// Plant a faithful martingale state.
        #[arg(long)]
        martingale: bool,
    },
}

impl From<GenerateKind> for Generator {
    fn from(k: GenerateKind) -> Self {
        match k {
            GenerateKind::Classical {
                spot,
                up,
                down,
                rate,
                periods,
            } => Generator::Classical {
                spot,
                up,
                down,
                rate,
                periods,
            },
            GenerateKind::Qbinomial {
                spot,
                up,
                down,
                rate,
                periods,
                angles,
            } => Generator::QuantumBinomial {
                spot,
                up,
                down,
                rate,
                periods,
                angles,
            },
            GenerateKind::Random {
                seed,
                dims,
                periods,
                martingale,
            } => Generator::Random {
                seed,
                dims,
                periods,
                martingale,
            },
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let mut stdout = std::io::stdout().lock();
    let out = &mut stdout;
    match cli.command {
        Command::Check(a) => {
            let solver = match a.solver {
                Solver::Barrier => SolverKind::Barrier,
                Solver::Supergradient => SolverKind::Supergradient,
            };
            let opts = commands::solver_options(a.tol.tol, a.tol_pos, solver)?;
            match (a.path, a.batch) {
                (_, Some(dir)) => commands::check_batch(&dir, &opts, a.json, out),
                (Some(path), None) => commands::check(&path, &opts, a.json, out),
                (None, None) => unreachable!("clap requires a path or --batch"),
            }
        }
        Command::Integrate(a) => {
            commands::integrate(&a.path, &a.strategy, a.from, a.to, a.tol.tol, a.json, out)
        }
        Command::Generate { kind, out: path } => {
            let text = commands::generate(&kind.into())?;
            match path {
                Some(p) => std::fs::write(&p, text).map_err(|source| CliError::Io { path: p, source })?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(0)
        }
        Command::Validate { path, tol } => commands::validate(&path, tol.tol, out),
        Command::Verify {
            market,
            verdict,
            json,
        } => commands::verify(&market, &verdict, json, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
