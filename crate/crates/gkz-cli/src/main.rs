//! `gkz`: exact operators, volumes, curve data, and twisted period
//! quadrature for weighted systems on the one-dimensional torus.
//!
//! Reports go to stdout as JSON with a fixed key order; diagnostics go to
//! stderr. Exit codes: 0 success, 2 invalid input or arguments, 3 numeric
//! failure, 1 internal error.

mod problem;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use problem::{build_system, parse_problem, read_input};
use report::PeriodSettings;

#[derive(Debug)]
pub enum Failure {
    Parse(String),
    Validation(String),
    Numeric(String),
    Internal(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Parse(_) | Failure::Validation(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Parse(m) => write!(f, "parse error: {m}"),
            Failure::Validation(m) => write!(f, "validation error: {m}"),
            Failure::Numeric(m) => write!(f, "numeric error: {m}"),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gkz",
    version,
    about = "Weighted torus systems on the line: exact operators, volumes, curve data, and twisted periods"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

const INPUT_HELP: &str = "problem JSON path, or - for stdin";

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a problem file, reporting the hypothesis flag.
    Validate {
        #[arg(help = INPUT_HELP)]
        input: String,
    },
    /// Print the first-order operators and the bounded higher-order ones.
    Operators {
        #[arg(help = INPUT_HELP)]
        input: String,
        /// Total-degree bound for the higher-order enumeration.
        #[arg(long)]
        max_degree: Option<usize>,
    },
    /// Print the normalized volume of the weight configuration.
    Volume {
        #[arg(help = INPUT_HELP)]
        input: String,
    },
    /// Print divisor coefficients, monodromy exponents, and the dimension
    /// table of the associated punctured line.
    Toric {
        #[arg(help = INPUT_HELP)]
        input: String,
    },
    /// Print the predicted solution rank next to the volume.
    Rank {
        #[arg(help = INPUT_HELP)]
        input: String,
    },
    /// Integrate the twisted form over the admissible circles and report
    /// the numeric period rank.
    Periods {
        #[arg(help = INPUT_HELP)]
        input: String,
        /// JSON file with the evaluation point (overrides the problem's x).
        #[arg(long)]
        at: Option<PathBuf>,
        /// Fixed node count; disables automatic refinement.
        #[arg(long)]
        nodes: Option<usize>,
        /// Rank tolerance for the period matrix.
        #[arg(long)]
        tol: Option<f64>,
        /// Highest coefficient-derivative order entering the period matrix.
        #[arg(long)]
        max_order: Option<usize>,
    },
    /// Exercise the one-variable twisted quotient: apply the derivation to a
    /// sample class, test the obstruction functional, and solve back.
    CokernelDemo {
        /// Twist parameter (non-integral rational).
        #[arg(long, default_value = "-1/2", allow_hyphen_values = true)]
        beta: String,
        /// Value of the multiplier at the sample point.
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        g: String,
    },
    /// Aggregate every applicable section into one report.
    Report {
        #[arg(help = INPUT_HELP)]
        input: String,
    },
}

fn render<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))
}

fn load(input: &str) -> Result<(problem::ProblemFile, gkz::system::GkzSystem<gkz::Int>), Failure> {
    let bytes = read_input(input)?;
    let p = parse_problem(&bytes)?;
    let sys = build_system(&p)?;
    Ok((p, sys))
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.cmd {
        Cmd::Validate { input } => {
            let (_, sys) = load(&input)?;
            render(&report::validate_report(&sys)?)
        }
        Cmd::Operators { input, max_degree } => {
            let (p, sys) = load(&input)?;
            if let Some(d) = max_degree {
                problem::check_degree_bound(d, "--max-degree")?;
            }
            render(&report::operators_report(&sys, max_degree.or(p.degree_bound))?)
        }
        Cmd::Volume { input } => {
            let (_, sys) = load(&input)?;
            render(&report::volume_report(&sys)?)
        }
        Cmd::Toric { input } => {
            let (_, sys) = load(&input)?;
            render(&report::toric_report(&sys)?)
        }
        Cmd::Rank { input } => {
            let (_, sys) = load(&input)?;
            render(&report::rank_report(&sys)?)
        }
        Cmd::Periods {
            input,
            at,
            nodes,
            tol,
            max_order,
        } => {
            let (p, sys) = load(&input)?;
            if let Some(n) = nodes {
                problem::check_nodes(n, "--nodes")?;
            }
            if let Some(t) = tol {
                problem::check_tol(t, "--tol")?;
            }
            if let Some(k) = max_order {
                problem::check_max_order(k, "--max-order")?;
            }
            let settings = PeriodSettings::resolve(&p, nodes, tol, max_order);
            let point = problem::evaluation_point(&p, at.as_deref())?;
            render(&report::periods_report(&sys, &point, &settings)?)
        }
        Cmd::CokernelDemo { beta, g } => render(&report::cokernel_report(&beta, &g)?),
        Cmd::Report { input } => {
            let (p, sys) = load(&input)?;
            render(&report::full_report(&sys, &p)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 0 for --help/--version and 2 for usage errors
            e.exit();
        }
    };
    match run(cli) {
        Ok(json) => {
            use std::io::Write as _;
            match writeln!(std::io::stdout(), "{json}") {
                Ok(()) => ExitCode::SUCCESS,
                // a closed pipe on the consumer side is not our failure
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("internal error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
