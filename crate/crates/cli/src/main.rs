//! `spinc`: batch runner for the verification suites.
//!
//! Exit status: 0 when every asserted check passes, 2 when one fails,
//! 1 on configuration or infrastructure errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinc_core::error::Error;
use spinc_core::runner::{self, Format, LambdaSpec, RunConfig};

/// Worker count for the parallel sections; unset means all cores.
const WORKERS_ENV: &str = "SPINC_WORKERS";

#[derive(Parser)]
#[command(name = "spinc", version, about = "Numerical checks of Spin^c spinor identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Named charts, immersions and cylinders.
    ListScenarios {
        #[arg(long)]
        json: bool,
    },
    /// Pointwise identity checks at seeded sample points.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(runner::VERIFY_CHECKS))]
        check: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Lattice Dirac spectrum.
    Spectrum(Opts),
    /// First variation of the Dirac operator under g + t k.
    Variation(Opts),
    /// First variation of the Einstein-Dirac type functional.
    Frkim(Opts),
    /// Eigenvalue lower bound and its limiting case.
    Bound(Opts),
}

#[derive(Args, Default)]
struct Opts {
    /// JSON config; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    immersion: Option<String>,
    #[arg(long)]
    cylinder: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    flux: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["T0", "T1"], allow_negative_numbers = true)]
    t_interval: Option<Vec<f64>>,
    #[arg(long)]
    eigs: Option<usize>,
    #[arg(long)]
    wilson: Option<f64>,
    /// conformal | diag-sin | generic | zero
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    amplitude: Option<f64>,
    /// plane-wave | superposition | parallel
    #[arg(long)]
    psi: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    /// A number or `auto`.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<String>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = ["json", "csv"])]
    format: Option<String>,
    #[arg(long)]
    dump_eigenvectors: Option<PathBuf>,
}

impl Opts {
    fn into_config(self, command: &str, check: Option<String>) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json(&std::fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        if !cfg.command.is_empty() && cfg.command != command {
            return Err(Error::Config(format!("config file is for `{}`, not `{command}`", cfg.command)));
        }
        cfg.command = command.into();
        macro_rules! overlay {
            ($($f:ident),*) => { $(if self.$f.is_some() { cfg.$f = self.$f; })* };
        }
        overlay!(scenario, immersion, cylinder, grid, flux, samples, seed, tol, h, eigs, wilson, k, amplitude, psi, eps, output, dump_eigenvectors);
        if check.is_some() {
            cfg.check = check;
        }
        if let Some(t) = self.t_interval {
            cfg.t_interval = Some([t[0], t[1]]);
        }
        if let Some(l) = self.lambda {
            cfg.lambda = Some(match l.parse::<f64>() {
                Ok(v) => LambdaSpec::Value(v),
                Err(_) => LambdaSpec::Keyword(l),
            });
        }
        if let Some(f) = self.format {
            cfg.format = Some(if f == "csv" { Format::Csv } else { Format::Json });
        }
        Ok(cfg)
    }
}

fn init_workers() -> Result<(), Error> {
    let Ok(v) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(Error::Config(format!("{WORKERS_ENV} must be positive")));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))
}

fn execute(cli: Cli) -> Result<bool, Error> {
    init_workers()?;
    let (name, check, opts) = match cli.command {
        Command::ListScenarios { json } => {
            let rows = runner::list_scenarios()?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rows)?);
            } else {
                print!("{}", runner::scenario_table(&rows));
            }
            return Ok(true);
        }
        Command::Verify { check, opts } => ("verify", Some(check), opts),
        Command::Spectrum(o) => ("spectrum", None, o),
        Command::Variation(o) => ("variation", None, o),
        Command::Frkim(o) => ("frkim", None, o),
        Command::Bound(o) => ("bound", None, o),
    };
    let cfg = opts.into_config(name, check)?;
    let report = runner::run(&cfg)?;
    let text = runner::render(&report, cfg.format.unwrap_or_default())?;
    match &cfg.output {
        Some(path) => {
            spinc_core::lattice::write_atomic(path, text.as_bytes())?;
            let s = &report.summary;
            println!("{}/{} asserted checks passed, worst ratio {:.3e}", s.passed, s.asserted, s.worst_ratio);
        }
        None => print!("{text}"),
    }
    for c in report.checks.iter().filter(|c| c.asserted && !c.pass) {
        eprintln!("FAIL {}: residual {:e} > tolerance {:e}", c.identity, c.residual, c.tolerance);
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
