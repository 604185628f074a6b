use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use doppler_core::harness::{emit_csv, run_grid, HarnessError, RunConfig};
use doppler_core::numerics::xi_exact;

#[derive(Parser)]
#[command(name = "doppler-sim", version, about = "Monte-Carlo runner for the subspace Doppler spread estimator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario sweep and write CSV results.
    Run(RunArgs),
    /// Parse and validate a config without running it.
    Validate(ConfigArgs),
    /// Evaluate reference quantities.
    #[command(subcommand)]
    Oracle(Oracle),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run config; laid over --preset when both are given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset: eva, etu, snr-grid, convergence.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: ConfigArgs,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Overrides master_seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Also write summary.dat in gnuplot block layout.
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Subcommand)]
enum Oracle {
    /// Exact time-average correlation factor xi_beta.
    Xi {
        #[arg(long)]
        fd: f64,
        /// Subcarriers N.
        #[arg(long)]
        n: usize,
        /// Sample period in ns.
        #[arg(long)]
        t: f64,
        #[arg(long)]
        beta: u32,
        #[arg(long, default_value_t = 0.125)]
        cp_ratio: f64,
    },
}

fn load(args: &ConfigArgs) -> Result<RunConfig, HarnessError> {
    if args.config.is_none() && args.preset.is_none() {
        return Err(HarnessError::Config("give --config, --preset or both".into()));
    }
    RunConfig::layered(args.preset.as_deref(), args.config.as_deref())
}

fn run(args: RunArgs) -> Result<(), HarnessError> {
    let mut cfg = load(&args.source)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let scenarios = cfg.scenarios()?;
    for s in &scenarios {
        for w in s.validate()? {
            eprintln!("warning: {w}");
        }
    }
    let parallelism = args
        .parallelism
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let trials: usize = scenarios.iter().map(|s| s.trials).sum();
    eprintln!("running {} scenarios, {trials} trials on {parallelism} threads", scenarios.len());
    let result = run_grid(&scenarios, parallelism)?;
    for f in &result.failures {
        eprintln!("trial failed: {} #{}: {}", f.scenario_id, f.trial, f.message);
    }
    for path in emit_csv(&result, &args.out, args.gnuplot)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn validate(args: ConfigArgs) -> Result<(), HarnessError> {
    let cfg = load(&args)?;
    let scenarios = cfg.scenarios()?;
    for s in &scenarios {
        for w in s.validate()? {
            eprintln!("warning: {w}");
        }
    }
    let symbols: usize = scenarios.iter().map(|s| s.symbol_count() * s.trials).sum();
    println!("ok: {} scenarios, {symbols} symbols in total", scenarios.len());
    Ok(())
}

fn oracle(cmd: Oracle) -> Result<(), HarnessError> {
    match cmd {
        Oracle::Xi { fd, n, t, beta, cp_ratio } => {
            let xi = xi_exact(fd, n, t * 1e-9, beta, cp_ratio)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            println!("{xi}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate(args) => validate(args),
        Command::Oracle(cmd) => oracle(cmd),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
