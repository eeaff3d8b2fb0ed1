//! `fafsim`: sweeps of fermionic antiflatness over disordered spin chains.

mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use faf_core::ensemble::{aggregate, run_sweep, Experiment, SweepPlan};
use faf_core::hamiltonian::{Boundary, ModelKind};

use crate::config::{resolve_workers, Config, WORKERS_ENV};
use crate::error::CliError;
use crate::output::{write_aggregate, RecordTable, RecordWriter};

#[derive(Debug, Parser)]
#[command(name = "fafsim", version, about = "Fermionic antiflatness of disordered spin chains")]
struct Cli {
    /// TOML configuration; flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// FAF of mid-spectrum eigenstates.
    EigenFaf {
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        eigen: EigenArgs,
    },
    /// Quench from the Néel state.
    Dynamics {
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Quench in the phenomenological l-bit model.
    Lbit {
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        lbit: LbitArgs,
    },
    /// FAF and R distributions with cat-pair detection.
    Resonance {
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        eigen: EigenArgs,
        #[command(flatten)]
        resonance: ResonanceArgs,
    },
    /// Split the interaction into mode-diagonal and off-diagonal parts.
    Decompose {
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Run the built-in invariant checks.
    Selftest {
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Show the configuration schema or the resolved configuration.
    Config {
        /// Print the default configuration as TOML.
        #[arg(long)]
        print_defaults: bool,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Chain lengths, comma separated.
    #[arg(long = "L", value_delimiter = ',', value_name = "L,..")]
    sites: Option<Vec<usize>>,
    /// Disorder strengths, comma separated.
    #[arg(long = "W", value_delimiter = ',', value_name = "W,..")]
    disorder: Option<Vec<f64>>,
    /// Interaction strengths, comma separated.
    #[arg(long, value_delimiter = ',', value_name = "DELTA,..")]
    delta: Option<Vec<f64>>,
    /// Disorder realizations per sweep point.
    #[arg(long)]
    nd: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to the config, then FAFSIM_WORKERS, then all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// xx, xxz or impurity.
    #[arg(long)]
    model: Option<ModelKind>,
    /// open or periodic.
    #[arg(long)]
    boundary: Option<Boundary>,
    /// Highest FAF order recorded.
    #[arg(long)]
    kmax: Option<u32>,
}

#[derive(Debug, Args)]
struct EigenArgs {
    /// Mid-spectrum eigenstates per realization.
    #[arg(long)]
    eigenstates: Option<usize>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Logarithmic grid points per decade.
    #[arg(long)]
    per_decade: Option<usize>,
}

#[derive(Debug, Args)]
struct LbitArgs {
    /// Brickwork layers of the dressing circuit.
    #[arg(long)]
    depth: Option<usize>,
    /// Dressing strength; 0 gives bare l-bits.
    #[arg(long)]
    f: Option<f64>,
    /// Interaction scale.
    #[arg(long)]
    lambda: Option<f64>,
    /// Include three-body couplings.
    #[arg(long)]
    three_body: bool,
}

#[derive(Debug, Args)]
struct ResonanceArgs {
    /// Minimum |C_zz| for a cat-pair candidate.
    #[arg(long)]
    czz_threshold: Option<f64>,
    /// Histogram bin width.
    #[arg(long)]
    bin_width: Option<f64>,
    /// Half-width of the F1 ≈ 4 filter window.
    #[arg(long)]
    eps: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl SweepArgs {
    fn apply(&self, plan: &mut SweepPlan) {
        set(&mut plan.sites, self.sites.clone());
        set(&mut plan.disorder, self.disorder.clone());
        set(&mut plan.delta, self.delta.clone());
        set(&mut plan.realizations, self.nd);
        set(&mut plan.seed, self.seed);
        set(&mut plan.model, self.model);
        set(&mut plan.kmax, self.kmax);
        if self.boundary.is_some() {
            plan.boundary = self.boundary;
        }
    }
}

impl EigenArgs {
    fn apply(&self, plan: &mut SweepPlan) {
        if self.eigenstates.is_some() {
            plan.eigenstates = self.eigenstates;
        }
    }
}

impl GridArgs {
    fn apply(&self, plan: &mut SweepPlan) {
        set(&mut plan.grid.t_min, self.t_min);
        set(&mut plan.grid.t_max, self.t_max);
        set(&mut plan.grid.per_decade, self.per_decade);
    }
}

impl LbitArgs {
    fn apply(&self, plan: &mut SweepPlan) {
        set(&mut plan.lbit.depth, self.depth);
        set(&mut plan.lbit.f, self.f);
        set(&mut plan.lbit.lambda, self.lambda);
        plan.lbit.include_three_body |= self.three_body;
    }
}

impl ResonanceArgs {
    fn apply(&self, plan: &mut SweepPlan) {
        set(&mut plan.czz_threshold, self.czz_threshold);
        set(&mut plan.histogram_width, self.bin_width);
        set(&mut plan.filter_eps, self.eps);
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<Config, CliError> {
    path.map_or_else(|| Ok(Config::default()), |p| Config::load(p))
}

fn run_experiment(mut config: Config, sweep: &SweepArgs) -> Result<(), CliError> {
    let experiment = config.sweep.experiment;
    set(&mut config.output, sweep.out.clone());
    let plan = &config.sweep;
    plan.validate()?;
    let workers = resolve_workers(sweep.workers, config.workers);
    std::fs::create_dir_all(&config.output).map_err(CliError::io(&config.output))?;

    let total = plan.total_runs();
    let step = (total / 10).max(1);
    let mut writer = RecordWriter::create(&config.output, RecordTable::for_plan(plan))?;
    let mut write_error = None;
    let mut done = 0usize;
    let records = run_sweep(plan, workers, |rec| {
        done += 1;
        if write_error.is_none() {
            write_error = writer.append(rec).err();
        }
        if done % step == 0 || done == total {
            eprintln!("[{done}/{total}] {} runs complete", experiment.as_str());
        }
    })?;
    if let Some(e) = write_error {
        return Err(e);
    }
    let (table_path, rows) = writer.finish(&records)?;

    let failures: Vec<_> = records.iter().filter(|r| !r.is_ok()).collect();
    for rec in &failures {
        eprintln!(
            "{}",
            serde_json::json!({
                "warning": "realization-failed",
                "point": rec.point.index,
                "realization": rec.realization,
                "message": rec.error,
            })
        );
    }
    let aggregates = aggregate(plan, &records)?;
    let aggregate_path = write_aggregate(&config.output, plan, &aggregates)?;
    println!("wrote {} ({rows} rows)", table_path.display());
    println!("wrote {}", aggregate_path.display());
    if !failures.is_empty() {
        println!("{} of {} realizations failed", failures.len(), records.len());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = || load_config(cli.config.as_ref());
    let plan_of = |experiment: Experiment| -> Result<Config, CliError> {
        let mut cfg = config()?;
        cfg.sweep.experiment = experiment;
        Ok(cfg)
    };
    match &cli.command {
        Command::EigenFaf { sweep, eigen } => {
            let mut cfg = plan_of(Experiment::EigenFaf)?;
            sweep.apply(&mut cfg.sweep);
            eigen.apply(&mut cfg.sweep);
            run_experiment(cfg, sweep)
        }
        Command::Dynamics { sweep, grid } => {
            let mut cfg = plan_of(Experiment::Dynamics)?;
            sweep.apply(&mut cfg.sweep);
            grid.apply(&mut cfg.sweep);
            run_experiment(cfg, sweep)
        }
        Command::Lbit { sweep, grid, lbit } => {
            let mut cfg = plan_of(Experiment::LbitDynamics)?;
            if cli.config.is_none() {
                cfg.sweep.disorder = vec![cfg.sweep.lbit.disorder];
            }
            sweep.apply(&mut cfg.sweep);
            grid.apply(&mut cfg.sweep);
            lbit.apply(&mut cfg.sweep);
            run_experiment(cfg, sweep)
        }
        Command::Resonance { sweep, eigen, resonance } => {
            let mut cfg = plan_of(Experiment::ResonanceScan)?;
            sweep.apply(&mut cfg.sweep);
            eigen.apply(&mut cfg.sweep);
            resonance.apply(&mut cfg.sweep);
            run_experiment(cfg, sweep)
        }
        Command::Decompose { sweep } => {
            let mut cfg = plan_of(Experiment::Decompose)?;
            sweep.apply(&mut cfg.sweep);
            run_experiment(cfg, sweep)
        }
        Command::Selftest { json } => {
            let report = faf_core::selftest::run();
            if *json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                for check in &report.checks {
                    let status = if check.passed { "ok  " } else { "FAIL" };
                    println!("{status} {}: {}", check.name, check.detail);
                }
            }
            let failed = report.failures().count();
            if failed > 0 {
                return Err(CliError::SelfTest {
                    failed,
                    total: report.checks.len(),
                });
            }
            println!("OK {} checks", report.checks.len());
            Ok(())
        }
        Command::Config { print_defaults } => {
            let cfg = if *print_defaults { Config::default() } else { config()? };
            cfg.sweep.validate()?;
            print!("{}", cfg.to_toml());
            if *print_defaults {
                println!("# workers falls back to ${WORKERS_ENV}, then to the number of cores");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.kind() == "config" {
                eprintln!("{}", Cli::command().render_usage());
            }
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
