mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::{CliError, Overrides};

#[derive(Parser)]
#[command(name = "hwm", version, about = "Multi-soliton half-wave maps: construct, simulate, analyze, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario JSON document.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's output.dir, else `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random configurations and verify cases (default: config seed, else 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// End time of the trajectory; requests one in `analyze`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    t_end: Option<f64>,
    /// Constructor residual tolerance, or integrator rel_tol for simulate/analyze.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build initial data from target speeds.
    Construct,
    /// Integrate a configuration and export the trajectory.
    Simulate,
    /// Scattering report for a configuration.
    Analyze,
    /// Run invariant suites.
    Verify {
        /// Suites to run instead of the config's list (default: all).
        suites: Vec<String>,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("HWM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Input(config::InputError::Invalid(format!("HWM_THREADS={raw} is not a positive integer"))))?;
    // a pool built earlier in the process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run_verify(cfg: &config::ScenarioConfig, ov: &Overrides, requested: Vec<String>) -> Result<Vec<PathBuf>, CliError> {
    let mut doc = cfg.verify.clone().unwrap_or(config::VerifyDoc { suites: None, seeds: None, inject_fault: None });
    if !requested.is_empty() {
        doc.suites = Some(requested);
    }
    let names: Vec<String> = doc.suites.unwrap_or_else(|| verify::SUITES.iter().map(|s| s.to_string()).collect());
    if let Some(bad) = names.iter().find(|n| !verify::SUITES.contains(&n.as_str())) {
        return Err(CliError::Input(config::InputError::Invalid(format!("unknown suite {bad:?}; known: {}", verify::SUITES.join(", ")))));
    }
    let plan = verify::VerifyPlan { seed: ov.seed(cfg), seeds: doc.seeds.unwrap_or(10), fault: doc.inject_fault };
    let results: Vec<verify::SuiteResult> = names.iter().filter_map(|n| verify::run_suite(n, &plan)).collect();
    let failed = results.iter().filter(|r| !r.pass()).count();
    for r in &results {
        if !r.pass() {
            if let Some(c) = r.checks.iter().find(|c| !c.pass()) {
                eprintln!("suite {} failed: {} on {} ({:e} > {:e})", r.name, c.invariant, c.case, c.value, c.bound);
            }
        }
    }
    let summary = json!({
        "pass": failed == 0,
        "seed": plan.seed,
        "seeds": plan.seeds,
        "fault": plan.fault,
        "suites": results.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
    });
    println!("{}", serde_json::to_string(&summary).expect("serialisable"));
    let path = ov.out_dir(cfg).join("verify.json");
    output::write_json(&path, &summary).map_err(|source| CliError::Io { path: path.clone(), source })?;
    if failed > 0 {
        return Err(CliError::Verify(failed));
    }
    Ok(vec![path])
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the input-error code; help and version succeed
            return if e.use_stderr() { ExitCode::from(commands::EXIT_INPUT as u8) } else { ExitCode::SUCCESS };
        }
    };
    let ov = Overrides { out: cli.out, seed: cli.seed, t_end: cli.t_end, tol: cli.tol };
    let result = init_threads().and_then(|_| ov.check()).and_then(|_| commands::load(cli.config.as_deref())).and_then(|cfg| match cli.command {
        Command::Construct => commands::construct(&cfg, &ov),
        Command::Simulate => commands::simulate(&cfg, &ov),
        Command::Analyze => commands::analyze(&cfg, &ov),
        Command::Verify { suites } => run_verify(&cfg, &ov, suites),
    });
    match result {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hwm: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
