use clap::{Parser, ValueEnum};
use mvaslam::eval::{run_experiment, write_outputs, Overrides};
use mvaslam::scenario::{builtin, parse_scenario, ScenarioConfig, Setup};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SetupArg {
    #[value(name = "1")]
    Full,
    #[value(name = "2")]
    SingleOnly,
}

/// Monte-Carlo runs of the multipath SLAM filter on a scenario.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Scenario JSON file or the name of a bundled scenario.
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Particles per belief; defaults to the scenario value.
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// 1: single- and double-bounce paths, 2: single-bounce only.
    #[arg(long, value_enum)]
    setup: Option<SetupArg>,
    /// Treat every path as available (disables ray-traced visibility).
    #[arg(long)]
    no_visibility: bool,
    /// Fail when more runs than this diverge.
    #[arg(long)]
    max_diverged: Option<usize>,
}

fn load(arg: &str) -> Result<ScenarioConfig, String> {
    match std::fs::read_to_string(arg) {
        Ok(text) => parse_scenario(&text).map_err(|e| format!("{arg}: {e}")),
        Err(io) => builtin(arg).map_err(|_| format!("cannot read scenario {arg}: {io}")),
    }
}

fn run(args: Args) -> Result<(), String> {
    let base = load(&args.scenario)?;
    let overrides = Overrides {
        particles: args.particles,
        setup: args.setup.map(|s| match s {
            SetupArg::Full => Setup::Full,
            SetupArg::SingleOnly => Setup::SingleOnly,
        }),
        visibility: args.no_visibility.then_some(false),
    };
    let cfg = overrides.apply(&base);
    let exp = run_experiment(&cfg, args.runs, args.seed, args.threads).map_err(|e| e.to_string())?;
    write_outputs(&exp, &args.out_dir).map_err(|e| e.to_string())?;
    let s = &exp.summary;
    println!(
        "{}: {} runs, {} diverged, mean RMSE {:.4} m, final MVA MOSPA {:.4} m, {:.1} ms/step",
        s.scenario, s.runs, s.diverged_runs, s.mean_rmse, s.final_mospa_mva, exp.timing.mean_step_ms
    );
    match args.max_diverged {
        Some(max) if s.diverged_runs > max => Err(format!("{} runs diverged (limit {max})", s.diverged_runs)),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
