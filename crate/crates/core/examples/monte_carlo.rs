//! A small Monte-Carlo experiment with CSV and JSON outputs.
//!
//! Usage: `cargo run --release --example monte_carlo -- [scenario] [runs] [particles]`

use mvaslam::eval::{run_experiment, write_outputs, Overrides};
use mvaslam::scenario::builtin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "exp1_rect_room".into());
    let runs: usize = args.next().map_or(Ok(4), |s| s.parse())?;
    let particles: usize = args.next().map_or(Ok(500), |s| s.parse())?;
    let cfg = Overrides { particles: Some(particles), ..Default::default() }.apply(&builtin(&name)?);
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let exp = run_experiment(&cfg, runs, 42, threads)?;
    let dir = std::env::temp_dir().join(format!("mvaslam-{name}"));
    write_outputs(&exp, &dir)?;
    let s = &exp.summary;
    println!("{} runs, {} converged, mean RMSE {:.3} m", s.runs, s.converged_runs, s.mean_rmse);
    for n in (0..s.steps).step_by(10) {
        println!("n = {:3}: RMSE {:.3} m, MVA MOSPA {:.3} m", n + 1, s.rmse_per_step[n], s.mospa_mva_per_step[n]);
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
