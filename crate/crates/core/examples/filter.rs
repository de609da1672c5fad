//! One run of the SLAM filter, printing the estimate every ten steps.

use mvaslam::engine::SlamFilter;
use mvaslam::measurement::{generate_batch, World};
use mvaslam::scenario::builtin;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = builtin("exp1_rect_room")?;
    cfg.params.particles = 1000;
    let world = cfg.world();
    let view = World { surfaces: &world.surfaces, env: &world.env, doubles: cfg.doubles() };
    let mut data_rng = ChaCha8Rng::seed_from_u64(1);
    let mut filter = SlamFilter::new(cfg.filter_model(), world.trajectory[0].pos, 2)?;
    let mut heading = 0.0;
    for (n, state) in world.trajectory.iter().enumerate().skip(1) {
        heading = state.heading_or(heading, cfg.params.heading_eps);
        let batches: Vec<_> = world
            .pas
            .iter()
            .map(|&pa| {
                let b = generate_batch(
                    state.pos,
                    heading,
                    pa,
                    view,
                    &cfg.noise,
                    &cfg.params.detection,
                    &cfg.clutter,
                    &mut data_rng,
                );
                b.measurements
            })
            .collect();
        let est = filter.step(&batches)?;
        if n % 10 == 0 {
            println!(
                "n = {n:3}: position error {:.3} m, {} surfaces confirmed, {} tracked",
                est.agent.pos.distance(state.pos),
                est.features.len(),
                est.pmva_count
            );
        }
        if n == world.trajectory.len() - 1 {
            for f in &est.features {
                println!("  surface {} at MVA ({:.2}, {:.2}), p = {:.3}", f.id, f.mva.x, f.mva.y, f.existence);
            }
        }
    }
    println!("true MVAs: {:?}", world.surfaces.iter().map(|s| s.mva()).collect::<Vec<_>>());
    Ok(())
}
