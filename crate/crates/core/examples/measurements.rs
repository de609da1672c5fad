//! Synthetic distance / angle-of-arrival measurements for one time step.

use mvaslam::measurement::{generate_batch, World};
use mvaslam::scenario::builtin;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = builtin("exp1_rect_room")?;
    let world = cfg.world();
    let state = world.trajectory[10];
    let heading = state.heading_or(0.0, cfg.params.heading_eps);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let view = World { surfaces: &world.surfaces, env: &world.env, doubles: cfg.doubles() };
    for (j, &pa) in world.pas.iter().enumerate() {
        let batch = generate_batch(
            state.pos,
            heading,
            pa,
            view,
            &cfg.noise,
            &cfg.params.detection,
            &cfg.clutter,
            &mut rng,
        );
        println!("PA {} ({} measurements)", j + 1, batch.measurements.len());
        for (z, origin) in batch.measurements.iter().zip(&batch.origins) {
            println!("  d = {:6.3} m  phi = {:7.2} deg  {origin:?}", z.z_d, z.z_phi.to_degrees());
        }
    }
    Ok(())
}
