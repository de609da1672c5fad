//! Which propagation paths reach the agent behind a blocker.

use mvaslam::raytrace::{path_available, PathClass};
use mvaslam::scenario::builtin;
use mvaslam::Point2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = builtin("exp3_olos")?;
    let world = cfg.world();
    let paths = PathClass::enumerate(world.surfaces.len(), true);
    for agent in [Point2::new(-4.0, -1.0), Point2::new(-1.0, -1.0), Point2::new(2.0, -1.0)] {
        for (j, &pa) in world.pas.iter().enumerate() {
            let open: Vec<String> = paths
                .iter()
                .filter(|&&p| path_available(agent, pa, p, &world.surfaces, &world.env))
                .map(|p| format!("{p:?}"))
                .collect();
            println!("agent {agent:?}, PA {}: {}", j + 1, open.join(", "));
        }
    }
    Ok(())
}
