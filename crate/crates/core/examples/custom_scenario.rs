//! Building a scenario from JSON and inspecting what the filter can observe.

use mvaslam::eval::TruthSets;
use mvaslam::scenario::parse_scenario;

const SCENARIO: &str = r#"{
    "name": "corridor",
    "walls": [
        { "a": [-10, -2], "b": [10, -2] },
        { "a": [-10, 2], "b": [10, 2] },
        { "a": [10, -2], "b": [10, 2], "reflective": false }
    ],
    "pas": [[0, 0]],
    "trajectory": { "kind": "waypoints", "points": [[-8, 0], [-7.9, 0.05], [-7.8, 0.1], [-7.7, 0.1]] },
    "params": { "particles": 500 }
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = parse_scenario(SCENARIO)?;
    println!("{} with {} walls, {} steps", cfg.name, cfg.walls.len(), cfg.trajectory().len() - 1);
    let truth = TruthSets::from_world(&cfg.world(), cfg.doubles());
    println!("mappable MVAs: {:?}", truth.mvas);
    println!("observable VAs of the anchor: {:?}", truth.vas[0]);
    // Unknown fields and bad values are reported with their location.
    let err = parse_scenario(&SCENARIO.replace("\"particles\"", "\"particels\"")).unwrap_err();
    println!("rejected: {err}");
    Ok(())
}
