//! Master virtual anchors and the virtual anchors they generate.

use mvaslam::geometry::{double_bounce_va, mva_to_va, path_distance_angle, va_to_mva};
use mvaslam::{Point2, Surface};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let right = Surface::through(Point2::new(5.0, -10.0), Point2::new(5.0, 4.0))?;
    let top = Surface::through(Point2::new(-10.0, 4.0), Point2::new(5.0, 4.0))?;
    let pa = Point2::new(1.0, 2.0);

    println!("MVA of x = 5: {:?}", right.mva());
    println!("MVA of y = 4: {:?}", top.mva());

    let va = mva_to_va(right.mva(), pa)?;
    println!("single-bounce VA off x = 5: {va:?}");
    println!("recovered MVA: {:?}", va_to_mva(va, pa)?);

    // Perpendicular walls: both bounce orders share one anchor.
    let a = double_bounce_va(right.mva(), top.mva(), pa)?;
    let b = double_bounce_va(top.mva(), right.mva(), pa)?;
    println!("double-bounce VAs: {a:?} and {b:?}");

    let agent = Point2::new(3.0, -1.0);
    let (d, phi) = path_distance_angle(agent, 0.0, va)?;
    println!("path length {d:.4} m, arrival angle {:.2} deg", phi.to_degrees());
    Ok(())
}
