//! OSPA distances between point sets.

use mvaslam::eval::{ospa, va_ospa, OspaParams};
use mvaslam::Point2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = OspaParams::default();
    let truth = [Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)];
    let est = [Point2::new(0.2, 0.0), Point2::new(9.0, 1.0), Point2::new(4.0, 4.0)];
    println!("OSPA(est, truth) = {:.4} m", ospa(&est, &truth, params));
    println!("OSPA(truth, truth) = {:.4} m", ospa(&truth, &truth, params));

    // Anchors implied by two perpendicular walls, seen from (1, 2).
    let mvas = [Point2::new(10.0, 0.0), Point2::new(0.0, 8.0)];
    let vas = [Point2::new(9.0, 2.0), Point2::new(1.0, 6.0), Point2::new(9.0, 6.0)];
    let shifted = [Point2::new(10.2, 0.0), Point2::new(0.0, 8.0)];
    let pa = Point2::new(1.0, 2.0);
    println!("VA OSPA, exact walls: {:.4} m", va_ospa(&mvas, &vas, pa, true, params)?);
    println!("VA OSPA, shifted wall: {:.4} m", va_ospa(&shifted, &vas, pa, true, params)?);
    Ok(())
}
