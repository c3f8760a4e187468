//! Paired, maximum and nearest-point errors between two curves.

use notchrod::metrics::{compare_resampled, max_euclidean_distance, nearest_point_rmse, rmse_paired, Trajectory};
use notchrod::statics::{LoadCase, Solver};
use notchrod::RobotGeometry;

fn main() -> notchrod::Result<()> {
    let solver = Solver::new(&RobotGeometry::preset("prototype1")?)?;
    let off = solver.solve(&LoadCase::tension(0.7))?.positions();
    let on = solver.solve(&LoadCase::tension(0.7).with_gravity(true))?.positions();
    println!("paired RMSE        {:.4} mm", rmse_paired(&on, &off)?);
    println!("max distance       {:.4} mm", max_euclidean_distance(&on, &off)?);
    let reference = Trajectory::new(off)?;
    println!("nearest-point RMSE {:.4} mm", nearest_point_rmse(&on, &reference)?);
    let coarse = Trajectory::new(on)?.resample_by_arclength(21)?;
    let (rmse, med) = compare_resampled(&coarse, &reference, 101)?;
    println!("resampled 21 vs 201 points: RMSE {rmse:.4} mm, MED {med:.4} mm");
    Ok(())
}
