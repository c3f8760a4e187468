//! Tip displacement caused by self-weight, per prototype.

use notchrod::geometry::PRESET_NAMES;
use notchrod::statics::{LoadCase, Solver};
use notchrod::RobotGeometry;

fn main() -> notchrod::Result<()> {
    let tau = 0.7;
    for name in PRESET_NAMES {
        let solver = Solver::new(&RobotGeometry::preset(name)?)?;
        let off = solver.solve(&LoadCase::tension(tau))?;
        let on = solver.solve(&LoadCase::tension(tau).with_gravity(true))?;
        let d = on.tip().p - off.tip().p;
        println!(
            "{name}: tip shift {:.3} mm (dx {:+.3}) at tau {tau} N, {} Newton iterations",
            d.norm(),
            d.x,
            on.iterations
        );
    }
    Ok(())
}
