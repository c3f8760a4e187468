//! Tendon tension tightens the helical backbone.

use notchrod::statics::{LoadCase, Solver};
use notchrod::RobotGeometry;

fn main() -> notchrod::Result<()> {
    let solver = Solver::new(&RobotGeometry::preset("prototype1")?)?;
    println!("{:>6} {:>28} {:>10} {:>6}", "tau N", "tip mm", "residual", "iters");
    for tau in [0.0, 0.2, 0.45, 0.7] {
        let sol = solver.solve(&LoadCase::tension(tau))?;
        let p = sol.tip().p;
        println!(
            "{tau:>6.2} [{:>7.3}, {:>7.3}, {:>7.3}] {:>10.1e} {:>6}",
            p.x, p.y, p.z, sol.residual_norm, sol.iterations
        );
    }
    Ok(())
}
