//! Deploys the rod with a fixed quadratic tension schedule and measures how
//! far the tip strays from the reference.

use notchrod::ftl::{ftl_reference, replay_schedule, FtlPlanConfig, TensionSchedule};
use notchrod::statics::Solver;
use notchrod::RobotGeometry;

fn main() -> notchrod::Result<()> {
    let solver = Solver::new(&RobotGeometry::preset("prototype1")?)?;
    let config = FtlPlanConfig::new(0.7).with_gravity(true);
    let load = config.load();
    let (reference, _) = ftl_reference(&solver, config.tau_des, &load)?;
    let schedule = TensionSchedule::new(vec![0.6492, -0.5159, 0.6088]);
    let report = replay_schedule(&solver, &load, &schedule, &reference, &config.eta_grid())?;
    for ((eta, tau), err) in report.eta.iter().zip(&report.tau).zip(&report.errors).step_by(2) {
        println!("eta {eta:.2}  tau {tau:.4} N  tip error {err:.3} mm");
    }
    println!("RMSE {:.4} mm, MED {:.4} mm", report.rmse, report.med);
    Ok(())
}
