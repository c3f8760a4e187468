//! Follow-the-leader tension plan with and without gravity.

use notchrod::ftl::{plan_ftl, FtlPlanConfig};
use notchrod::RobotGeometry;

fn main() -> notchrod::Result<()> {
    let geom = RobotGeometry::preset("prototype1")?;
    for gravity in [false, true] {
        let config = FtlPlanConfig {
            deviation_tolerance: 0.05,
            ..FtlPlanConfig::new(0.7).with_gravity(gravity)
        };
        let plan = plan_ftl(&geom, &config)?;
        println!("gravity {}:", if gravity { "on" } else { "off" });
        for step in plan.steps.iter().step_by(4).chain(plan.steps.last()) {
            println!(
                "  eta {:.2}  tau_opt {:.4} N  deviation {:.4} mm",
                step.eta,
                step.tau_opt.unwrap_or(f64::NAN),
                step.deviation.unwrap_or(f64::NAN)
            );
        }
        if let Some([c2, c1, c0]) = plan.poly_coeffs() {
            println!("  fit tau(eta) = {c2:.4} eta^2 + {c1:+.4} eta + {c0:+.4}");
        }
    }
    Ok(())
}
