//! Drives an in-process teleoperation session towards the ventral target.
//!
//! The same commands can be sent over WebSocket to `notchrod serve`.

use notchrod::statics::Solver;
use notchrod::teleop::{CommandInput, CommandSet, EventBody, PhantomScene, SessionConfig, TeleopSession};
use notchrod::RobotGeometry;

fn main() -> notchrod::Result<()> {
    let solver = Solver::new(&RobotGeometry::preset("prototype1")?)?;
    let mut session = TeleopSession::new(solver, PhantomScene::builtin(), SessionConfig::default());
    session.apply_command(CommandInput::Assist(true));
    for _ in 0..10 {
        session.apply_command(CommandInput::Delta(CommandSet {
            eta: Some(0.05),
            ..CommandSet::default()
        }));
        for event in session.recompute_shape() {
            match event.body {
                EventBody::Shape { points, eta, .. } => {
                    let tip = points.last().copied().unwrap_or_default();
                    println!("#{} eta {eta:.2} tip [{:.2}, {:.2}, {:.2}]", event.seq, tip[0], tip[1], tip[2]);
                }
                EventBody::Reach { target, distance } => println!("   reached {target} ({distance:.3} mm)"),
                EventBody::Error { message } => println!("   error: {message}"),
                _ => {}
            }
        }
    }
    let report = session.evaluate_targets();
    for d in &report.distances {
        println!("{:<9} {:7.3} mm", d.target, d.distance);
    }
    println!("cord clearance {:.3} mm", report.clearance.unwrap_or(f64::NAN));
    Ok(())
}
