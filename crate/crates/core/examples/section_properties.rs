//! Section properties of every shipped prototype.

use notchrod::geometry::PRESET_NAMES;
use notchrod::{RobotGeometry, SectionProperties};

fn main() -> notchrod::Result<()> {
    println!("{:<11} {:>9} {:>8} {:>11} {:>11} {:>11} {:>8}", "preset", "A mm2", "r_na mm", "I_x mm4", "I_y mm4", "lambda kg/m", "L_na mm");
    for name in PRESET_NAMES {
        let g = RobotGeometry::preset(name)?;
        let p = SectionProperties::new(&g)?;
        println!(
            "{name:<11} {:>9.5} {:>8.4} {:>11.4e} {:>11.4e} {:>11.4e} {:>8.3}",
            p.area, p.r_na, p.i_x, p.i_y, p.lambda, p.l_na
        );
    }
    Ok(())
}
