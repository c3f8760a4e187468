//! Statics and follow-the-leader planning for helically notched,
//! tendon-driven continuum robots.
//!
//! The crate models the tube as a Cosserat rod whose backbone is the
//! unnotched strip of each cross-section. A single tendon anchored at the tip
//! bends the rod into a helix; pushing the helix out of an outer tube while
//! turning it by `2π(η−1)` lets the body follow its own tip.
//!
//! * [`geometry`]: section properties and the unloaded helical reference.
//! * [`statics`]: rod equations, RK4 integration and the shooting solver.
//! * [`metrics`]: trajectory resampling and error metrics.
//! * [`ftl`]: FTL reference, per-step tension optimization, polynomial schedules.
//! * [`teleop`]: interactive session and WebSocket service for phantom navigation.
//! * [`cli`]: batch commands behind the `notchrod` binary.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod ftl;
pub mod geometry;
pub mod metrics;
pub mod so3;
pub mod statics;
pub mod teleop;

pub use error::{Error, Result};
pub use geometry::{ReferenceConfig, RobotGeometry, SectionProperties};
pub use statics::{LoadCase, RodState, Solution, Solver};
