//! Cosserat rod statics for the tendon-driven notched tube.

mod integrate;
pub mod io;
mod model;
mod shooting;

pub use integrate::integrate;
pub use model::{ode_rhs, LoadCase, OdeTerms, RodModel, RodState, StateRate, STANDARD_GRAVITY};
pub use shooting::{
    boundary_residual, ftl_rotation, solve_progressive, solve_statics, ShootingOptions, Solution,
    Solver,
};
