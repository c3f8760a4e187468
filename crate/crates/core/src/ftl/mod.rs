//! Follow-the-leader planning.
//!
//! The reference is the fully deployed shape at the design tension. At each
//! progression step `η` the exposed segment is solved over a range of
//! tensions and the one whose body stays closest to the proximal part of the
//! reference is kept. A quadratic `τ(η)` is then fitted to the optimal
//! tensions and can be replayed as an open-loop schedule.

mod plan;
mod search;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{MetricsError, PlanError, SolveError};
use crate::geometry::{RobotGeometry, SectionProperties};
use crate::metrics::{nearest_point_rmse, Trajectory};
use crate::statics::{LoadCase, Solution, Solver};

pub use plan::{
    fit_tension_polynomial, plan_ftl, plan_ftl_with, replay_schedule, write_plan_csv,
    FtlPlan, FtlPlanConfig, PlanStep, PolynomialFit, ReplayReport, TensionSchedule,
};
pub use search::{golden_section, optimize_tension, Evaluation, TensionOptimum, TensionSearch};

/// Exposure and base rotation at one progression step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgressionState {
    pub eta: f64,
    /// Exposed tube length `η L`.
    pub l_p: f64,
    /// Base rotation `2π(η − 1)`.
    pub phi_p: f64,
    /// Exposed neutral-axis span `[0, η L_na]`.
    pub s_span: (f64, f64),
}

pub fn progression_kinematics(geom: &RobotGeometry, eta: f64) -> Result<ProgressionState, PlanError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(SolveError::EtaOutOfRange(eta).into());
    }
    let props = SectionProperties::new(geom).map_err(SolveError::from)?;
    Ok(ProgressionState {
        eta,
        l_p: eta * geom.length,
        phi_p: TAU * (eta - 1.0),
        s_span: (0.0, eta * props.l_na),
    })
}

/// Full-length solve at `tau_des` under `load`, returned as a polyline.
pub fn ftl_reference(solver: &Solver, tau_des: f64, load: &LoadCase) -> Result<(Trajectory, Solution), PlanError> {
    if !(tau_des > 0.0 && tau_des.is_finite()) {
        return Err(PlanError::InvalidConfig(format!(
            "tau_des must be positive, got {tau_des}"
        )));
    }
    let sol = solver.solve(&load.with_tau(tau_des))?;
    Ok((Trajectory::new(sol.positions())?, sol))
}

/// RMS nearest-point distance from the solution samples to `reference`.
pub fn body_deviation(solution: &Solution, reference: &Trajectory) -> Result<f64, MetricsError> {
    nearest_point_rmse(&solution.positions(), reference)
}

/// Proximal part of the reference occupied by a body exposed to `eta`.
pub fn truncated_reference(reference: &Trajectory, l_na: f64, eta: f64) -> Trajectory {
    reference.truncate(eta * l_na)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn kinematics_examples() {
        let g = RobotGeometry::preset("prototype1").unwrap();
        let one = progression_kinematics(&g, 1.0).unwrap();
        assert_eq!((one.l_p, one.phi_p), (g.length, 0.0));
        let zero = progression_kinematics(&g, 0.0).unwrap();
        assert_eq!((zero.l_p, zero.phi_p), (0.0, -TAU));
        let half = progression_kinematics(&g, 0.5).unwrap();
        assert_eq!((half.l_p, half.phi_p), (g.length / 2.0, -std::f64::consts::PI));
        assert!(progression_kinematics(&g, 1.5).is_err());
    }

    #[test]
    fn reference_rejects_nonpositive_tension() {
        let solver = Solver::new(&RobotGeometry::preset("prototype1").unwrap()).unwrap();
        assert!(matches!(
            ftl_reference(&solver, 0.0, &LoadCase::default()),
            Err(PlanError::InvalidConfig(_))
        ));
    }

    #[test]
    fn deviation_zero_on_reference() {
        let solver = Solver::new(&RobotGeometry::preset("prototype1").unwrap()).unwrap();
        let (reference, sol) = ftl_reference(&solver, 0.45, &LoadCase::default()).unwrap();
        assert!(body_deviation(&sol, &reference).unwrap() < 1e-12);
        let straight = Trajectory::new(vec![Vector3::zeros(), Vector3::new(0.0, 0.0, 10.0)]).unwrap();
        let mut shifted = sol.clone();
        shifted.samples.truncate(3);
        for (k, st) in shifted.samples.iter_mut().enumerate() {
            st.p = Vector3::new(1.0, 0.0, k as f64);
        }
        assert!((body_deviation(&shifted, &straight).unwrap() - 1.0).abs() < 1e-15);
    }
}
