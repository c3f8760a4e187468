//! Shooting solver for the tendon-loaded rod.
//!
//! The base pose is known and the base strains `(v(0), u(0))` are unknown.
//! Damped Newton with a forward-difference Jacobian drives the tip residual
//! (tendon termination conditions) to zero. The first guess is the
//! constant-strain helix that satisfies the tip conditions everywhere; it is
//! exact without distributed loads. If plain Newton stalls the tension is
//! ramped up from zero in a few stages, each stage reusing the previous
//! answer.

use std::f64::consts::TAU;

use log::debug;
use nalgebra::{Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::geometry::RobotGeometry;
use crate::so3::rot_z;

use super::integrate::integrate;
use super::model::{LoadCase, RodModel, RodState};

/// Tuning for the shooting solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    /// RK4 steps over the full neutral-axis length; partial spans scale down.
    pub steps: usize,
    /// Bound on the scaled residual norm.
    pub tolerance: f64,
    /// Newton iterations allowed per continuation stage.
    pub max_iterations: usize,
    /// Forward-difference perturbation for the Jacobian.
    pub fd_step: f64,
    /// Number of tension increments used when plain Newton stalls.
    pub continuation_stages: usize,
    /// Step halvings tried by the line search before giving up.
    pub max_halvings: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            steps: 200,
            tolerance: 1e-9,
            max_iterations: 50,
            fd_step: 1e-7,
            continuation_stages: 5,
            max_halvings: 30,
        }
    }
}

/// A solved rod shape with solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub samples: Vec<RodState>,
    pub tau: f64,
    pub eta: f64,
    /// World-Z rotation of the robot (rad). Equals `2π(η−1)` for FTL motion.
    pub base_rotation: f64,
    pub residual_norm: f64,
    /// Newton iterations summed over all stages.
    pub iterations: usize,
    pub stage_iterations: Vec<usize>,
    pub converged: bool,
}

impl Solution {
    pub fn tip(&self) -> &RodState {
        self.samples.last().expect("solution has samples")
    }

    pub fn base(&self) -> &RodState {
        &self.samples[0]
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.samples.iter().map(|s| s.p).collect()
    }

    /// Unknowns found by the shooting: `(v(0), u(0))`.
    pub fn base_strains(&self) -> (Vector3<f64>, Vector3<f64>) {
        (self.samples[0].v, self.samples[0].u)
    }
}

/// Rotation that keeps a helical rod on its own path while it is pushed out:
/// `φ_p = 2π(η − 1)`.
pub fn ftl_rotation(eta: f64) -> f64 {
    TAU * (eta - 1.0)
}

/// Tip residual: strain mismatch against the tendon termination conditions.
/// The angular block is scaled by `L_na` so both blocks are dimensionless.
pub fn boundary_residual(
    terminal: &RodState,
    load: &LoadCase,
    model: &RodModel,
) -> Result<Vector6<f64>, SolveError> {
    let (v_bc, u_bc) = model.tip_strains(terminal, load.tau)?;
    let mut res = Vector6::zeros();
    res.fixed_rows_mut::<3>(0).copy_from(&(terminal.v - v_bc));
    res.fixed_rows_mut::<3>(3)
        .copy_from(&((terminal.u - u_bc) * model.props.l_na));
    Ok(res)
}

struct Shot {
    x: Vector6<f64>,
    samples: Vec<RodState>,
    /// Scaled strain residual, the convergence measure.
    residual: Vector6<f64>,
    /// Same mismatch in force units, driven to zero by Newton.
    wrench: Vector6<f64>,
}

struct StageFailure {
    error: SolveError,
    best: Option<Shot>,
    iterations: usize,
}

/// Reusable solver bound to one geometry.
#[derive(Debug, Clone)]
pub struct Solver {
    model: RodModel,
    options: ShootingOptions,
}

impl Solver {
    pub fn new(geom: &RobotGeometry) -> Result<Self, SolveError> {
        Ok(Self::from_model(RodModel::new(geom)?))
    }

    pub fn from_model(model: RodModel) -> Self {
        Self {
            model,
            options: ShootingOptions::default(),
        }
    }

    pub fn with_options(mut self, options: ShootingOptions) -> Self {
        self.options = options;
        self
    }

    pub fn model(&self) -> &RodModel {
        &self.model
    }

    pub fn options(&self) -> &ShootingOptions {
        &self.options
    }

    /// Integration steps used for an exposed fraction `eta`.
    pub fn steps_for(&self, eta: f64) -> usize {
        ((eta * self.options.steps as f64).round() as usize).max(2)
    }

    /// Base state for exposure `eta` with the robot turned by `rotation` about
    /// world Z. The base sits at `z = 0`; with `rotation = ftl_rotation(eta)`
    /// it reduces to `p = [−r_na, 0, 0]`, `R = I`.
    pub fn base_state(&self, eta: f64, rotation: f64) -> RodState {
        let reference = &self.model.reference;
        // 2π(η−1) + 2π(1−η) is exactly 0.0 in floating point
        let r = rot_z(rotation + TAU * (1.0 - eta));
        RodState {
            s: 0.0,
            p: r * Vector3::new(-reference.r_na, 0.0, 0.0),
            r,
            v: reference.v_star,
            u: reference.u_star,
        }
    }

    /// Full-length solve (`η = 1`, no rotation).
    pub fn solve(&self, load: &LoadCase) -> Result<Solution, SolveError> {
        self.solve_posed(load, 1.0, 0.0, None)
    }

    /// Exposed-segment solve at progression `eta` with the FTL base rotation.
    pub fn solve_progressive(&self, load: &LoadCase, eta: f64) -> Result<Solution, SolveError> {
        self.solve_posed(load, eta, ftl_rotation(eta), None)
    }

    /// Exposed-segment solve with an arbitrary base rotation, optionally
    /// warm-started from a previous solution's base strains.
    pub fn solve_posed(
        &self,
        load: &LoadCase,
        eta: f64,
        rotation: f64,
        warm_start: Option<&Solution>,
    ) -> Result<Solution, SolveError> {
        load.validate()?;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(SolveError::EtaOutOfRange(eta));
        }
        if !rotation.is_finite() {
            return Err(SolveError::InvalidLoad(format!("rotation must be finite, got {rotation}")));
        }
        let base = self.base_state(eta, rotation);
        let span = eta * self.model.props.l_na;
        let steps = self.steps_for(eta);
        let x0 = match warm_start {
            Some(sol) => {
                let (v, u) = sol.base_strains();
                self.pack(&v, &u)
            }
            None => {
                let (v, u) = self.uniform_strains(load.tau);
                self.pack(&v, &u)
            }
        };

        let finish = |shot: Shot, stage_iterations: Vec<usize>| Solution {
            samples: shot.samples,
            tau: load.tau,
            eta,
            base_rotation: rotation,
            residual_norm: shot.residual.norm(),
            iterations: stage_iterations.iter().sum(),
            stage_iterations,
            converged: true,
        };

        let plain = self.newton(&base, load, span, steps, x0);
        let failure = match plain {
            Ok((shot, it)) => return Ok(finish(shot, vec![it])),
            Err(f) => f,
        };
        debug!("plain shooting failed at tau = {}: {}", load.tau, failure.error);
        if load.tau == 0.0 || self.options.continuation_stages < 2 {
            return Err(into_error(failure));
        }

        // tension continuation from the unloaded reference
        let stages = self.options.continuation_stages;
        let mut x = self.pack(&base.v, &base.u);
        let mut stage_iterations = vec![failure.iterations];
        let mut last = None;
        for k in 1..=stages {
            let staged = load.with_tau(load.tau * k as f64 / stages as f64);
            match self.newton(&base, &staged, span, steps, x) {
                Ok((shot, it)) => {
                    stage_iterations.push(it);
                    x = shot.x;
                    last = Some(shot);
                }
                Err(f) => return Err(into_error(f)),
            }
        }
        Ok(finish(last.expect("at least one stage"), stage_iterations))
    }

    /// Constant strains satisfying the tip conditions everywhere: the exact
    /// unloaded-by-gravity solution, used as the default shooting guess.
    pub fn uniform_strains(&self, tau: f64) -> (Vector3<f64>, Vector3<f64>) {
        let m = &self.model;
        let mut state = RodState {
            s: 0.0,
            p: Vector3::zeros(),
            r: nalgebra::Matrix3::identity(),
            v: m.reference.v_star,
            u: m.reference.u_star,
        };
        for _ in 0..200 {
            let Ok((v, u)) = m.tip_strains(&state, tau) else {
                break;
            };
            let step = (v - state.v).norm() + (u - state.u).norm() * m.props.l_na;
            state.v = v;
            state.u = u;
            if step < 1e-15 {
                break;
            }
        }
        (state.v, state.u)
    }

    // Newton works on the base internal force and moment/L_na, and on the tip
    // wrench mismatch in the same units. In strain units the force block is
    // weighted by 1/K_se and the moment block by L/K_bt, which pushes the
    // Jacobian condition number past 1e7 and ruins the finite-difference step.
    fn pack(&self, v: &Vector3<f64>, u: &Vector3<f64>) -> Vector6<f64> {
        let m = &self.model;
        let n = m.k_se * (v - m.reference.v_star);
        let l = m.k_bt * (u - m.reference.u_star) / m.props.l_na;
        Vector6::new(n.x, n.y, n.z, l.x, l.y, l.z)
    }

    fn unpack(&self, x: &Vector6<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let m = &self.model;
        let v = m.reference.v_star + m.k_se_inv() * x.fixed_rows::<3>(0);
        let u = m.reference.u_star + m.k_bt_inv() * x.fixed_rows::<3>(3) * m.props.l_na;
        (v, u)
    }

    fn wrench_residual(&self, terminal: &RodState, load: &LoadCase) -> Result<Vector6<f64>, SolveError> {
        let m = &self.model;
        let (v_bc, u_bc) = m.tip_strains(terminal, load.tau)?;
        let mut g = Vector6::zeros();
        g.fixed_rows_mut::<3>(0).copy_from(&(m.k_se * (terminal.v - v_bc)));
        g.fixed_rows_mut::<3>(3)
            .copy_from(&(m.k_bt * (terminal.u - u_bc) / m.props.l_na));
        Ok(g)
    }

    fn shoot(
        &self,
        base: &RodState,
        load: &LoadCase,
        span: f64,
        steps: usize,
        x: &Vector6<f64>,
    ) -> Result<Shot, SolveError> {
        let (v, u) = self.unpack(x);
        let start = RodState { v, u, ..*base };
        let samples = integrate(&start, load, &self.model, (0.0, span), steps)?;
        let tip = samples.last().unwrap();
        let residual = boundary_residual(tip, load, &self.model)?;
        let wrench = self.wrench_residual(tip, load)?;
        if !residual.iter().chain(wrench.iter()).all(|r| r.is_finite()) {
            return Err(SolveError::Diverged { s: span });
        }
        Ok(Shot {
            x: *x,
            samples,
            residual,
            wrench,
        })
    }

    #[allow(clippy::result_large_err)]
    fn newton(
        &self,
        base: &RodState,
        load: &LoadCase,
        span: f64,
        steps: usize,
        x0: Vector6<f64>,
    ) -> Result<(Shot, usize), StageFailure> {
        let opts = &self.options;
        let mut current = self
            .shoot(base, load, span, steps, &x0)
            .map_err(|error| StageFailure {
                error,
                best: None,
                iterations: 0,
            })?;
        let mut iterations = 0;
        loop {
            let norm = current.residual.norm();
            if norm < opts.tolerance {
                return Ok((current, iterations));
            }
            if iterations >= opts.max_iterations {
                return Err(StageFailure {
                    error: SolveError::NotConverged {
                        iterations,
                        best_residual: norm,
                    },
                    best: Some(current),
                    iterations,
                });
            }
            iterations += 1;
            log::trace!("newton iteration {iterations}: |residual| = {norm:e}");

            let mut jacobian = Matrix6::zeros();
            for j in 0..6 {
                let mut xp = current.x;
                xp[j] += opts.fd_step;
                let shot = match self.shoot(base, load, span, steps, &xp) {
                    Ok(s) => s,
                    Err(error) => {
                        return Err(StageFailure {
                            error,
                            best: Some(current),
                            iterations,
                        })
                    }
                };
                jacobian.set_column(j, &((shot.wrench - current.wrench) / opts.fd_step));
            }
            let Some(dx) = jacobian.lu().solve(&(-current.wrench)) else {
                return Err(StageFailure {
                    error: SolveError::NotConverged {
                        iterations,
                        best_residual: norm,
                    },
                    best: Some(current),
                    iterations,
                });
            };

            let merit = current.wrench.norm();
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..=opts.max_halvings {
                let trial = current.x + dx * alpha;
                if let Ok(shot) = self.shoot(base, load, span, steps, &trial) {
                    if shot.wrench.norm() < merit {
                        accepted = Some(shot);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some(shot) => current = shot,
                None => {
                    return Err(StageFailure {
                        error: SolveError::NotConverged {
                            iterations,
                            best_residual: norm,
                        },
                        best: Some(current),
                        iterations,
                    })
                }
            }
        }
    }
}


fn into_error(failure: StageFailure) -> SolveError {
    match (failure.error, failure.best) {
        (SolveError::NotConverged { .. }, Some(best)) => SolveError::NotConverged {
            iterations: failure.iterations,
            best_residual: best.residual.norm(),
        },
        (error, _) => error,
    }
}

/// Full-length solve with default options.
pub fn solve_statics(geom: &RobotGeometry, load: &LoadCase) -> Result<Solution, SolveError> {
    Solver::new(geom)?.solve(load)
}

/// Exposed-segment solve at progression `eta` with default options.
pub fn solve_progressive(
    geom: &RobotGeometry,
    load: &LoadCase,
    eta: f64,
) -> Result<Solution, SolveError> {
    Solver::new(geom)?.solve_progressive(load, eta)
}
