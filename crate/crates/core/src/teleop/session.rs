use log::debug;
use serde::{Deserialize, Serialize};

use crate::ftl::TensionSchedule;
use crate::statics::{ftl_rotation, LoadCase, Solution, Solver};

use super::protocol::{CommandSet, EventBody, StatusBody, TeleopEvent};
use super::scene::PhantomScene;

/// Static session settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub tau_max: f64,
    pub gravity_enabled: bool,
    /// Tension schedule applied while FTL assist is on.
    pub schedule: TensionSchedule,
    pub ftl_assist: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            tau_max: 1.4,
            gravity_enabled: false,
            schedule: TensionSchedule::new(vec![0.7]),
            ftl_assist: false,
        }
    }
}

/// Commanded insertion, base rotation and tension.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Commands {
    pub eta: f64,
    pub rotation: f64,
    pub tau: f64,
}

/// Operator input: absolute set, relative step, or an assist toggle.
#[derive(Debug, Clone, PartialEq)]
pub enum CommandInput {
    Set(CommandSet),
    Delta(CommandSet),
    Assist(bool),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDistance {
    pub target: String,
    pub distance: f64,
    pub reached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub distances: Vec<TargetDistance>,
    /// Minimum body-to-cord surface distance; negative means contact.
    pub clearance: Option<f64>,
}

/// One operator's live session: commands, latest converged shape, events.
#[derive(Debug, Clone)]
pub struct TeleopSession {
    solver: Solver,
    scene: PhantomScene,
    config: SessionConfig,
    commands: Commands,
    latest: Option<Solution>,
    dirty: bool,
    next_seq: u64,
    last_iterations: Option<usize>,
}

impl TeleopSession {
    pub fn new(solver: Solver, scene: PhantomScene, config: SessionConfig) -> Self {
        let mut session = Self {
            solver,
            scene,
            config,
            commands: Commands::default(),
            latest: None,
            dirty: true,
            next_seq: 0,
            last_iterations: None,
        };
        session.enforce_assist();
        session
    }

    pub fn commands(&self) -> Commands {
        self.commands
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn scene(&self) -> &PhantomScene {
        &self.scene
    }

    pub fn latest(&self) -> Option<&Solution> {
        self.latest.as_ref()
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    /// Newton iterations of the most recent successful recompute.
    pub fn last_iterations(&self) -> Option<usize> {
        self.last_iterations
    }

    pub(crate) fn push_event(&mut self, body: EventBody) -> TeleopEvent {
        let seq = self.next_seq;
        self.next_seq += 1;
        TeleopEvent { seq, body }
    }

    fn enforce_assist(&mut self) {
        if self.config.ftl_assist {
            self.commands.rotation = ftl_rotation(self.commands.eta);
            self.commands.tau = self.config.schedule.eval(self.commands.eta).min(self.config.tau_max);
        }
    }

    fn status_body(&self, clamped: Vec<String>) -> StatusBody {
        StatusBody {
            eta: self.commands.eta,
            rotation: self.commands.rotation,
            tau: self.commands.tau,
            tau_max: self.config.tau_max,
            ftl_assist: self.config.ftl_assist,
            gravity: self.config.gravity_enabled,
            clamped,
        }
    }

    /// Clamps and stores a command; emits the echoed command and, when
    /// anything was clamped or the mode changed, a status event.
    pub fn apply_command(&mut self, input: CommandInput) -> Vec<TeleopEvent> {
        let c = self.commands;
        let mut mode_changed = false;
        let requested = match &input {
            CommandInput::Set(set) => CommandSet {
                eta: set.eta.or(Some(c.eta)),
                rotation: set.rotation.or(Some(c.rotation)),
                tau: set.tau.or(Some(c.tau)),
            },
            CommandInput::Delta(d) => CommandSet {
                eta: Some(c.eta + d.eta.unwrap_or(0.0)),
                rotation: Some(c.rotation + d.rotation.unwrap_or(0.0)),
                tau: Some(c.tau + d.tau.unwrap_or(0.0)),
            },
            CommandInput::Assist(on) => {
                mode_changed = self.config.ftl_assist != *on;
                self.config.ftl_assist = *on;
                CommandSet::default()
            }
        };
        let mut clamped = Vec::new();
        let mut clamp = |name: &str, value: f64, lo: f64, hi: f64| {
            if !value.is_finite() || value < lo || value > hi {
                clamped.push(name.to_string());
            }
            if value.is_nan() {
                lo
            } else {
                value.clamp(lo, hi)
            }
        };
        let eta = clamp("eta", requested.eta.unwrap_or(c.eta), 0.0, 1.0);
        let tau = clamp("tau", requested.tau.unwrap_or(c.tau), 0.0, self.config.tau_max);
        let rotation = match requested.rotation.unwrap_or(c.rotation) {
            r if r.is_finite() => r,
            _ => {
                clamped.push("rotation".into());
                c.rotation
            }
        };
        let next = Commands { eta, rotation, tau };
        self.commands = next;
        self.enforce_assist();
        if self.commands != c || mode_changed {
            self.dirty = true;
        }
        let mut events = vec![self.push_event(EventBody::Command {
            set: CommandSet {
                eta: Some(self.commands.eta),
                rotation: Some(self.commands.rotation),
                tau: Some(self.commands.tau),
            },
        })];
        if !clamped.is_empty() || mode_changed {
            let status = self.status_body(clamped);
            events.push(self.push_event(EventBody::Status(status)));
        }
        events
    }

    /// Solves the commanded pose (warm-started from the latest shape) and
    /// emits a shape event plus reach events, or an error event that keeps
    /// the previous shape.
    pub fn recompute_shape(&mut self) -> Vec<TeleopEvent> {
        self.dirty = false;
        let Commands { eta, rotation, tau } = self.commands;
        if eta == 0.0 {
            self.latest = None;
            return vec![self.push_event(EventBody::Shape {
                points: Vec::new(),
                eta,
                tau,
                rotation,
            })];
        }
        let load = LoadCase::tension(tau).with_gravity(self.config.gravity_enabled);
        let solved = self
            .solver
            .solve_posed(&load, eta, rotation, self.latest.as_ref())
            .or_else(|e| {
                debug!("warm-started solve failed ({e}); retrying cold");
                self.solver.solve_posed(&load, eta, rotation, None)
            });
        match solved {
            Ok(sol) => {
                self.last_iterations = Some(sol.iterations);
                let points = sol
                    .samples
                    .iter()
                    .map(|st| {
                        let q = self.scene.entry.to_scene(&st.p);
                        [q.x, q.y, q.z]
                    })
                    .collect();
                self.latest = Some(sol);
                let mut events = vec![self.push_event(EventBody::Shape {
                    points,
                    eta,
                    tau,
                    rotation,
                })];
                for d in self.evaluate_targets().distances {
                    if d.reached {
                        events.push(self.push_event(EventBody::Reach {
                            target: d.target,
                            distance: d.distance,
                        }));
                    }
                }
                events
            }
            Err(e) => {
                let message = format!("solve failed at eta {eta}, tau {tau}, rotation {rotation}: {e}");
                vec![self.push_event(EventBody::Error { message })]
            }
        }
    }

    /// Tip-to-target distances and cord clearance of the latest shape.
    pub fn evaluate_targets(&self) -> TargetReport {
        let Some(sol) = &self.latest else {
            return TargetReport {
                distances: Vec::new(),
                clearance: None,
            };
        };
        let entry = &self.scene.entry;
        let tip = entry.to_scene(&sol.tip().p);
        let distances = self
            .scene
            .targets
            .iter()
            .map(|t| {
                let distance = (tip - nalgebra::Vector3::from(t.center)).norm();
                TargetDistance {
                    target: t.label.clone(),
                    distance,
                    reached: distance < t.reach_radius,
                }
            })
            .collect();
        let clearance = sol
            .samples
            .iter()
            .map(|st| self.scene.cord.clearance(&entry.to_scene(&st.p)))
            .fold(f64::INFINITY, f64::min);
        TargetReport {
            distances,
            clearance: Some(clearance),
        }
    }

    /// Status followed by the current shape, for a (re)connecting client.
    pub fn snapshot(&mut self) -> Vec<TeleopEvent> {
        let status = self.status_body(Vec::new());
        let mut events = vec![self.push_event(EventBody::Status(status))];
        let Commands { eta, rotation, tau } = self.commands;
        let points = self
            .latest
            .as_ref()
            .map(|sol| {
                sol.samples
                    .iter()
                    .map(|st| {
                        let q = self.scene.entry.to_scene(&st.p);
                        [q.x, q.y, q.z]
                    })
                    .collect()
            })
            .unwrap_or_default();
        if self.latest.is_some() || eta == 0.0 {
            events.push(self.push_event(EventBody::Shape {
                points,
                eta,
                tau,
                rotation,
            }));
        }
        events
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RobotGeometry;
    use std::f64::consts::PI;

    fn session(config: SessionConfig) -> TeleopSession {
        let solver = Solver::new(&RobotGeometry::preset("prototype1").unwrap()).unwrap();
        TeleopSession::new(solver, PhantomScene::builtin(), config)
    }

    fn set(eta: Option<f64>, rotation: Option<f64>, tau: Option<f64>) -> CommandSet {
        CommandSet { eta, rotation, tau }
    }

    #[test]
    fn eta_clamps_with_status() {
        let mut s = session(SessionConfig::default());
        s.apply_command(CommandInput::Set(set(Some(0.98), None, None)));
        let ev = s.apply_command(CommandInput::Delta(set(Some(0.05), None, None)));
        assert_eq!(s.commands().eta, 1.0);
        assert!(ev.iter().any(|e| matches!(&e.body, EventBody::Status(st) if st.clamped == ["eta"])));
    }

    #[test]
    fn tau_clamps_to_max() {
        let mut s = session(SessionConfig {
            tau_max: 0.7,
            ..SessionConfig::default()
        });
        s.apply_command(CommandInput::Set(set(None, None, Some(0.65))));
        s.apply_command(CommandInput::Delta(set(None, None, Some(0.1))));
        assert_eq!(s.commands().tau, 0.7);
    }

    #[test]
    fn assist_forces_rotation_and_tension() {
        let mut s = session(SessionConfig {
            ftl_assist: true,
            ..SessionConfig::default()
        });
        s.apply_command(CommandInput::Set(set(Some(0.5), Some(1.0), Some(0.1))));
        assert_eq!(s.commands().rotation, -PI);
        assert_eq!(s.commands().tau, 0.7);
    }

    #[test]
    fn zero_eta_gives_empty_shape() {
        let mut s = session(SessionConfig::default());
        let ev = s.recompute_shape();
        assert!(matches!(&ev[0].body, EventBody::Shape { points, .. } if points.is_empty()));
    }

    #[test]
    fn sequence_numbers_are_gapless() {
        let mut s = session(SessionConfig::default());
        let mut all = Vec::new();
        all.extend(s.apply_command(CommandInput::Set(set(Some(2.0), None, Some(0.4)))));
        all.extend(s.recompute_shape());
        all.extend(s.snapshot());
        all.extend(s.apply_command(CommandInput::Assist(true)));
        for (k, e) in all.iter().enumerate() {
            assert_eq!(e.seq, k as u64);
        }
    }

    #[test]
    fn failed_solve_keeps_previous_shape() {
        let mut s = session(SessionConfig::default());
        s.apply_command(CommandInput::Set(set(Some(0.5), None, Some(0.3))));
        s.recompute_shape();
        let before = s.latest().cloned();
        // a degenerate solver forces an error event
        s.solver = s.solver.clone().with_options(crate::statics::ShootingOptions {
            max_iterations: 0,
            continuation_stages: 0,
            tolerance: 0.0,
            ..Default::default()
        });
        s.apply_command(CommandInput::Set(set(None, None, Some(0.6))));
        s.config.gravity_enabled = true;
        let ev = s.recompute_shape();
        assert!(matches!(ev[0].body, EventBody::Error { .. }), "{ev:?}");
        assert_eq!(s.latest().cloned(), before);
    }
}
