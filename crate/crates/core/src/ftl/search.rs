use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::metrics::Trajectory;
use crate::statics::{LoadCase, Solution, Solver};

use super::{body_deviation, truncated_reference};

/// Tension search bounds and stopping rules for one progression step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensionSearch {
    pub lower: f64,
    pub upper: f64,
    /// Coarse grid size over `[lower, upper]`.
    pub grid_points: usize,
    /// Final bracket width of the golden-section refinement (N).
    pub tolerance: f64,
    /// Accept `lower` without searching when its deviation is below this (mm).
    pub early_stop: Option<f64>,
}

impl TensionSearch {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            grid_points: 21,
            tolerance: 1e-3,
            early_stop: None,
        }
    }

    fn validate(&self) -> Result<(), PlanError> {
        if !(self.lower >= 0.0 && self.upper > self.lower && self.upper.is_finite()) {
            return Err(PlanError::InvalidConfig(format!(
                "tension bounds must satisfy 0 <= lower < upper, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        if self.grid_points < 2 {
            return Err(PlanError::InvalidConfig("grid_points must be >= 2".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(PlanError::InvalidConfig("tolerance must be positive".into()));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        let n = self.grid_points - 1;
        (0..=n)
            .map(|k| self.lower + (self.upper - self.lower) * k as f64 / n as f64)
            .collect()
    }
}

/// One objective evaluation, kept for post-hoc inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub tau: f64,
    pub deviation: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

impl Evaluation {
    fn objective(&self) -> f64 {
        self.deviation.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensionOptimum {
    pub tau_opt: f64,
    pub deviation: f64,
    pub solution: Solution,
    /// Grid evaluations first, then refinement, in evaluation order.
    pub evaluations: Vec<Evaluation>,
    pub early_stopped: bool,
}

/// Minimizes `f` on `[a, b]` until the bracket is narrower than `tol`.
/// Returns the best point evaluated.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = if fd < fc { (d, fd) } else { (c, fc) };
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

#[derive(Default)]
struct Log {
    evaluations: Vec<Evaluation>,
    solutions: Vec<Option<Solution>>,
}

impl Log {
    fn push(&mut self, (ev, sol): (Evaluation, Option<Solution>)) {
        self.evaluations.push(ev);
        self.solutions.push(sol);
    }
}

struct Objective<'a> {
    solver: &'a Solver,
    load: &'a LoadCase,
    eta: f64,
    reference: Trajectory,
    warm_start: Option<&'a Solution>,
}

impl Objective<'_> {
    fn eval(&self, tau: f64) -> (Evaluation, Option<Solution>) {
        let load = self.load.with_tau(tau);
        let solved = self
            .solver
            .solve_progressive(&load, self.eta)
            .or_else(|e| match self.warm_start {
                Some(ws) => self
                    .solver
                    .solve_posed(&load, self.eta, crate::statics::ftl_rotation(self.eta), Some(ws)),
                None => Err(e),
            });
        match solved {
            Ok(sol) => match body_deviation(&sol, &self.reference) {
                Ok(dev) => (
                    Evaluation {
                        tau,
                        deviation: Some(dev),
                        iterations: Some(sol.iterations),
                        error: None,
                    },
                    Some(sol),
                ),
                Err(e) => (failed(tau, e.to_string()), None),
            },
            Err(e) => (failed(tau, e.to_string()), None),
        }
    }
}

fn failed(tau: f64, error: String) -> Evaluation {
    Evaluation {
        tau,
        deviation: None,
        iterations: None,
        error: Some(error),
    }
}

/// Finds the tension whose exposed body at `eta` stays closest to the
/// proximal `η L_na` of `reference`.
///
/// A coarse grid (plus `seed`, typically the previous step's optimum) is
/// evaluated in parallel, then golden-section search refines the bracket
/// around the best candidate. `warm_start` is used as a Newton guess only
/// when the default guess fails.
pub fn optimize_tension(
    solver: &Solver,
    eta: f64,
    reference: &Trajectory,
    load: &LoadCase,
    search: &TensionSearch,
    seed: Option<f64>,
    warm_start: Option<&Solution>,
) -> Result<TensionOptimum, PlanError> {
    search.validate()?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(crate::error::SolveError::EtaOutOfRange(eta).into());
    }
    let objective = Objective {
        solver,
        load,
        eta,
        reference: truncated_reference(reference, solver.model().props.l_na, eta),
        warm_start,
    };

    let mut log = Log::default();

    if let Some(threshold) = search.early_stop {
        let (ev, sol) = objective.eval(search.lower);
        if let (Some(dev), Some(sol)) = (ev.deviation, sol.as_ref()) {
            if dev < threshold {
                debug!("eta {eta}: early stop at tau {} (deviation {dev:.3e})", search.lower);
                return Ok(TensionOptimum {
                    tau_opt: search.lower,
                    deviation: dev,
                    solution: sol.clone(),
                    evaluations: vec![ev],
                    early_stopped: true,
                });
            }
        }
        log.push((ev, sol));
    }

    let mut candidates = search.grid();
    if let Some(s) = seed {
        if s > search.lower && s < search.upper {
            candidates.push(s);
        }
    }
    if search.early_stop.is_some() {
        candidates.remove(0);
    }
    let grid: Vec<_> = candidates.par_iter().map(|&tau| objective.eval(tau)).collect();
    grid.into_iter().for_each(|out| log.push(out));

    let mut ranked: Vec<(f64, f64)> = log.evaluations.iter().map(|e| (e.tau, e.objective())).collect();
    ranked.sort_by(|x, y| x.0.total_cmp(&y.0));
    let best = (0..ranked.len())
        .min_by(|&i, &j| ranked[i].1.total_cmp(&ranked[j].1).then(i.cmp(&j)))
        .expect("grid is nonempty");
    if !ranked[best].1.is_finite() {
        let first = log
            .evaluations
            .iter()
            .find_map(|e| e.error.clone())
            .unwrap_or_else(|| "no finite deviation".into());
        return Err(PlanError::AllSolvesFailed {
            eta,
            count: log.evaluations.len(),
            first,
        });
    }
    let lo = ranked[best.saturating_sub(1)].0;
    let hi = ranked[(best + 1).min(ranked.len() - 1)].0;
    if hi > lo {
        golden_section(
            |tau| {
                let out = objective.eval(tau);
                let f = out.0.objective();
                log.push(out);
                f
            },
            lo,
            hi,
            search.tolerance,
        );
    }

    let Log {
        evaluations,
        mut solutions,
    } = log;
    let (idx, ev) = evaluations
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.objective().total_cmp(&b.objective()).then(i.cmp(j)))
        .expect("nonempty");
    let tau_opt = ev.tau;
    let deviation = ev.objective();
    let solution = solutions.swap_remove(idx).expect("finite objective has a solution");
    debug!("eta {eta}: tau_opt {tau_opt:.4} deviation {deviation:.3e} ({} evaluations)", evaluations.len());
    Ok(TensionOptimum {
        tau_opt,
        deviation,
        solution,
        evaluations,
        early_stopped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ftl::ftl_reference;
    use crate::geometry::RobotGeometry;

    #[test]
    fn golden_finds_parabola_minimum() {
        let mut calls = 0;
        let (x, fx) = golden_section(
            |x| {
                calls += 1;
                (x - 0.3217).powi(2)
            },
            0.0,
            1.0,
            1e-6,
        );
        assert!((x - 0.3217).abs() < 1e-6);
        assert!(fx < 1e-12);
        assert!(calls < 40);
    }

    #[test]
    fn gravity_off_recovers_design_tension() {
        let solver = Solver::new(&RobotGeometry::preset("prototype1").unwrap()).unwrap();
        let load = LoadCase::default();
        let (reference, _) = ftl_reference(&solver, 0.45, &load).unwrap();
        let opt = optimize_tension(&solver, 0.5, &reference, &load, &TensionSearch::new(0.0, 0.9), None, None)
            .unwrap();
        assert!((opt.tau_opt - 0.45).abs() < 0.02, "{}", opt.tau_opt);
        assert!(opt.deviation < 0.05);
        let again = body_deviation(&opt.solution, &truncated_reference(&reference, solver.model().props.l_na, 0.5))
            .unwrap();
        assert_eq!(again, opt.deviation);
        assert!(opt.evaluations.len() > 21);
    }

    #[test]
    fn early_stop_keeps_lower_bound() {
        let solver = Solver::new(&RobotGeometry::preset("prototype1").unwrap()).unwrap();
        let load = LoadCase::default();
        let (reference, _) = ftl_reference(&solver, 0.2, &load).unwrap();
        let mut search = TensionSearch::new(0.0, 0.4);
        search.early_stop = Some(0.5);
        let opt = optimize_tension(&solver, 0.05, &reference, &load, &search, None, None).unwrap();
        assert!(opt.early_stopped);
        assert_eq!(opt.tau_opt, 0.0);
        assert_eq!(opt.evaluations.len(), 1);
    }
}
