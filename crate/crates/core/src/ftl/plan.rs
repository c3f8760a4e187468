use std::io::Write;
use std::str::FromStr;

use log::{info, warn};
use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, PlanError};
use crate::geometry::RobotGeometry;
use crate::metrics::{max_euclidean_distance, rmse_paired, Trajectory};
use crate::statics::{LoadCase, Solution, Solver};

use super::search::{optimize_tension, Evaluation, TensionSearch};
use super::ftl_reference;

fn default_delta_eta() -> f64 {
    0.05
}

fn default_deviation_tolerance() -> f64 {
    0.5
}

fn default_grid_points() -> usize {
    21
}

fn default_search_tolerance() -> f64 {
    1e-3
}

/// Planner settings. Only `tau_des` is required in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtlPlanConfig {
    pub tau_des: f64,
    #[serde(default = "default_delta_eta")]
    pub delta_eta: f64,
    /// Upper tension bound; `2 tau_des` when absent.
    #[serde(default)]
    pub tau_max: Option<f64>,
    /// Early-stop threshold (mm) for the lower-bound tension.
    #[serde(default = "default_deviation_tolerance")]
    pub deviation_tolerance: f64,
    #[serde(default)]
    pub gravity_enabled: bool,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_search_tolerance")]
    pub search_tolerance: f64,
}

impl FtlPlanConfig {
    pub fn new(tau_des: f64) -> Self {
        Self {
            tau_des,
            delta_eta: default_delta_eta(),
            tau_max: None,
            deviation_tolerance: default_deviation_tolerance(),
            gravity_enabled: false,
            grid_points: default_grid_points(),
            search_tolerance: default_search_tolerance(),
        }
    }

    pub fn with_gravity(mut self, enabled: bool) -> Self {
        self.gravity_enabled = enabled;
        self
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max.unwrap_or(2.0 * self.tau_des)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::InvalidConfig(m));
        if !(self.tau_des > 0.0 && self.tau_des.is_finite()) {
            return bad(format!("tau_des must be positive, got {}", self.tau_des));
        }
        if !(self.delta_eta > 0.0 && self.delta_eta <= 0.25) {
            return bad(format!("delta_eta must be in (0, 0.25], got {}", self.delta_eta));
        }
        if !(self.tau_max() > self.tau_des && self.tau_max().is_finite()) {
            return bad(format!("tau_max must exceed tau_des, got {}", self.tau_max()));
        }
        if !(self.deviation_tolerance >= 0.0) {
            return bad(format!(
                "deviation_tolerance must be >= 0, got {}",
                self.deviation_tolerance
            ));
        }
        Ok(())
    }

    /// `delta_eta, 2 delta_eta, ...`, ending exactly at 1.
    pub fn eta_grid(&self) -> Vec<f64> {
        let n = (1.0 / self.delta_eta - 1e-9).ceil() as usize;
        let mut grid: Vec<f64> = (1..=n).map(|k| (k as f64 * self.delta_eta).min(1.0)).collect();
        *grid.last_mut().expect("n >= 4") = 1.0;
        grid
    }

    pub fn load(&self) -> LoadCase {
        LoadCase::tension(self.tau_des).with_gravity(self.gravity_enabled)
    }
}

/// Outcome of one progression step. Failed steps carry `failure` and no values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub eta: f64,
    pub tau_opt: Option<f64>,
    pub deviation: Option<f64>,
    /// Tip distance to the reference point at the same fraction of its length.
    pub tip_error: Option<f64>,
    pub early_stopped: bool,
    pub failure: Option<String>,
    pub evaluations: Vec<Evaluation>,
}

/// Least-squares polynomial, coefficients from the highest power down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FtlPlan {
    pub config: FtlPlanConfig,
    pub steps: Vec<PlanStep>,
    pub reference: Trajectory,
    /// Exposed shape at `tau_opt` per step.
    pub shapes: Vec<Option<Solution>>,
    pub fit: Option<PolynomialFit>,
    pub fit_error: Option<String>,
}

impl FtlPlan {
    pub fn eta_grid(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.eta).collect()
    }

    pub fn tau_opt(&self) -> Vec<Option<f64>> {
        self.steps.iter().map(|s| s.tau_opt).collect()
    }

    pub fn deviation(&self) -> Vec<Option<f64>> {
        self.steps.iter().map(|s| s.deviation).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.steps.iter().all(|s| s.failure.is_none())
    }

    /// `(c2, c1, c0)` of the degree-2 fit, if any.
    pub fn poly_coeffs(&self) -> Option<[f64; 3]> {
        let c = &self.fit.as_ref()?.coefficients;
        (c.len() == 3).then(|| [c[0], c[1], c[2]])
    }

    /// Plan document without the reference (stored separately).
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format": "notchrod.ftl_plan",
            "version": 1,
            "config": self.config,
            "tau_max": self.config.tau_max(),
            "complete": self.is_complete(),
            "eta_grid": self.eta_grid(),
            "tau_opt": self.tau_opt(),
            "deviation": self.deviation(),
            "tip_error": self.steps.iter().map(|s| s.tip_error).collect::<Vec<_>>(),
            "poly_coeffs": self.poly_coeffs(),
            "fit_residual_rms": self.fit.as_ref().map(|f| f.residual_rms),
            "fit_error": self.fit_error,
            "reference_length": self.reference.length(),
            "steps": self.steps,
        })
    }
}

/// Writes one row per step: `eta,tau_opt,deviation,tip_error,evaluations,status`.
pub fn write_plan_csv<W: Write>(plan: &FtlPlan, out: W) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::Config(format!("csv write: {e}"));
    w.write_record(["eta", "tau_opt", "deviation", "tip_error", "evaluations", "status"])
        .map_err(to_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in &plan.steps {
        let status = match (&s.failure, s.early_stopped) {
            (Some(_), _) => "failed",
            (None, true) => "early_stop",
            (None, false) => "ok",
        };
        w.write_record([
            s.eta.to_string(),
            opt(s.tau_opt),
            opt(s.deviation),
            opt(s.tip_error),
            s.evaluations.len().to_string(),
            status.to_string(),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv>".into(),
        source,
    })
}

pub fn plan_ftl(geom: &RobotGeometry, config: &FtlPlanConfig) -> Result<FtlPlan, PlanError> {
    plan_ftl_with(&Solver::new(geom)?, config)
}

/// Runs the progressive loop with an explicit solver (custom step counts or
/// tolerances). Per-step failures are recorded, not propagated.
pub fn plan_ftl_with(solver: &Solver, config: &FtlPlanConfig) -> Result<FtlPlan, PlanError> {
    config.validate()?;
    let load = config.load();
    let (reference, _) = ftl_reference(solver, config.tau_des, &load)?;
    let ref_len = reference.length();
    let search = TensionSearch {
        lower: 0.0,
        upper: config.tau_max(),
        grid_points: config.grid_points,
        tolerance: config.search_tolerance,
        early_stop: Some(config.deviation_tolerance),
    };

    let mut steps = Vec::new();
    let mut shapes = Vec::new();
    let mut previous: Option<(f64, Solution)> = None;
    for eta in config.eta_grid() {
        let seed = previous.as_ref().map(|p| p.0);
        let warm = previous.as_ref().map(|p| &p.1);
        match optimize_tension(solver, eta, &reference, &load, &search, seed, warm) {
            Ok(opt) => {
                let tip_error = (opt.solution.tip().p - reference.point_at(eta * ref_len)).norm();
                info!(
                    "eta {eta:.3}: tau_opt {:.4} N, deviation {:.4} mm",
                    opt.tau_opt, opt.deviation
                );
                steps.push(PlanStep {
                    eta,
                    tau_opt: Some(opt.tau_opt),
                    deviation: Some(opt.deviation),
                    tip_error: Some(tip_error),
                    early_stopped: opt.early_stopped,
                    failure: None,
                    evaluations: opt.evaluations,
                });
                previous = Some((opt.tau_opt, opt.solution.clone()));
                shapes.push(Some(opt.solution));
            }
            Err(e) => {
                warn!("eta {eta:.3}: {e}");
                steps.push(PlanStep {
                    eta,
                    tau_opt: None,
                    deviation: None,
                    tip_error: None,
                    early_stopped: false,
                    failure: Some(e.to_string()),
                    evaluations: Vec::new(),
                });
                shapes.push(None);
            }
        }
    }

    let pairs: Vec<(f64, f64)> = steps
        .iter()
        .filter_map(|s| s.tau_opt.map(|t| (s.eta, t)))
        .collect();
    let (fit, fit_error) = match fit_tension_polynomial(&pairs, 2) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(FtlPlan {
        config: config.clone(),
        steps,
        reference,
        shapes,
        fit,
        fit_error,
    })
}

/// Ordinary least squares fit of a polynomial of `degree` to `(x, y)` pairs.
pub fn fit_tension_polynomial(pairs: &[(f64, f64)], degree: usize) -> Result<PolynomialFit, PlanError> {
    let cols = degree + 1;
    if pairs.len() < cols {
        return Err(PlanError::TooFewPoints {
            needed: cols,
            got: pairs.len(),
        });
    }
    let a = DMatrix::from_fn(pairs.len(), cols, |i, j| pairs[i].0.powi((degree - j) as i32));
    let y = DVector::from_iterator(pairs.len(), pairs.iter().map(|p| p.1));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * 1e-10;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if rank < cols {
        return Err(PlanError::RankDeficient { rank, needed: cols });
    }
    let c = svd
        .solve(&y, cutoff)
        .map_err(|e| PlanError::InvalidConfig(e.to_string()))?;
    let residual = &a * &c - y;
    Ok(PolynomialFit {
        coefficients: c.iter().copied().collect(),
        residual_rms: (residual.norm_squared() / pairs.len() as f64).sqrt(),
    })
}

/// Open-loop tension schedule `τ(η)`, highest power first. Evaluation clamps
/// `η` to `[0, 1]` and the tension to `>= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensionSchedule {
    pub coefficients: Vec<f64>,
}

impl TensionSchedule {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    pub fn eval(&self, eta: f64) -> f64 {
        let x = eta.clamp(0.0, 1.0);
        self.coefficients.iter().fold(0.0, |acc, c| acc * x + c).max(0.0)
    }
}

impl FromStr for TensionSchedule {
    type Err = String;

    /// Parses `c2,c1,c0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let coefficients = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(format!("invalid coefficients `{s}`"));
        }
        Ok(Self { coefficients })
    }
}

/// Tip positions of a schedule-driven deployment against the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub schedule: TensionSchedule,
    pub eta: Vec<f64>,
    pub tau: Vec<f64>,
    pub tips: Vec<[f64; 3]>,
    pub reference_points: Vec<[f64; 3]>,
    pub errors: Vec<f64>,
    pub rmse: f64,
    pub med: f64,
}

/// Deploys the rod along `etas` with `τ = schedule(η)` and pairs each tip with
/// the reference point at the same fraction of the reference length.
pub fn replay_schedule(
    solver: &Solver,
    load: &LoadCase,
    schedule: &TensionSchedule,
    reference: &Trajectory,
    etas: &[f64],
) -> Result<ReplayReport, PlanError> {
    let mut tips = Vec::with_capacity(etas.len());
    let mut refs = Vec::with_capacity(etas.len());
    let mut taus = Vec::with_capacity(etas.len());
    for &eta in etas {
        let tau = schedule.eval(eta);
        let sol = solver.solve_progressive(&load.with_tau(tau), eta)?;
        taus.push(tau);
        tips.push(sol.tip().p);
        refs.push(reference.point_at(eta * reference.length()));
    }
    let arr = |v: &Vector3<f64>| [v.x, v.y, v.z];
    Ok(ReplayReport {
        schedule: schedule.clone(),
        eta: etas.to_vec(),
        tau: taus,
        errors: tips.iter().zip(&refs).map(|(a, b)| (a - b).norm()).collect(),
        rmse: rmse_paired(&tips, &refs)?,
        med: max_euclidean_distance(&tips, &refs)?,
        tips: tips.iter().map(arr).collect(),
        reference_points: refs.iter().map(arr).collect(),
    })
}
