//! Batch commands behind the `notchrod` binary.
//!
//! Every command is deterministic: the same inputs produce byte-identical
//! files. Files are written to a temporary name and renamed into place.

use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};
use serde::{Deserialize, Serialize};

use crate::error::{Error, SolveError};
use crate::ftl::{self, FtlPlanConfig, TensionSchedule};
use crate::geometry::{RobotGeometry, SectionProperties};
use crate::metrics::{self, Trajectory};
use crate::statics::{io, LoadCase, Solver};
use crate::teleop::{PhantomScene, SessionConfig, TeleopServer, TeleopSession};

#[derive(Debug, Parser)]
#[command(name = "notchrod", version, about = "Notched-tube rod statics and FTL planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Geometry preset (prototype1..prototype4).
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, value_enum)]
    pub gravity: Option<Switch>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-section properties of a geometry.
    Section {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the rod shape for one tension and exposure.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Tendon tension (N).
        #[arg(long)]
        tau: Option<f64>,
        /// Progression factor in (0, 1].
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Plan follow-the-leader tensions.
    Ftl {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tau_des: Option<f64>,
        #[arg(long)]
        delta_eta: Option<f64>,
        /// Deviation (mm) at which the zero-tension candidate is accepted outright.
        #[arg(long)]
        deviation_tolerance: Option<f64>,
        /// Also write the fitted quadratic tension schedule.
        #[arg(long)]
        fit: bool,
        /// Replay a fixed schedule `c2,c1,c0` against the reference.
        #[arg(long, allow_hyphen_values = true)]
        replay_polynomial: Option<String>,
    },
    /// Compare two trajectory CSV files (px,py,pz columns).
    Metrics {
        a: PathBuf,
        b: PathBuf,
        /// Resample both curves to this many points before pairing.
        #[arg(long)]
        resample: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run the teleoperation WebSocket service.
    Serve {
        #[command(flatten)]
        common: Common,
        /// Phantom scene JSON; the shipped scene when absent.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, default_value_t = 8765)]
        port: u16,
        /// Start with FTL assist on.
        #[arg(long)]
        assist: bool,
        /// Assist schedule `c2,c1,c0` (default: constant 0.7 N).
        #[arg(long, allow_hyphen_values = true)]
        schedule: Option<String>,
    },
}

/// Optional JSON configuration shared by all commands.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub geometry: Option<RobotGeometry>,
    pub gravity: Option<bool>,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub ftl: Option<FtlPlanConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line() as u64,
            message: e.to_string(),
        })
    }
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    /// Some computation did not converge; diagnostics were still written.
    Failed,
}

fn read_to_string(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)?;
    f.sync_all().map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

struct Resolved {
    geometry: RobotGeometry,
    gravity: bool,
    config: RunConfig,
    out: PathBuf,
    format: Format,
}

fn resolve(common: &Common) -> Result<Resolved, Error> {
    let config = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let geometry = match (&common.preset, &config.geometry, &config.preset) {
        (Some(name), _, _) => RobotGeometry::preset(name)?,
        (None, Some(g), _) => *g,
        (None, None, Some(name)) => RobotGeometry::preset(name)?,
        (None, None, None) => RobotGeometry::preset("prototype1")?,
    };
    geometry.validate()?;
    let gravity = match common.gravity {
        Some(s) => s == Switch::On,
        None => config.gravity.unwrap_or(false),
    };
    Ok(Resolved {
        geometry,
        gravity,
        config,
        out: common.out.clone().unwrap_or_else(|| PathBuf::from("notchrod-out")),
        format: common.format,
    })
}

pub fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Section { common } => cmd_section(&common),
        Command::Solve { common, tau, eta } => cmd_solve(&common, tau, eta),
        Command::Ftl {
            common,
            tau_des,
            delta_eta,
            deviation_tolerance,
            fit,
            replay_polynomial,
        } => cmd_ftl(
            &common,
            FtlOverrides {
                tau_des,
                delta_eta,
                deviation_tolerance,
            },
            fit,
            replay_polynomial.as_deref(),
        ),
        Command::Metrics {
            a,
            b,
            resample,
            out,
            format,
        } => cmd_metrics(&a, &b, resample, out.as_deref(), format),
        Command::Serve {
            common,
            scene,
            port,
            assist,
            schedule,
        } => cmd_serve(&common, scene.as_deref(), port, assist, schedule.as_deref()),
    }
}

#[derive(Serialize)]
struct SectionReport {
    geometry: RobotGeometry,
    properties: SectionProperties,
}

fn section_csv(p: &SectionProperties) -> String {
    let rows = [
        ("area", p.area),
        ("r_na", p.r_na),
        ("i_x", p.i_x),
        ("i_y", p.i_y),
        ("i_z", p.i_z),
        ("lambda", p.lambda),
        ("l_na", p.l_na),
        ("r_tendon_x", p.r_tendon.x),
        ("r_tendon_y", p.r_tendon.y),
        ("r_tendon_z", p.r_tendon.z),
    ];
    let mut s = String::from("quantity,value\n");
    for (k, v) in rows {
        s.push_str(&format!("{k},{v}\n"));
    }
    s
}

pub fn cmd_section(common: &Common) -> Result<Outcome, Error> {
    let r = resolve(common)?;
    let props = SectionProperties::new(&r.geometry)?;
    let text = match r.format {
        Format::Csv => section_csv(&props).into_bytes(),
        Format::Json => json_bytes(&SectionReport {
            geometry: r.geometry,
            properties: props,
        }),
    };
    std::io::stdout()
        .write_all(&text)
        .map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        })?;
    if common.out.is_some() {
        let ext = if r.format == Format::Csv { "csv" } else { "json" };
        write_atomic(&r.out.join(format!("section.{ext}")), &text)?;
    }
    Ok(Outcome::Converged)
}

#[derive(Serialize)]
struct SolveDiagnostics {
    converged: bool,
    tau: f64,
    eta: f64,
    gravity: bool,
    residual_norm: Option<f64>,
    iterations: Option<usize>,
    stage_iterations: Option<Vec<usize>>,
    arc_length: Option<f64>,
    tip: Option<[f64; 3]>,
    error: Option<String>,
}

pub fn cmd_solve(common: &Common, tau: Option<f64>, eta: Option<f64>) -> Result<Outcome, Error> {
    let r = resolve(common)?;
    let tau = tau.or(r.config.tau).unwrap_or(0.0);
    let eta = eta.or(r.config.eta).unwrap_or(1.0);
    let load = LoadCase::tension(tau).with_gravity(r.gravity);
    load.validate()?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(SolveError::EtaOutOfRange(eta).into());
    }
    let solver = Solver::new(&r.geometry)?;
    let result = solver.solve_progressive(&load, eta);
    let mut diag = SolveDiagnostics {
        converged: result.is_ok(),
        tau,
        eta,
        gravity: r.gravity,
        residual_norm: None,
        iterations: None,
        stage_iterations: None,
        arc_length: None,
        tip: None,
        error: None,
    };
    let outcome = match &result {
        Ok(sol) => {
            let tip = sol.tip().p;
            diag.residual_norm = Some(sol.residual_norm);
            diag.iterations = Some(sol.iterations);
            diag.stage_iterations = Some(sol.stage_iterations.clone());
            diag.arc_length = Some(Trajectory::new(sol.positions())?.length());
            diag.tip = Some([tip.x, tip.y, tip.z]);
            match r.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    io::write_solution_csv(sol, &mut buf)?;
                    write_atomic(&r.out.join("solution.csv"), &buf)?;
                }
                Format::Json => {
                    write_atomic(&r.out.join("solution.json"), &json_bytes(&io::solution_to_json(sol)))?;
                }
            }
            info!("tip {:?} after {} iterations", diag.tip.unwrap(), sol.iterations);
            Outcome::Converged
        }
        Err(e) => {
            error!("solve failed: {e}");
            diag.error = Some(e.to_string());
            Outcome::Failed
        }
    };
    write_atomic(&r.out.join("diagnostics.json"), &json_bytes(&diag))?;
    Ok(outcome)
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct FtlOverrides {
    pub tau_des: Option<f64>,
    pub delta_eta: Option<f64>,
    pub deviation_tolerance: Option<f64>,
}

pub fn cmd_ftl(
    common: &Common,
    overrides: FtlOverrides,
    fit: bool,
    replay: Option<&str>,
) -> Result<Outcome, Error> {
    let r = resolve(common)?;
    let schedule = replay
        .map(|s| s.parse::<TensionSchedule>().map_err(|e| Error::Config(format!("--replay-polynomial: {e}"))))
        .transpose()?;
    let mut config = r.config.ftl.clone().unwrap_or_else(|| FtlPlanConfig::new(0.7));
    if let Some(t) = overrides.tau_des {
        config.tau_des = t;
    }
    if let Some(d) = overrides.delta_eta {
        config.delta_eta = d;
    }
    if let Some(d) = overrides.deviation_tolerance {
        config.deviation_tolerance = d;
    }
    config.gravity_enabled = r.gravity;
    config.validate()?;

    let solver = Solver::new(&r.geometry)?;
    let plan = ftl::plan_ftl_with(&solver, &config)?;
    let mut outcome = if plan.is_complete() {
        Outcome::Converged
    } else {
        Outcome::Failed
    };

    match r.format {
        Format::Json => write_atomic(&r.out.join("plan.json"), &json_bytes(&plan.to_json()))?,
        Format::Csv => {
            let mut buf = Vec::new();
            ftl::write_plan_csv(&plan, &mut buf)?;
            write_atomic(&r.out.join("plan.csv"), &buf)?;
        }
    }
    let mut buf = Vec::new();
    metrics::write_trajectory_csv(&plan.reference, &mut buf)?;
    write_atomic(&r.out.join("reference.csv"), &buf)?;
    for (step, shape) in plan.steps.iter().zip(&plan.shapes) {
        if let Some(sol) = shape {
            let mut buf = Vec::new();
            io::write_solution_csv(sol, &mut buf)?;
            write_atomic(&r.out.join("shapes").join(format!("eta_{:.3}.csv", step.eta)), &buf)?;
        }
    }
    for s in &plan.steps {
        match (s.tau_opt, s.deviation) {
            (Some(t), Some(d)) => println!("eta {:.3}  tau_opt {t:.4} N  deviation {d:.4} mm", s.eta),
            _ => println!("eta {:.3}  FAILED  {}", s.eta, s.failure.as_deref().unwrap_or("")),
        }
    }

    if fit {
        let doc = serde_json::json!({
            "degree": 2,
            "coefficients": plan.poly_coeffs(),
            "residual_rms": plan.fit.as_ref().map(|f| f.residual_rms),
            "error": plan.fit_error,
        });
        write_atomic(&r.out.join("fit.json"), &json_bytes(&doc))?;
        match plan.poly_coeffs() {
            Some([c2, c1, c0]) => println!("fit tau(eta) = {c2:.4} eta^2 + {c1:.4} eta + {c0:.4}"),
            None => {
                println!("fit failed: {}", plan.fit_error.as_deref().unwrap_or(""));
                outcome = Outcome::Failed;
            }
        }
    }

    if let Some(schedule) = schedule {
        let load = config.load();
        match ftl::replay_schedule(&solver, &load, &schedule, &plan.reference, &config.eta_grid()) {
            Ok(report) => {
                write_atomic(&r.out.join("replay.json"), &json_bytes(&report))?;
                println!("replay RMSE {:.4} mm  MED {:.4} mm", report.rmse, report.med);
            }
            Err(e) => {
                error!("replay failed: {e}");
                write_atomic(
                    &r.out.join("replay.json"),
                    &json_bytes(&serde_json::json!({ "error": e.to_string() })),
                )?;
                outcome = Outcome::Failed;
            }
        }
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub points: usize,
    pub rmse: f64,
    pub med: f64,
    pub nearest_rmse: f64,
}

pub fn compare_files(a: &Path, b: &Path, resample: Option<usize>) -> Result<MetricsReport, Error> {
    let load = |p: &Path| -> Result<Trajectory, Error> {
        let text = read_to_string(p)?;
        let points = io::read_positions_csv(text.as_bytes(), &p.display().to_string())?;
        Ok(Trajectory::new(points)?)
    };
    let (ta, tb) = (load(a)?, load(b)?);
    let (pa, pb) = match resample {
        None if ta.len() == tb.len() => (ta.points().to_vec(), tb.points().to_vec()),
        n => {
            let n = n.unwrap_or(ta.len().max(tb.len()));
            (
                ta.resample_by_arclength(n)?.points().to_vec(),
                tb.resample_by_arclength(n)?.points().to_vec(),
            )
        }
    };
    Ok(MetricsReport {
        points: pa.len(),
        rmse: metrics::rmse_paired(&pa, &pb)?,
        med: metrics::max_euclidean_distance(&pa, &pb)?,
        nearest_rmse: metrics::nearest_point_rmse(ta.points(), &tb)?,
    })
}

pub fn cmd_metrics(
    a: &Path,
    b: &Path,
    resample: Option<usize>,
    out: Option<&Path>,
    format: Format,
) -> Result<Outcome, Error> {
    let report = compare_files(a, b, resample)?;
    let text = match format {
        Format::Json => json_bytes(&report),
        Format::Csv => format!(
            "points,rmse,med,nearest_rmse\n{},{},{},{}\n",
            report.points, report.rmse, report.med, report.nearest_rmse
        )
        .into_bytes(),
    };
    std::io::stdout()
        .write_all(&text)
        .map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        })?;
    if let Some(dir) = out {
        let ext = if format == Format::Csv { "csv" } else { "json" };
        write_atomic(&dir.join(format!("metrics.{ext}")), &text)?;
    }
    Ok(Outcome::Converged)
}

pub fn cmd_serve(
    common: &Common,
    scene: Option<&Path>,
    port: u16,
    assist: bool,
    schedule: Option<&str>,
) -> Result<Outcome, Error> {
    let r = resolve(common)?;
    let scene = match scene {
        Some(p) => PhantomScene::load(p)?,
        None => PhantomScene::builtin(),
    };
    let mut config = SessionConfig {
        gravity_enabled: r.gravity,
        ftl_assist: assist,
        ..SessionConfig::default()
    };
    if let Some(s) = schedule {
        config.schedule = s.parse().map_err(|e| Error::Config(format!("--schedule: {e}")))?;
    }
    let session = TeleopSession::new(Solver::new(&r.geometry)?, scene, config);
    let addr = format!("127.0.0.1:{port}");
    let listener = TcpListener::bind(&addr).map_err(|source| Error::Io { path: addr, source })?;
    let server = TeleopServer::start(listener, session).map_err(|source| Error::Io {
        path: "listener".into(),
        source,
    })?;
    println!("listening on ws://{}", server.local_addr());
    server.wait();
    Ok(Outcome::Converged)
}
