//! Solution file formats.
//!
//! CSV, one row per sample:
//! `s,px,py,pz,r11,r12,r13,r21,r22,r23,r31,r32,r33,vx,vy,vz,ux,uy,uz`
//! (orientation row-major). Readers only require `px,py,pz`, located by
//! header name, so plain `px,py,pz` point files are accepted too.
//!
//! JSON: `{"format":"notchrod.solution","version":1, ...diagnostics, "samples":[...]}`.

use std::io::{Read, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::Error;

use super::{RodState, Solution};

pub const SOLUTION_FORMAT: &str = "notchrod.solution";
pub const SOLUTION_FORMAT_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 19] = [
    "s", "px", "py", "pz", "r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33", "vx",
    "vy", "vz", "ux", "uy", "uz",
];

fn state_row(st: &RodState) -> Vec<String> {
    let mut row = Vec::with_capacity(CSV_HEADER.len());
    row.push(st.s.to_string());
    row.extend(st.p.iter().map(f64::to_string));
    for i in 0..3 {
        for j in 0..3 {
            row.push(st.r[(i, j)].to_string());
        }
    }
    row.extend(st.v.iter().map(f64::to_string));
    row.extend(st.u.iter().map(f64::to_string));
    row
}

/// Writes the sample table of `states` as CSV.
pub fn write_states_csv<W: Write>(states: &[RodState], out: W) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::Config(format!("csv write: {e}"));
    w.write_record(CSV_HEADER).map_err(to_err)?;
    for st in states {
        w.write_record(state_row(st)).map_err(to_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv>".into(),
        source,
    })
}

pub fn write_solution_csv<W: Write>(sol: &Solution, out: W) -> Result<(), Error> {
    write_states_csv(&sol.samples, out)
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleDoc {
    s: f64,
    p: [f64; 3],
    #[serde(rename = "R")]
    r: [[f64; 3]; 3],
    v: [f64; 3],
    u: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
struct SolutionDoc {
    format: String,
    version: u32,
    tau: f64,
    eta: f64,
    base_rotation: f64,
    converged: bool,
    residual_norm: f64,
    iterations: usize,
    stage_iterations: Vec<usize>,
    samples: Vec<SampleDoc>,
}

fn arr(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

pub fn solution_to_json(sol: &Solution) -> serde_json::Value {
    let doc = SolutionDoc {
        format: SOLUTION_FORMAT.into(),
        version: SOLUTION_FORMAT_VERSION,
        tau: sol.tau,
        eta: sol.eta,
        base_rotation: sol.base_rotation,
        converged: sol.converged,
        residual_norm: sol.residual_norm,
        iterations: sol.iterations,
        stage_iterations: sol.stage_iterations.clone(),
        samples: sol
            .samples
            .iter()
            .map(|st| SampleDoc {
                s: st.s,
                p: arr(&st.p),
                r: [0, 1, 2].map(|i| [0, 1, 2].map(|j| st.r[(i, j)])),
                v: arr(&st.v),
                u: arr(&st.u),
            })
            .collect(),
    };
    serde_json::to_value(doc).expect("solution serializes")
}

/// Parses a solution JSON document back into a [`Solution`].
pub fn solution_from_json(value: &serde_json::Value) -> Result<Solution, Error> {
    let doc: SolutionDoc = serde_json::from_value(value.clone())?;
    if doc.format != SOLUTION_FORMAT || doc.version != SOLUTION_FORMAT_VERSION {
        return Err(Error::Config(format!(
            "unsupported solution format {} v{}",
            doc.format, doc.version
        )));
    }
    Ok(Solution {
        samples: doc
            .samples
            .into_iter()
            .map(|d| RodState {
                s: d.s,
                p: Vector3::from(d.p),
                r: nalgebra::Matrix3::from_fn(|i, j| d.r[i][j]),
                v: Vector3::from(d.v),
                u: Vector3::from(d.u),
            })
            .collect(),
        tau: doc.tau,
        eta: doc.eta,
        base_rotation: doc.base_rotation,
        residual_norm: doc.residual_norm,
        iterations: doc.iterations,
        stage_iterations: doc.stage_iterations,
        converged: doc.converged,
    })
}

/// Reads the `px,py,pz` columns of a CSV trajectory. `path` only labels errors.
pub fn read_positions_csv<R: Read>(input: R, path: &str) -> Result<Vec<Vector3<f64>>, Error> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column `{name}`")))
    };
    let cols = [column("px")?, column("py")?, column("pz")?];
    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut xyz = [0.0; 3];
        for (k, &c) in cols.iter().enumerate() {
            let field = record
                .get(c)
                .ok_or_else(|| parse_err(line, format!("missing field {}", CSV_HEADER[k + 1])))?;
            xyz[k] = field
                .parse()
                .map_err(|e| parse_err(line, format!("`{field}`: {e}")))?;
        }
        points.push(Vector3::from(xyz));
    }
    Ok(points)
}
