use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::metrics::point_segment_distance;

pub const TARGET_LABELS: [&str; 4] = ["lateral", "ventral", "drg_left", "drg_right"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cord {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub radius: f64,
}

impl Cord {
    /// Signed distance from `q` to the cord surface; negative inside.
    pub fn clearance(&self, q: &Vector3<f64>) -> f64 {
        point_segment_distance(q, &self.start.into(), &self.end.into()) - self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub label: String,
    pub center: [f64; 3],
    pub reach_radius: f64,
}

/// Robot base pose in scene coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryFrame {
    pub origin: [f64; 3],
    /// Row-major rotation.
    pub rotation: [[f64; 3]; 3],
}

impl Default for EntryFrame {
    fn default() -> Self {
        Self {
            origin: [0.0; 3],
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }
}

impl EntryFrame {
    pub fn to_scene(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let r = Matrix3::from_fn(|i, j| self.rotation[i][j]);
        r * p + Vector3::from(self.origin)
    }
}

/// Spinal-cord phantom: cord cylinder, named targets and the robot entry pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomScene {
    pub name: String,
    pub cord: Cord,
    pub targets: Vec<Target>,
    #[serde(default)]
    pub entry: EntryFrame,
}

impl PhantomScene {
    /// The scene shipped with the crate.
    pub fn builtin() -> Self {
        serde_json::from_str(include_str!("../../data/phantom.json")).expect("shipped scene parses")
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let scene: Self = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Config(format!("scene `{}`: {m}", self.name)));
        if !(self.cord.radius > 0.0) {
            return bad("cord radius must be positive".into());
        }
        let r = Matrix3::from_fn(|i, j| self.entry.rotation[i][j]);
        if (r.transpose() * r - Matrix3::identity()).norm() > 1e-9 || r.determinant() < 0.0 {
            return bad("entry rotation is not a rotation".into());
        }
        for t in &self.targets {
            if !TARGET_LABELS.contains(&t.label.as_str()) {
                return bad(format!("unknown target label `{}`", t.label));
            }
            if !(t.reach_radius > 0.0) {
                return bad(format!("target `{}` needs a positive reach radius", t.label));
            }
            if self.cord.clearance(&t.center.into()) <= 0.0 {
                return bad(format!("target `{}` lies inside the cord", t.label));
            }
        }
        Ok(())
    }

    pub fn target(&self, label: &str) -> Option<&Target> {
        self.targets.iter().find(|t| t.label == label)
    }
}
