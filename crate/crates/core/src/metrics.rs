//! Polyline trajectories and the error metrics used to compare them.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::MetricsError;

/// Ordered polyline with cached cumulative arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    points: Vec<Vector3<f64>>,
    cum_arclength: Vec<f64>,
}

impl Trajectory {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self, MetricsError> {
        if points.len() < 2 {
            return Err(MetricsError::TooFewPoints(points.len()));
        }
        let mut cum_arclength = Vec::with_capacity(points.len());
        let mut total = 0.0;
        cum_arclength.push(0.0);
        for w in points.windows(2) {
            total += (w[1] - w[0]).norm();
            cum_arclength.push(total);
        }
        Ok(Self {
            points,
            cum_arclength,
        })
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn cum_arclength(&self) -> &[f64] {
        &self.cum_arclength
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        *self.cum_arclength.last().unwrap()
    }

    pub fn start(&self) -> Vector3<f64> {
        self.points[0]
    }

    pub fn end(&self) -> Vector3<f64> {
        *self.points.last().unwrap()
    }

    /// Point at cumulative arc length `s`, clamped to the ends.
    pub fn point_at(&self, s: f64) -> Vector3<f64> {
        if s <= 0.0 {
            return self.start();
        }
        if s >= self.length() {
            return self.end();
        }
        // first index with cum > s
        let hi = self.cum_arclength.partition_point(|&c| c <= s);
        let lo = hi - 1;
        let seg = self.cum_arclength[hi] - self.cum_arclength[lo];
        if seg == 0.0 {
            return self.points[lo];
        }
        let t = (s - self.cum_arclength[lo]) / seg;
        self.points[lo] + (self.points[hi] - self.points[lo]) * t
    }

    /// Leading part of the polyline up to arc length `s`, ending exactly at
    /// `point_at(s)`. Keeps at least two points.
    pub fn truncate(&self, s: f64) -> Trajectory {
        if s >= self.length() {
            return self.clone();
        }
        let s = s.max(0.0);
        let keep = self.cum_arclength.partition_point(|&c| c < s).max(1);
        let mut points: Vec<_> = self.points[..keep].to_vec();
        points.push(self.point_at(s));
        Trajectory::new(points).expect("at least two points")
    }

    /// `n` points at equal arc-length spacing; endpoints preserved.
    pub fn resample_by_arclength(&self, n: usize) -> Result<Trajectory, MetricsError> {
        if n < 2 {
            return Err(MetricsError::BadCount(n));
        }
        let total = self.length();
        if total <= 0.0 {
            return Err(MetricsError::ZeroLength);
        }
        let mut points: Vec<_> = (0..n)
            .map(|k| self.point_at(total * k as f64 / (n - 1) as f64))
            .collect();
        points[0] = self.start();
        points[n - 1] = self.end();
        Trajectory::new(points)
    }

    /// Distance from `q` to the nearest point of the polyline.
    pub fn distance_to(&self, q: &Vector3<f64>) -> f64 {
        self.points
            .windows(2)
            .map(|w| point_segment_distance(q, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Writes `s,px,py,pz` rows; readable by [`crate::statics::io::read_positions_csv`].
pub fn write_trajectory_csv<W: std::io::Write>(traj: &Trajectory, out: W) -> Result<(), crate::Error> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| crate::Error::Config(format!("csv write: {e}"));
    w.write_record(["s", "px", "py", "pz"]).map_err(to_err)?;
    for (p, s) in traj.points.iter().zip(&traj.cum_arclength) {
        w.write_record([s.to_string(), p.x.to_string(), p.y.to_string(), p.z.to_string()])
            .map_err(to_err)?;
    }
    w.flush().map_err(|source| crate::Error::Io {
        path: "<csv>".into(),
        source,
    })
}

/// Distance from `q` to the segment `[a, b]`.
pub fn point_segment_distance(q: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((q - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a + ab * t - q).norm()
}

fn check_pair(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> Result<(), MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::CountMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Root mean square of pointwise distances between equally long point lists.
pub fn rmse_paired(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> Result<f64, MetricsError> {
    check_pair(a, b)?;
    let sum: f64 = a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// Largest pointwise distance between equally long point lists.
pub fn max_euclidean_distance(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> Result<f64, MetricsError> {
    check_pair(a, b)?;
    Ok(a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max))
}

/// RMS over `points` of the distance to the nearest point of `reference`.
pub fn nearest_point_rmse(points: &[Vector3<f64>], reference: &Trajectory) -> Result<f64, MetricsError> {
    if points.is_empty() {
        return Err(MetricsError::Empty);
    }
    let sum: f64 = points
        .iter()
        .map(|q| reference.distance_to(q).powi(2))
        .sum();
    Ok((sum / points.len() as f64).sqrt())
}

/// Paired metrics after resampling both curves to `n` points by normalized arc length.
pub fn compare_resampled(a: &Trajectory, b: &Trajectory, n: usize) -> Result<(f64, f64), MetricsError> {
    let (ra, rb) = (a.resample_by_arclength(n)?, b.resample_by_arclength(n)?);
    Ok((
        rmse_paired(ra.points(), rb.points())?,
        max_euclidean_distance(ra.points(), rb.points())?,
    ))
}
