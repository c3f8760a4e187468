//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::Vector3;
use notchrod::RobotGeometry;

/// Section quantities from a composite two-point Gauss rule in polar
/// coordinates over the load-carrying sector `θ ∈ [−ψ/2, ψ/2]`,
/// `r ∈ [r_in, r_out]`.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSection {
    pub area: f64,
    pub r_na: f64,
    /// Second moment about the symmetry axis through the centroid.
    pub i_x: f64,
    /// Second moment about the axis normal to symmetry through the centroid.
    pub i_y: f64,
}

pub fn quadrature_section(g: &RobotGeometry, n_r: usize, n_theta: usize) -> QuadratureSection {
    let dr = (g.r_out - g.r_in) / n_r as f64;
    let dt = g.psi / n_theta as f64;
    let gauss = 0.5 / 3f64.sqrt();
    let nodes = |lo: f64, h: f64, n: usize| -> Vec<f64> {
        (0..n)
            .flat_map(|i| {
                let mid = lo + (i as f64 + 0.5) * h;
                [mid - gauss * h, mid + gauss * h]
            })
            .collect()
    };
    let trig: Vec<(f64, f64)> = nodes(-0.5 * g.psi, dt, n_theta).into_iter().map(f64::sin_cos).collect();
    let radii = nodes(g.r_in, dr, n_r);
    let w = 0.25 * dr * dt;
    let cells = || {
        radii
            .iter()
            .flat_map(|&r| trig.iter().map(move |&(sin, cos)| (r * cos, r * sin, r * w)))
    };
    let (mut a, mut sx) = (0.0, 0.0);
    for (x, _, da) in cells() {
        a += da;
        sx += x * da;
    }
    let xc = sx / a;
    // second pass about the centroid avoids cancellation in I_y
    let (mut i_x, mut i_y) = (0.0, 0.0);
    for (x, y, da) in cells() {
        i_x += y * y * da;
        i_y += (x - xc) * (x - xc) * da;
    }
    QuadratureSection { area: a, r_na: xc, i_x, i_y }
}

/// Linear mass density (kg/m) from a 3-D midpoint rule over one notch
/// period: full annulus over the spacing, sector only across the notch.
/// `n_z` and `n_theta` should put cell edges on the notch boundaries.
pub fn volumetric_lambda(g: &RobotGeometry, n_r: usize, n_theta: usize, n_z: usize) -> f64 {
    let period = g.notch_spacing + g.notch_width;
    let (dr, dt, dz) = (
        (g.r_out - g.r_in) / n_r as f64,
        2.0 * PI / n_theta as f64,
        period / n_z as f64,
    );
    let mut volume = 0.0;
    for k in 0..n_z {
        let z = (k as f64 + 0.5) * dz;
        let in_notch = z >= g.notch_spacing;
        for j in 0..n_theta {
            let theta = -PI + (j as f64 + 0.5) * dt;
            if in_notch && theta.abs() > 0.5 * g.psi {
                continue;
            }
            for i in 0..n_r {
                let r = g.r_in + (i as f64 + 0.5) * dr;
                volume += r * dr * dt * dz;
            }
        }
    }
    g.density * volume / period * 1e-6
}

/// Minimum distance from `q` to a polyline, found by sampling every segment
/// at `per_segment` evenly spaced points.
pub fn brute_force_distance(q: &Vector3<f64>, polyline: &[Vector3<f64>], per_segment: usize) -> f64 {
    let mut best = f64::INFINITY;
    for w in polyline.windows(2) {
        for k in 0..=per_segment {
            let t = k as f64 / per_segment as f64;
            let p = w[0] + (w[1] - w[0]) * t;
            best = best.min((q - p).norm());
        }
    }
    best
}

/// Discrete curvature and torsion at the interior samples of a uniformly
/// parameterized curve, from central differences.
pub fn frenet_estimates(points: &[Vector3<f64>], h: f64) -> Vec<(f64, f64)> {
    (2..points.len() - 2)
        .map(|i| {
            let d1 = (points[i + 1] - points[i - 1]) / (2.0 * h);
            let d2 = (points[i + 1] - 2.0 * points[i] + points[i - 1]) / (h * h);
            let d3 = (points[i + 2] - 2.0 * points[i + 1] + 2.0 * points[i - 1] - points[i - 2])
                / (2.0 * h * h * h);
            let c = d1.cross(&d2);
            (c.norm() / d1.norm().powi(3), c.dot(&d3) / c.norm_squared())
        })
        .collect()
}

pub fn relative_spread(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    (hi - lo) / mean.abs()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
