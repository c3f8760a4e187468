//! Cross-section and reference-configuration quantities of a helically
//! notched tube.
//!
//! Only the unnotched longitudinal strip (an annular sector of angle `psi`)
//! carries load. Its centroid sits `r_na` off the tube axis, and because the
//! notch pattern turns once over the tube length the centroidal (neutral)
//! axis is a helix of radius `r_na` and pitch `L`.
//!
//! Units: millimetres, newtons, N/mm² for moduli. Mass density stays in
//! kg/m³ and linear mass density is reported in kg/m.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::so3::rot_z;

/// Nitinol elastic modulus in N/mm².
pub const NITINOL_E: f64 = 75_000.0;
/// Nitinol shear modulus in N/mm².
pub const NITINOL_G: f64 = 25_000.0;
/// Nitinol mass density in kg/m³.
pub const NITINOL_RHO: f64 = 6255.0;

fn default_rho() -> f64 {
    NITINOL_RHO
}
fn default_e() -> f64 {
    NITINOL_E
}
fn default_g() -> f64 {
    NITINOL_G
}

/// Raw design parameters of one notched-tube prototype.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotGeometry {
    /// Inner tube radius (mm).
    pub r_in: f64,
    /// Outer tube radius (mm).
    pub r_out: f64,
    /// Notch width along the tube axis (mm).
    pub notch_width: f64,
    /// Unnotched spacing between consecutive notches (mm).
    pub notch_spacing: f64,
    /// Tube length (mm).
    pub length: f64,
    /// Tendon radius (mm).
    pub tendon_radius: f64,
    /// Arc angle of the load-carrying strip (rad).
    pub psi: f64,
    /// Mass density (kg/m³).
    #[serde(default = "default_rho")]
    pub density: f64,
    /// Elastic modulus (N/mm²).
    #[serde(default = "default_e")]
    pub youngs_modulus: f64,
    /// Shear modulus (N/mm²).
    #[serde(default = "default_g")]
    pub shear_modulus: f64,
}

/// Names accepted by [`RobotGeometry::preset`].
pub const PRESET_NAMES: [&str; 4] = ["prototype1", "prototype2", "prototype3", "prototype4"];

impl RobotGeometry {
    fn small_tube(psi_deg: f64) -> Self {
        Self {
            r_in: 0.457,
            r_out: 0.572,
            notch_width: 0.4,
            notch_spacing: 0.2,
            length: 75.4,
            tendon_radius: 0.05,
            psi: psi_deg.to_radians(),
            density: NITINOL_RHO,
            youngs_modulus: NITINOL_E,
            shear_modulus: NITINOL_G,
        }
    }

    fn large_tube(psi_deg: f64) -> Self {
        Self {
            r_in: 0.851,
            r_out: 0.953,
            notch_width: 0.5,
            notch_spacing: 0.3,
            length: 63.27,
            tendon_radius: 0.1,
            psi: psi_deg.to_radians(),
            density: NITINOL_RHO,
            youngs_modulus: NITINOL_E,
            shear_modulus: NITINOL_G,
        }
    }

    /// One of the four manufactured prototypes (`prototype1`..`prototype4`).
    pub fn preset(name: &str) -> Result<Self, GeometryError> {
        match name {
            "prototype1" => Ok(Self::small_tube(90.0)),
            "prototype2" => Ok(Self::small_tube(107.0)),
            "prototype3" => Ok(Self::large_tube(90.0)),
            "prototype4" => Ok(Self::large_tube(126.0)),
            other => Err(GeometryError::UnknownPreset(other.to_string())),
        }
    }

    /// Checks every bound and names the first one violated.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::Invalid(msg));
        let finite = [
            ("r_in", self.r_in),
            ("r_out", self.r_out),
            ("notch_width", self.notch_width),
            ("notch_spacing", self.notch_spacing),
            ("length", self.length),
            ("tendon_radius", self.tendon_radius),
            ("psi", self.psi),
            ("density", self.density),
            ("youngs_modulus", self.youngs_modulus),
            ("shear_modulus", self.shear_modulus),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return bad(format!("{name} must be finite, got {value}"));
            }
        }
        if self.r_in <= 0.0 {
            return bad(format!("r_in must be > 0, got {}", self.r_in));
        }
        if self.r_out <= self.r_in {
            return bad(format!(
                "r_out must be > r_in, got r_out = {} and r_in = {}",
                self.r_out, self.r_in
            ));
        }
        if self.psi <= 0.0 || self.psi > TAU {
            return bad(format!("psi must lie in (0, 2π], got {}", self.psi));
        }
        if self.notch_width <= 0.0 {
            return bad(format!("notch_width must be > 0, got {}", self.notch_width));
        }
        if self.notch_spacing <= 0.0 {
            return bad(format!(
                "notch_spacing must be > 0, got {}",
                self.notch_spacing
            ));
        }
        if self.length <= 0.0 {
            return bad(format!("length must be > 0, got {}", self.length));
        }
        if self.tendon_radius <= 0.0 || self.tendon_radius >= self.r_in {
            return bad(format!(
                "tendon_radius must lie in (0, r_in), got {}",
                self.tendon_radius
            ));
        }
        for (name, value) in [
            ("density", self.density),
            ("youngs_modulus", self.youngs_modulus),
            ("shear_modulus", self.shear_modulus),
        ] {
            if value <= 0.0 {
                return bad(format!("{name} must be > 0, got {value}"));
            }
        }
        Ok(())
    }

    // sin(psi/2) and sin(psi), snapped to exact zeros at psi = 2π so the full
    // annulus collapses cleanly.
    fn half_sin(&self) -> f64 {
        if self.psi == TAU {
            0.0
        } else {
            (0.5 * self.psi).sin()
        }
    }

    fn full_sin(&self) -> f64 {
        if self.psi == TAU {
            0.0
        } else {
            self.psi.sin()
        }
    }
}

/// Area of the load-carrying annular sector (mm²).
pub fn effective_area(geom: &RobotGeometry) -> Result<f64, GeometryError> {
    geom.validate()?;
    Ok(0.5 * geom.psi * (geom.r_out.powi(2) - geom.r_in.powi(2)))
}

/// Distance of the sector centroid from the tube axis (mm).
pub fn neutral_axis_offset(geom: &RobotGeometry) -> Result<f64, GeometryError> {
    geom.validate()?;
    let cubes = geom.r_out.powi(3) - geom.r_in.powi(3);
    let squares = geom.r_out.powi(2) - geom.r_in.powi(2);
    Ok((4.0 / 3.0) * geom.half_sin() * cubes / (geom.psi * squares))
}

/// Centroidal second moments `(I_x, I_y, I_z)` in mm⁴.
///
/// The local x axis runs from the centroid towards the tube axis, so
/// `I_x = ∫y² dA` needs no shift while `I_y = ∫x² dA` is moved to the centroid
/// by the parallel-axis theorem.
pub fn second_moments(geom: &RobotGeometry) -> Result<(f64, f64, f64), GeometryError> {
    let area = effective_area(geom)?;
    let r_na = neutral_axis_offset(geom)?;
    let quartics = geom.r_out.powi(4) - geom.r_in.powi(4);
    let i_x = (geom.psi - geom.full_sin()) * quartics / 8.0;
    let i_y = (geom.psi + geom.full_sin()) * quartics / 8.0 - area * r_na * r_na;
    if i_x <= 0.0 || i_y < 0.0 {
        return Err(GeometryError::Inconsistent(format!(
            "second moments must be non-negative, got I_x = {i_x}, I_y = {i_y}"
        )));
    }
    Ok((i_x, i_y, i_x + i_y))
}

/// Mass per unit length of the notched tube averaged over one notch period (kg/m).
pub fn linear_mass_density(geom: &RobotGeometry) -> Result<f64, GeometryError> {
    geom.validate()?;
    let (d, w) = (geom.notch_spacing, geom.notch_width);
    let mean_area_mm2 =
        (PI * d + 0.5 * geom.psi * w) * (geom.r_out.powi(2) - geom.r_in.powi(2)) / (d + w);
    Ok(geom.density * mean_area_mm2 * 1e-6)
}

/// Arc length of the helical neutral axis (mm).
pub fn neutral_axis_length(geom: &RobotGeometry) -> Result<f64, GeometryError> {
    let r_na = neutral_axis_offset(geom)?;
    Ok(geom.length.hypot(TAU * r_na))
}

/// Derived cross-section quantities. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionProperties {
    pub area: f64,
    pub r_na: f64,
    pub i_x: f64,
    pub i_y: f64,
    pub i_z: f64,
    /// kg/m
    pub lambda: f64,
    pub l_na: f64,
    /// Tendon offset from the neutral axis in the local frame (mm).
    pub r_tendon: Vector3<f64>,
}

impl SectionProperties {
    pub fn new(geom: &RobotGeometry) -> Result<Self, GeometryError> {
        let area = effective_area(geom)?;
        let r_na = neutral_axis_offset(geom)?;
        let (i_x, i_y, i_z) = second_moments(geom)?;
        let lambda = linear_mass_density(geom)?;
        let l_na = neutral_axis_length(geom)?;
        Ok(Self {
            area,
            r_na,
            i_x,
            i_y,
            i_z,
            lambda,
            l_na,
            r_tendon: Vector3::new(r_na + geom.r_in - geom.tendon_radius, 0.0, 0.0),
        })
    }
}

/// Unloaded helical configuration of the neutral axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConfig {
    pub r_na: f64,
    pub l_na: f64,
    pub length: f64,
    pub v_star: Vector3<f64>,
    pub u_star: Vector3<f64>,
}

impl ReferenceConfig {
    pub fn new(geom: &RobotGeometry, props: &SectionProperties) -> Self {
        let (r_na, l_na) = (props.r_na, props.l_na);
        Self {
            r_na,
            l_na,
            length: geom.length,
            v_star: Vector3::new(0.0, -TAU * r_na / l_na, geom.length / l_na),
            u_star: Vector3::new(0.0, 0.0, TAU / l_na),
        }
    }

    pub fn from_geometry(geom: &RobotGeometry) -> Result<Self, GeometryError> {
        Ok(Self::new(geom, &SectionProperties::new(geom)?))
    }

    /// `(p*(s), R*(s))` for `s ∈ [0, L_na]`.
    pub fn pose(&self, s: f64) -> Result<(Vector3<f64>, Matrix3<f64>), GeometryError> {
        if !(0.0..=self.l_na).contains(&s) {
            return Err(GeometryError::OutOfRange { s, max: self.l_na });
        }
        Ok(self.pose_unchecked(s))
    }

    pub(crate) fn pose_unchecked(&self, s: f64) -> (Vector3<f64>, Matrix3<f64>) {
        let angle = TAU * s / self.l_na;
        let (sin, cos) = angle.sin_cos();
        let p = Vector3::new(
            -self.r_na * cos,
            -self.r_na * sin,
            self.length * s / self.l_na,
        );
        (p, rot_z(angle))
    }
}
