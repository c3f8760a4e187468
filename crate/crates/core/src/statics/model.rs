use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, SolveError};
use crate::geometry::{ReferenceConfig, RobotGeometry, SectionProperties};
use crate::so3::hat;

/// Standard gravity in m/s².
pub const STANDARD_GRAVITY: f64 = 9.81;

const MIN_TANGENT_NORM: f64 = 1e-9;
const MAX_CONDITION: f64 = 1e12;

/// Rod state at arc length `s`. `r` is the material orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RodState {
    pub s: f64,
    pub p: Vector3<f64>,
    pub r: Matrix3<f64>,
    pub v: Vector3<f64>,
    pub u: Vector3<f64>,
}

/// d/ds of every component of a [`RodState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRate {
    pub p: Vector3<f64>,
    pub r: Matrix3<f64>,
    pub v: Vector3<f64>,
    pub u: Vector3<f64>,
}

/// Tendon tension and distributed loads. Forces are in the global frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadCase {
    /// Tendon tension (N).
    pub tau: f64,
    /// Distributed force besides gravity (N/mm).
    #[serde(default)]
    pub external_force: Vector3<f64>,
    /// Distributed moment (N·mm/mm). Must be zero.
    #[serde(default)]
    pub external_moment: Vector3<f64>,
    #[serde(default)]
    pub gravity_enabled: bool,
    #[serde(default = "default_gravity_direction")]
    pub gravity_direction: Vector3<f64>,
}

fn default_gravity_direction() -> Vector3<f64> {
    -Vector3::x()
}

impl Default for LoadCase {
    fn default() -> Self {
        Self {
            tau: 0.0,
            external_force: Vector3::zeros(),
            external_moment: Vector3::zeros(),
            gravity_enabled: false,
            gravity_direction: default_gravity_direction(),
        }
    }
}

impl LoadCase {
    pub fn tension(tau: f64) -> Self {
        Self {
            tau,
            ..Self::default()
        }
    }

    pub fn with_gravity(mut self, enabled: bool) -> Self {
        self.gravity_enabled = enabled;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(SolveError::InvalidLoad(format!(
                "tension must be finite and >= 0, got {}",
                self.tau
            )));
        }
        if self.external_moment != Vector3::zeros() {
            return Err(SolveError::InvalidLoad(
                "distributed moments are not supported".into(),
            ));
        }
        if !self.external_force.iter().all(|x| x.is_finite()) {
            return Err(SolveError::InvalidLoad("external force must be finite".into()));
        }
        if (self.gravity_direction.norm() - 1.0).abs() > 1e-9 {
            return Err(SolveError::InvalidLoad(format!(
                "gravity direction must be a unit vector, got norm {}",
                self.gravity_direction.norm()
            )));
        }
        Ok(())
    }

    /// Total distributed force in N/mm for a rod of linear density `lambda` (kg/m).
    pub fn distributed_force(&self, lambda: f64) -> Vector3<f64> {
        if self.gravity_enabled {
            // kg/m * m/s^2 = N/m, then N/m -> N/mm
            self.external_force + self.gravity_direction * (lambda * STANDARD_GRAVITY * 1e-3)
        } else {
            self.external_force
        }
    }
}

/// Precomputed stiffness data for one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct RodModel {
    pub geometry: RobotGeometry,
    pub props: SectionProperties,
    pub reference: ReferenceConfig,
    pub k_se: Matrix3<f64>,
    pub k_bt: Matrix3<f64>,
    k_se_inv: Matrix3<f64>,
    k_bt_inv: Matrix3<f64>,
}

impl RodModel {
    pub fn new(geometry: &RobotGeometry) -> Result<Self, GeometryError> {
        let props = SectionProperties::new(geometry)?;
        Ok(Self::with_props(geometry, props))
    }

    /// Builds the model from explicitly supplied section properties.
    pub fn with_props(geometry: &RobotGeometry, props: SectionProperties) -> Self {
        let (e, g, a) = (geometry.youngs_modulus, geometry.shear_modulus, props.area);
        let k_se = Matrix3::from_diagonal(&Vector3::new(g * a, g * a, e * a));
        let k_bt = Matrix3::from_diagonal(&Vector3::new(e * props.i_x, e * props.i_y, e * props.i_z));
        let inv = |m: &Matrix3<f64>| Matrix3::from_diagonal(&m.diagonal().map(|x| 1.0 / x));
        Self {
            geometry: *geometry,
            props,
            reference: ReferenceConfig::new(geometry, &props),
            k_se_inv: inv(&k_se),
            k_bt_inv: inv(&k_bt),
            k_se,
            k_bt,
        }
    }

    pub fn k_se_inv(&self) -> &Matrix3<f64> {
        &self.k_se_inv
    }

    pub fn k_bt_inv(&self) -> &Matrix3<f64> {
        &self.k_bt_inv
    }

    pub fn r_tendon(&self) -> Vector3<f64> {
        self.props.r_tendon
    }

    /// Strain pair `(v, u)` demanded by the tendon termination at the tip.
    pub fn tip_strains(&self, state: &RodState, tau: f64) -> Result<(Vector3<f64>, Vector3<f64>), SolveError> {
        let r = self.r_tendon();
        let tangent = state.u.cross(&r) + state.v;
        let norm = tangent.norm();
        if norm < MIN_TANGENT_NORM {
            return Err(SolveError::SingularTangent { s: state.s, norm });
        }
        let force = tangent * (tau / norm);
        let v_bc = self.reference.v_star - self.k_se_inv * force;
        let u_bc = self.reference.u_star - self.k_bt_inv * r.cross(&force);
        Ok((v_bc, u_bc))
    }
}

/// Coupling terms of the linear momentum/moment balance at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeTerms {
    pub k_se: Matrix3<f64>,
    pub k_bt: Matrix3<f64>,
    pub k11: Matrix3<f64>,
    pub k12: Matrix3<f64>,
    pub k21: Matrix3<f64>,
    pub k22: Matrix3<f64>,
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    /// Tendon path tangent in the local frame.
    pub tendon_tangent: Vector3<f64>,
}

impl OdeTerms {
    pub fn compute(state: &RodState, load: &LoadCase, model: &RodModel) -> Result<Self, SolveError> {
        let RodState { r: rot, v, u, .. } = *state;
        let r = model.r_tendon();
        let (v_star, u_star) = (model.reference.v_star, model.reference.u_star);

        // r is constant in the local frame, so r' = r'' = 0
        let tendon_tangent = u.cross(&r) + v;
        let norm = tendon_tangent.norm();
        if norm < MIN_TANGENT_NORM {
            return Err(SolveError::SingularTangent { s: state.s, norm });
        }
        let tangent_hat = hat(&tendon_tangent);
        let k11 = tangent_hat * tangent_hat * (-load.tau / norm.powi(3));
        let r_hat = hat(&r);
        let k12 = -k11 * r_hat;
        let k21 = r_hat * k11;
        let k22 = -r_hat * k11 * r_hat;

        let force_local = rot.transpose() * load.distributed_force(model.props.lambda);
        let moment_local = rot.transpose() * load.external_moment;
        let shear = model.k_se * (v - v_star);
        let bend = model.k_bt * (u - u_star);
        let curvature_pull = k11 * u.cross(&tendon_tangent);

        let a = -u.cross(&shear) - force_local - curvature_pull;
        let b = -u.cross(&bend) - v.cross(&shear) - moment_local - r_hat * curvature_pull;

        Ok(Self {
            k_se: model.k_se,
            k_bt: model.k_bt,
            k11,
            k12,
            k21,
            k22,
            a,
            b,
            tendon_tangent,
        })
    }

    pub fn system_matrix(&self) -> Matrix6<f64> {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(self.k_se + self.k11));
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&self.k12);
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&self.k21);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(self.k_bt + self.k22));
        m
    }

    pub fn rhs(&self) -> Vector6<f64> {
        let mut x = Vector6::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.a);
        x.fixed_rows_mut::<3>(3).copy_from(&self.b);
        x
    }
}

fn norm1(m: &Matrix6<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Right-hand side of the rod equations at one state.
pub fn ode_rhs(state: &RodState, load: &LoadCase, model: &RodModel) -> Result<StateRate, SolveError> {
    let terms = OdeTerms::compute(state, load, model)?;
    let m = terms.system_matrix();
    let lu = m.lu();
    let inverse = lu
        .try_inverse()
        .ok_or(SolveError::IllConditioned { s: state.s, cond: f64::INFINITY })?;
    let cond = norm1(&m) * norm1(&inverse);
    if !(cond <= MAX_CONDITION) {
        return Err(SolveError::IllConditioned { s: state.s, cond });
    }
    let rates = lu
        .solve(&terms.rhs())
        .ok_or(SolveError::IllConditioned { s: state.s, cond })?;
    Ok(StateRate {
        p: state.r * state.v,
        r: state.r * hat(&state.u),
        v: rates.fixed_rows::<3>(0).into_owned(),
        u: rates.fixed_rows::<3>(3).into_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> RodModel {
        RodModel::new(&RobotGeometry::preset("prototype1").unwrap()).unwrap()
    }

    fn reference_state(m: &RodModel) -> RodState {
        RodState {
            s: 0.0,
            p: Vector3::new(-m.props.r_na, 0.0, 0.0),
            r: Matrix3::identity(),
            v: m.reference.v_star,
            u: m.reference.u_star,
        }
    }

    #[test]
    fn unloaded_reference_is_equilibrium() {
        let m = model();
        let rate = ode_rhs(&reference_state(&m), &LoadCase::default(), &m).unwrap();
        assert_eq!(rate.v, Vector3::zeros());
        assert_eq!(rate.u, Vector3::zeros());
        assert!((rate.p - m.reference.v_star).norm() < 1e-15);
    }

    #[test]
    fn gravity_only_terms_match_hand_expansion() {
        let m = model();
        let load = LoadCase::default().with_gravity(true);
        let state = reference_state(&m);
        let terms = OdeTerms::compute(&state, &load, &m).unwrap();
        // R = I, v = v*, u = u*, tau = 0: only the weight survives in a.
        let weight = m.props.lambda * 9.81e-3;
        assert!((terms.a - Vector3::new(weight, 0.0, 0.0)).norm() < 1e-18);
        assert_eq!(terms.b, Vector3::zeros());
        assert_eq!(terms.k11, Matrix3::zeros());
        let rate = ode_rhs(&state, &load, &m).unwrap();
        let expected_v = Vector3::new(weight / (m.geometry.shear_modulus * m.props.area), 0.0, 0.0);
        assert!((rate.v - expected_v).norm() < 1e-15);
        assert!(rate.u.norm() < 1e-15);
    }

    #[test]
    fn zero_tension_has_no_coupling() {
        let m = model();
        let mut state = reference_state(&m);
        state.u += Vector3::new(0.01, -0.02, 0.003);
        let t = OdeTerms::compute(&state, &LoadCase::default(), &m).unwrap();
        for k in [t.k11, t.k12, t.k21, t.k22] {
            assert_eq!(k.abs().max(), 0.0);
        }
    }

    #[test]
    fn coupling_identities_under_tension() {
        let m = model();
        let mut state = reference_state(&m);
        state.u += Vector3::new(0.004, 0.03, -0.001);
        state.v += Vector3::new(1e-4, -2e-4, 3e-5);
        let t = OdeTerms::compute(&state, &LoadCase::tension(0.7), &m).unwrap();
        let scale = t.k11.abs().max();
        assert!((t.k11 - t.k11.transpose()).abs().max() <= 1e-14 * scale);
        assert!((t.k11 * t.tendon_tangent).norm() <= 1e-13 * scale);
        let r_hat = hat(&m.r_tendon());
        assert_eq!(t.k12, -t.k11 * r_hat);
        assert_eq!(t.k21, r_hat * t.k11);
        assert_eq!(t.k22, -r_hat * t.k11 * r_hat);
    }

    #[test]
    fn singular_tangent_is_reported() {
        let m = model();
        let mut state = reference_state(&m);
        // u x r + v = 0
        state.v = Vector3::new(0.0, 0.0, 0.0);
        state.u = Vector3::zeros();
        assert!(matches!(
            ode_rhs(&state, &LoadCase::tension(0.1), &m),
            Err(SolveError::SingularTangent { .. })
        ));
    }

    #[test]
    fn tip_strains_at_zero_tension_are_reference() {
        let m = model();
        let (v, u) = m.tip_strains(&reference_state(&m), 0.0).unwrap();
        assert_eq!(v, m.reference.v_star);
        assert_eq!(u, m.reference.u_star);
    }

    #[test]
    fn load_validation() {
        assert!(LoadCase::tension(-0.1).validate().is_err());
        assert!(LoadCase::tension(f64::NAN).validate().is_err());
        let mut l = LoadCase::tension(0.1);
        l.external_moment = Vector3::new(0.0, 1.0, 0.0);
        assert!(l.validate().is_err());
        let mut l = LoadCase::tension(0.1);
        l.gravity_direction = Vector3::new(0.0, 2.0, 0.0);
        assert!(l.validate().is_err());
        assert!(LoadCase::tension(0.1).with_gravity(true).validate().is_ok());
    }
}
