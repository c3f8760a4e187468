use crate::error::SolveError;
use crate::so3::orthonormalize;

use super::model::{ode_rhs, LoadCase, RodModel, RodState, StateRate};

fn step_state(base: &RodState, rate: &StateRate, h: f64) -> RodState {
    RodState {
        s: base.s + h,
        p: base.p + rate.p * h,
        r: base.r + rate.r * h,
        v: base.v + rate.v * h,
        u: base.u + rate.u * h,
    }
}

fn rk4_step(
    state: &RodState,
    load: &LoadCase,
    model: &RodModel,
    h: f64,
) -> Result<RodState, SolveError> {
    let k1 = ode_rhs(state, load, model)?;
    let k2 = ode_rhs(&step_state(state, &k1, 0.5 * h), load, model)?;
    let k3 = ode_rhs(&step_state(state, &k2, 0.5 * h), load, model)?;
    let k4 = ode_rhs(&step_state(state, &k3, h), load, model)?;
    let w = h / 6.0;
    let r = state.r + (k1.r + (k2.r + k3.r) * 2.0 + k4.r) * w;
    Ok(RodState {
        s: state.s + h,
        p: state.p + (k1.p + (k2.p + k3.p) * 2.0 + k4.p) * w,
        r: orthonormalize(&r),
        v: state.v + (k1.v + (k2.v + k3.v) * 2.0 + k4.v) * w,
        u: state.u + (k1.u + (k2.u + k3.u) * 2.0 + k4.u) * w,
    })
}

/// Fixed-step RK4 from `base` over `span`, returning `steps + 1` states.
///
/// `base.s` is overwritten with `span.0`. The orientation is projected back
/// onto SO(3) after every step.
pub fn integrate(
    base: &RodState,
    load: &LoadCase,
    model: &RodModel,
    span: (f64, f64),
    steps: usize,
) -> Result<Vec<RodState>, SolveError> {
    let (s0, s1) = span;
    if !(s1 > s0) || !s0.is_finite() || !s1.is_finite() {
        return Err(SolveError::InvalidSpan(format!("need s1 > s0, got ({s0}, {s1})")));
    }
    if steps == 0 {
        return Err(SolveError::InvalidSpan("steps must be >= 1".into()));
    }
    let h = (s1 - s0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut state = RodState { s: s0, ..*base };
    out.push(state);
    for k in 1..=steps {
        let mut next = rk4_step(&state, load, model, h)?;
        // pin the grid to avoid accumulated drift in s
        next.s = if k == steps { s1 } else { s0 + h * k as f64 };
        let finite = next.p.iter().chain(next.v.iter()).chain(next.u.iter()).all(|x| x.is_finite())
            && next.r.iter().all(|x| x.is_finite());
        if !finite {
            return Err(SolveError::Diverged { s: next.s });
        }
        out.push(next);
        state = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RobotGeometry;
    use crate::so3::orthogonality_error;
    use nalgebra::{Matrix3, Vector3};

    fn setup() -> (RodModel, RodState) {
        let m = RodModel::new(&RobotGeometry::preset("prototype1").unwrap()).unwrap();
        let base = RodState {
            s: 0.0,
            p: Vector3::new(-m.props.r_na, 0.0, 0.0),
            r: Matrix3::identity(),
            v: m.reference.v_star,
            u: m.reference.u_star,
        };
        (m, base)
    }

    #[test]
    fn reference_is_preserved() {
        let (m, base) = setup();
        let l = m.props.l_na;
        let states = integrate(&base, &LoadCase::default(), &m, (0.0, l), 400).unwrap();
        assert_eq!(states.len(), 401);
        let tip = states.last().unwrap();
        let (p_ref, _) = m.reference.pose(l).unwrap();
        assert!((tip.p - p_ref).norm() < 1e-8);
        for st in &states {
            assert!((st.v - m.reference.v_star).norm() < 1e-10);
            assert!((st.u - m.reference.u_star).norm() < 1e-10);
            assert!(orthogonality_error(&st.r) < 1e-9);
        }
    }

    #[test]
    fn stays_orthonormal_under_load() {
        let (m, mut base) = setup();
        base.u += Vector3::new(0.01, 0.03, 0.0);
        let load = LoadCase::tension(0.7).with_gravity(true);
        let states = integrate(&base, &load, &m, (0.0, m.props.l_na), 200).unwrap();
        let worst = states.iter().map(|s| orthogonality_error(&s.r)).fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
        assert!(states.windows(2).all(|w| w[1].s > w[0].s));
    }

    #[test]
    fn rejects_bad_spans() {
        let (m, base) = setup();
        assert!(integrate(&base, &LoadCase::default(), &m, (1.0, 1.0), 10).is_err());
        assert!(integrate(&base, &LoadCase::default(), &m, (0.0, 1.0), 0).is_err());
    }
}
