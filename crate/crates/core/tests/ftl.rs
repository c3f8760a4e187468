use std::f64::consts::PI;

use approx::assert_relative_eq;
use notchrod::ftl::{
    body_deviation, fit_tension_polynomial, ftl_reference, plan_ftl_with, progression_kinematics, replay_schedule,
    FtlPlanConfig, TensionSchedule,
};
use notchrod::metrics::{nearest_point_rmse, Trajectory};
use notchrod::statics::{LoadCase, Solver};
use notchrod::RobotGeometry;

fn solver() -> Solver {
    Solver::new(&RobotGeometry::preset("prototype1").unwrap()).unwrap()
}

#[test]
fn loose_threshold_stops_early_near_the_base() {
    let plan = plan_ftl_with(&solver(), &FtlPlanConfig::new(0.2)).unwrap();
    let first = &plan.steps[0];
    assert!(first.early_stopped);
    assert_eq!(first.tau_opt, Some(0.0));
    assert_eq!(first.evaluations.len(), 1);
    assert!(first.deviation.unwrap() <= plan.config.deviation_tolerance);
}

#[test]
fn progression_follows_base_rotation_rule() {
    let g = RobotGeometry::preset("prototype1").unwrap();
    let half = progression_kinematics(&g, 0.5).unwrap();
    assert_relative_eq!(half.phi_p, -PI, epsilon = 1e-15);
    assert_relative_eq!(half.l_p, 37.7, epsilon = 1e-12);
    assert_eq!(progression_kinematics(&g, 1.0).unwrap().phi_p, 0.0);
    assert!(progression_kinematics(&g, 1.01).is_err());
}

#[test]
fn full_exposure_at_desired_tension_lies_on_the_reference() {
    let s = solver();
    let load = LoadCase::tension(0.0);
    let (reference, sol) = ftl_reference(&s, 0.7, &load).unwrap();
    assert!(body_deviation(&sol, &reference).unwrap() < 1e-12);
    assert!(ftl_reference(&s, 0.0, &load).is_err());
}

#[test]
fn gravity_free_plan_is_constant_and_fits_a_flat_schedule() {
    let s = solver();
    // a tight early-stop threshold keeps the first steps from settling at zero tension
    let config = FtlPlanConfig {
        deviation_tolerance: 0.01,
        ..FtlPlanConfig::new(0.45)
    };
    let plan = plan_ftl_with(&s, &config).unwrap();
    assert!(plan.is_complete());
    assert_eq!(plan.steps.len(), 20);
    for step in &plan.steps {
        assert!((step.tau_opt.unwrap() - 0.45).abs() <= 1e-3, "{step:?}");
        assert!(step.deviation.unwrap() < 0.05);
        assert!(!step.early_stopped);
    }
    let [c2, c1, c0] = plan.poly_coeffs().unwrap();
    assert!(c2.abs() < 1e-2 && c1.abs() < 1e-2, "{c2} {c1}");
    assert_relative_eq!(c0, 0.45, epsilon = 2e-3);

    let doc = plan.to_json();
    assert_eq!(doc["format"], "notchrod.ftl_plan");
    assert_eq!(doc["eta_grid"].as_array().unwrap().len(), 20);
    assert_eq!(doc["tau_max"], 0.9);

    let flat = TensionSchedule::new(vec![0.45]);
    let report = replay_schedule(&s, &plan.config.load(), &flat, &plan.reference, &plan.eta_grid()).unwrap();
    assert!(report.rmse < 1e-6, "{}", report.rmse);
}

#[test]
fn gravity_plan_tips_stay_near_the_reference() {
    let s = solver();
    let plan = plan_ftl_with(&s, &FtlPlanConfig::new(0.7).with_gravity(true)).unwrap();
    assert!(plan.is_complete());
    let tips: Vec<_> = plan.shapes.iter().map(|sh| sh.as_ref().unwrap().tip().p).collect();
    let coverage = nearest_point_rmse(&tips, &plan.reference).unwrap();
    let worst = plan.deviation().iter().map(|d| d.unwrap()).fold(0.0, f64::max);
    assert!(coverage < worst, "tip trace {coverage} vs worst deviation {worst}");
    let last = plan.steps.last().unwrap().tau_opt.unwrap();
    assert!((last - 0.7).abs() <= 0.07, "{last}");
}

#[test]
fn quadratic_fit_recovers_exact_coefficients() {
    let pairs: Vec<_> = (1..=20)
        .map(|k| {
            let eta = 0.05 * k as f64;
            (eta, 0.6492 * eta * eta - 0.5159 * eta + 0.6088)
        })
        .collect();
    let fit = fit_tension_polynomial(&pairs, 2).unwrap();
    for (c, e) in fit.coefficients.iter().zip([0.6492, -0.5159, 0.6088]) {
        assert_relative_eq!(*c, e, epsilon = 1e-10);
    }
    assert!(fit.residual_rms < 1e-12);
    assert!(fit_tension_polynomial(&pairs[..2], 2).is_err());
}

#[test]
fn schedule_parsing_and_clamping() {
    let s: TensionSchedule = "0.6492,-0.5159,0.6088".parse().unwrap();
    assert_relative_eq!(s.eval(1.0), 0.7421, epsilon = 1e-12);
    assert_eq!(s.eval(2.0), s.eval(1.0));
    assert!("a,b".parse::<TensionSchedule>().is_err());
    assert!("".parse::<TensionSchedule>().is_err());
    assert_eq!(TensionSchedule::new(vec![-1.0]).eval(0.5), 0.0);
}

#[test]
fn truncated_reference_is_a_prefix() {
    let (reference, _) = ftl_reference(&solver(), 0.7, &LoadCase::tension(0.0)).unwrap();
    let part = reference.truncate(0.3 * reference.length());
    assert_relative_eq!(part.length(), 0.3 * reference.length(), epsilon = 1e-9);
    let t = Trajectory::new(part.points().to_vec()).unwrap();
    assert_eq!(t.start(), reference.start());
}
