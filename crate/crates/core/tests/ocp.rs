mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use continuum_grasp::geometry::BoundaryCurve;
use continuum_grasp::graspmap::{FrictionCone, Wrench};
use continuum_grasp::ocp::{
    ControlProfile, ForwardBackwardConfig, NewtonConfig, OcpProblem, StepSize,
};
use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CHI: f64 = 5e4;

fn cone() -> FrictionCone {
    FrictionCone::new(0.5).unwrap()
}

#[test]
fn interior_optimum_matches_the_costate_oracle() {
    let c = BoundaryCurve::circle(1.0, 400).unwrap();
    let seg = c.subcurve(0.3, 0.1 * c.total_length()).unwrap();
    let mid = seg.samples()[seg.len() / 2].normal();
    let (w, oracle) =
        common::interior_wrench(&seg, &cone(), CHI, Vector3::new(mid.x, mid.y, 0.0)).unwrap();
    let prob = OcpProblem::new(&seg, &cone(), w, CHI).unwrap();
    assert_relative_eq!(prob.closed_form().cost, oracle, max_relative = 1e-10);

    let fb = prob
        .solve_forward_backward(&ForwardBackwardConfig::default())
        .unwrap();
    assert!(fb.converged && fb.interior);
    assert_relative_eq!(fb.cost, oracle, max_relative = 1e-3);
    let newton = prob.solve_costate_newton(&NewtonConfig::default()).unwrap();
    assert_relative_eq!(newton.cost, oracle, max_relative = 1e-9);
}

#[test]
fn solutions_are_stationary_against_an_independent_costate() {
    let c = BoundaryCurve::ellipse(2.0, 1.0, 400).unwrap();
    let seg = c.subcurve(0.0, 0.5 * c.total_length()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let w = Wrench::from_angles(rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI));
        let prob = OcpProblem::new(&seg, &cone(), w, CHI).unwrap();
        for report in [
            prob.solve_costate_newton(&NewtonConfig::default()).unwrap(),
            prob.solve_forward_backward(&ForwardBackwardConfig {
                step: StepSize::Auto,
                max_iters: 3_000_000,
                ..Default::default()
            })
            .unwrap(),
        ] {
            assert!(
                report.converged,
                "{} did not converge for {w}",
                report.method.name()
            );
            let gap = common::stationarity_gap(&seg, &cone(), w, CHI, &report);
            assert!(gap <= report.tolerance, "{}: {gap:e}", report.method.name());
            assert!(report.control.min() >= 0.0);
        }
    }
}

#[test]
fn sweep_and_newton_agree_with_active_constraints() {
    let c = BoundaryCurve::circle(1.0, 400).unwrap();
    let seg = c.subcurve(0.0, PI).unwrap();
    let w = Wrench::new(1.0, 0.0, 0.0);
    let prob = OcpProblem::new(&seg, &cone(), w, CHI).unwrap();
    let fb = prob
        .solve_forward_backward(&ForwardBackwardConfig {
            step: StepSize::Auto,
            max_iters: 2_000_000,
            ..Default::default()
        })
        .unwrap();
    let newton = prob.solve_costate_newton(&NewtonConfig::default()).unwrap();
    assert!(fb.converged && !fb.interior);
    assert!(newton.converged && !newton.interior);
    assert_relative_eq!(fb.cost, newton.cost, max_relative = 1e-3);
    assert!(newton.cost > prob.closed_form().cost);
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let c = BoundaryCurve::deformed_circle_dc1(400).unwrap();
    let seg = c.subcurve(1.0, 3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let prob = OcpProblem::new(&seg, &cone(), Wrench::new(0.3, -0.8, 0.52), CHI).unwrap();
    let u: Vec<Vector2<f64>> = (0..prob.grid_len())
        .map(|_| Vector2::new(rng.random_range(0.1..2.0), rng.random_range(0.1..2.0)))
        .collect();
    let control = ControlProfile::new(u.clone()).unwrap();
    let grad = prob.gradient(&control);
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let mut probe = u.clone();
    for j in (0..u.len()).step_by(7) {
        for i in 0..2 {
            probe[j][i] = u[j][i] + h;
            let up = prob.cost(&ControlProfile::new(probe.clone()).unwrap());
            probe[j][i] = u[j][i] - h;
            let down = prob.cost(&ControlProfile::new(probe.clone()).unwrap());
            probe[j][i] = u[j][i];
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((grad[j][i] - fd).abs() / grad[j][i].abs().max(fd.abs()));
        }
    }
    assert!(worst <= 1e-4, "{worst:e}");
}

#[test]
fn cost_is_quadratic_in_the_external_wrench() {
    let c = BoundaryCurve::ellipse(2.0, 1.0, 400).unwrap();
    let seg = c.subcurve(0.5, 4.0).unwrap();
    let w = Wrench::new(0.2, -0.9, 0.4);
    let base = OcpProblem::new(&seg, &cone(), w, CHI)
        .unwrap()
        .solve_costate_newton(&NewtonConfig::default())
        .unwrap();
    for k in [0.25, 3.0] {
        let scaled = Wrench::from(w.as_vector() * k);
        let r = OcpProblem::new(&seg, &cone(), scaled, CHI)
            .unwrap()
            .solve_costate_newton(&NewtonConfig::default())
            .unwrap();
        assert_relative_eq!(r.cost, k * k * base.cost, max_relative = 1e-8);
    }
}

#[test]
fn rotating_the_circle_grasp_rotates_the_wrench() {
    let c = BoundaryCurve::circle(1.0, 400).unwrap();
    let shift = 100;
    let theta = shift as f64 * c.grid_step();
    let w = Wrench::new(0.6, -0.3, 0.74);
    let (sn, cs) = theta.sin_cos();
    let rotated = Wrench::new(cs * w.fx - sn * w.fy, sn * w.fx + cs * w.fy, w.tau);
    let solve = |s0: f64, w: Wrench| {
        let seg = c.subcurve(s0, 2.0).unwrap();
        OcpProblem::new(&seg, &cone(), w, CHI)
            .unwrap()
            .solve_costate_newton(&NewtonConfig::default())
            .unwrap()
            .cost
    };
    assert_relative_eq!(solve(0.0, w), solve(theta, rotated), max_relative = 1e-9);
}

#[test]
fn doing_nothing_bounds_the_optimum() {
    let c = BoundaryCurve::circle(1.0, 400).unwrap();
    let seg = c.subcurve(0.0, 0.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let w = Wrench::from_angles(rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI));
        let prob = OcpProblem::new(&seg, &cone(), w, CHI).unwrap();
        let r = prob.solve_costate_newton(&NewtonConfig::default()).unwrap();
        assert!(r.cost >= 0.0);
        assert!(r.cost <= 0.5 * CHI * (1.0 + 1e-12));
    }
}
