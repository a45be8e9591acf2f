//! Continuum grasp quality and grasp placement.
//!
//! The quality of a grasp on `[s0, s0 + L]` is `Q = 1 / J~`, where `J~` is
//! the largest minimum effort `J*(w_e)` over unit external wrenches. The
//! sphere is parameterized as `w_e = (cos a, sin a cos b, sin a sin b)` and
//! searched by Nelder-Mead from a Fibonacci lattice of starts. Placement
//! evaluates `Q(s0; L)` on a uniform grid of starts and keeps the argmax.

pub mod simplex;

use rayon::prelude::*;

use crate::error::{GraspError, Result};
use crate::geometry::BoundaryCurve;
use crate::graspmap::{FrictionCone, Wrench};
use crate::ocp::{ForwardBackwardConfig, NewtonConfig, OcpProblem, SolveReport};
use simplex::{nelder_mead, SimplexOptions};

/// Solver used for every `J*(w_e)` evaluation inside the searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerSolver {
    ForwardBackward(ForwardBackwardConfig),
    CostateNewton(NewtonConfig),
}

impl Default for InnerSolver {
    fn default() -> Self {
        InnerSolver::CostateNewton(NewtonConfig::default())
    }
}

impl InnerSolver {
    pub fn solve(&self, problem: &OcpProblem) -> Result<SolveReport> {
        match self {
            InnerSolver::ForwardBackward(cfg) => problem.solve_forward_backward(cfg),
            InnerSolver::CostateNewton(cfg) => problem.solve_costate_newton(cfg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityConfig {
    pub chi: f64,
    pub solver: InnerSolver,
    /// Number of Fibonacci-lattice starts on the wrench sphere.
    pub starts: usize,
    pub simplex: SimplexOptions,
    /// Characteristic length dividing the torque in the unit-wrench
    /// constraint, `|(f_x, f_y, tau / l)| = 1`.
    pub torque_length_scale: f64,
    /// Local optima within this relative distance of the best `J` count as
    /// ties; the tie with the largest force-x component is reported.
    pub tie_tolerance: f64,
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig {
            chi: 5e4,
            solver: InnerSolver::default(),
            starts: 12,
            simplex: SimplexOptions::default(),
            torque_length_scale: 1.0,
            tie_tolerance: 1e-3,
        }
    }
}

impl QualityConfig {
    fn validate(&self) -> Result<()> {
        if !(self.chi.is_finite() && self.chi > 0.0) {
            return Err(GraspError::param(
                "chi",
                format!("{} must be positive", self.chi),
            ));
        }
        if self.starts == 0 {
            return Err(GraspError::param("starts", "need at least one start"));
        }
        if !(self.torque_length_scale.is_finite() && self.torque_length_scale > 0.0) {
            return Err(GraspError::param(
                "torque_length_scale",
                format!("{} must be positive", self.torque_length_scale),
            ));
        }
        Ok(())
    }

    /// External wrench at sphere angles `(alpha, beta)`.
    pub fn wrench_at(&self, alpha: f64, beta: f64) -> Wrench {
        let w = Wrench::from_angles(alpha, beta);
        Wrench::new(w.fx, w.fy, w.tau * self.torque_length_scale)
    }
}

/// One local search of the wrench sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartDiagnostics {
    pub start: (f64, f64),
    pub optimum: (f64, f64),
    /// `J*` at the start point.
    pub start_effort: f64,
    /// `J*` at the local optimum.
    pub effort: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityResult {
    pub q: f64,
    pub j_tilde: f64,
    pub worst_wrench: Wrench,
    pub alpha: f64,
    pub beta: f64,
    /// Snapped start and length of the grasp segment.
    pub s0: f64,
    pub length: f64,
    pub starts_evaluated: usize,
    pub starts: Vec<StartDiagnostics>,
}

/// `M` points of the Fibonacci sphere lattice as `(alpha, beta)`, with
/// `alpha` the polar angle from the force-x axis.
pub fn fibonacci_sphere(m: usize) -> Vec<(f64, f64)> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|k| {
            let x = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
            let beta = (k as f64 * golden).rem_euclid(std::f64::consts::TAU);
            (x.acos(), beta)
        })
        .collect()
}

/// Minimum effort `J*(w_e)` for one external wrench, failing when the inner
/// solver does not converge.
fn effort(problem: &mut OcpProblem, cfg: &QualityConfig, alpha: f64, beta: f64) -> Result<f64> {
    problem.set_external_wrench(cfg.wrench_at(alpha, beta))?;
    let rep = cfg.solver.solve(problem)?;
    if !rep.converged {
        return Err(GraspError::InnerSolve {
            alpha,
            beta,
            residual: rep.stationarity_residual,
            iterations: rep.iterations,
        });
    }
    Ok(rep.cost)
}

/// Worst-case unit wrench and grasp quality for the grasp `[s0, s0 + length]`.
pub fn worst_case_wrench(
    curve: &BoundaryCurve,
    s0: f64,
    length: f64,
    cone: &FrictionCone,
    cfg: &QualityConfig,
) -> Result<QualityResult> {
    cfg.validate()?;
    let segment = curve.subcurve(s0, length)?;
    let problem = OcpProblem::new(&segment, cone, Wrench::ZERO, cfg.chi)?;

    let starts: Vec<StartDiagnostics> = fibonacci_sphere(cfg.starts)
        .into_par_iter()
        .map(|(a0, b0)| {
            let mut local = problem.clone();
            let r = nelder_mead(
                |x| effort(&mut local, cfg, x[0], x[1]).map(|j| -j),
                [a0, b0],
                &cfg.simplex,
            )?;
            Ok(StartDiagnostics {
                start: (a0, b0),
                optimum: (r.x[0], r.x[1]),
                start_effort: -r.f_start,
                effort: -r.f,
                evaluations: r.evaluations,
                converged: r.converged,
            })
        })
        .collect::<Result<_>>()?;

    let j_tilde = starts
        .iter()
        .map(|d| d.effort)
        .fold(f64::NEG_INFINITY, f64::max);
    let floor = j_tilde * (1.0 - cfg.tie_tolerance);
    let chosen = starts
        .iter()
        .filter(|d| d.effort >= floor)
        .fold(None::<(&StartDiagnostics, Wrench)>, |acc, d| {
            let w = cfg.wrench_at(d.optimum.0, d.optimum.1);
            match acc {
                Some((_, bw)) if bw.fx >= w.fx => acc,
                _ => Some((d, w)),
            }
        })
        .expect("at least one start reaches the best effort");

    Ok(QualityResult {
        q: 1.0 / j_tilde,
        j_tilde,
        worst_wrench: chosen.1,
        alpha: chosen.0.optimum.0,
        beta: chosen.0.optimum.1,
        s0: segment.start(),
        length: segment.length(),
        starts_evaluated: starts.len(),
        starts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthPoint {
    pub length: f64,
    pub q: f64,
    pub j_tilde: f64,
}

/// Twenty grasp lengths uniformly spaced in `[0.01 L0, L0]`.
pub fn default_length_grid(total_length: f64) -> Vec<f64> {
    let (lo, hi) = (0.01 * total_length, total_length);
    (0..20).map(|i| lo + (hi - lo) * i as f64 / 19.0).collect()
}

/// `Q(s0, L)` for each requested grasp length.
pub fn quality_length_sweep(
    curve: &BoundaryCurve,
    s0: f64,
    lengths: &[f64],
    cone: &FrictionCone,
    cfg: &QualityConfig,
) -> Result<Vec<LengthPoint>> {
    lengths
        .par_iter()
        .map(|&length| {
            let r = worst_case_wrench(curve, s0, length, cone, cfg)?;
            Ok(LengthPoint {
                length,
                q: r.q,
                j_tilde: r.j_tilde,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementResult {
    pub length: f64,
    /// Start arclengths `s0_i = i L0 / grid_points`.
    pub starts: Vec<f64>,
    pub qualities: Vec<f64>,
    pub best_index: usize,
    pub best_start: f64,
    pub q_max: f64,
}

/// Best grasp start for a fixed length by discrete search over a uniform
/// grid of `grid_points` starts. Ties go to the smallest start.
pub fn maximize_quality_over_start(
    curve: &BoundaryCurve,
    length: f64,
    grid_points: usize,
    cone: &FrictionCone,
    cfg: &QualityConfig,
) -> Result<PlacementResult> {
    if grid_points < 2 {
        return Err(GraspError::param(
            "grid_points",
            format!("{grid_points} is below 2"),
        ));
    }
    let l0 = curve.total_length();
    let starts: Vec<f64> = (0..grid_points)
        .map(|i| l0 * i as f64 / grid_points as f64)
        .collect();
    let qualities: Vec<f64> = starts
        .par_iter()
        .map(|&s0| worst_case_wrench(curve, s0, length, cone, cfg).map(|r| r.q))
        .collect::<Result<_>>()?;
    let mut best_index = 0;
    for (i, q) in qualities.iter().enumerate() {
        if *q > qualities[best_index] {
            best_index = i;
        }
    }
    Ok(PlacementResult {
        length,
        best_start: starts[best_index],
        q_max: qualities[best_index],
        best_index,
        starts,
        qualities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fibonacci_lattice_covers_the_sphere() {
        let pts = fibonacci_sphere(12);
        assert_eq!(pts.len(), 12);
        let mean = pts
            .iter()
            .map(|&(a, b)| Wrench::from_angles(a, b).as_vector())
            .fold(nalgebra::Vector3::zeros(), |acc, v| acc + v)
            / 12.0;
        assert!(mean.norm() < 0.1);
        for (a, b) in pts {
            assert_relative_eq!(Wrench::from_angles(a, b).norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn default_length_grid_spans_the_boundary() {
        let g = default_length_grid(10.0);
        assert_eq!(g.len(), 20);
        assert_relative_eq!(g[0], 0.1);
        assert_relative_eq!(g[19], 10.0);
    }

    #[test]
    fn torque_scale_rescales_the_third_component() {
        let cfg = QualityConfig {
            torque_length_scale: 2.0,
            ..Default::default()
        };
        let w = cfg.wrench_at(1.0, 0.5);
        let plain = Wrench::from_angles(1.0, 0.5);
        assert_eq!(w.tau, 2.0 * plain.tau);
    }

    #[test]
    fn rejects_bad_configuration() {
        let c = BoundaryCurve::circle(1.0, 64).unwrap();
        let cone = FrictionCone::new(0.5).unwrap();
        let bad = QualityConfig {
            starts: 0,
            ..Default::default()
        };
        assert!(worst_case_wrench(&c, 0.0, 3.0, &cone, &bad).is_err());
        assert!(maximize_quality_over_start(&c, 3.0, 1, &cone, &Default::default()).is_err());
    }

    #[test]
    fn inner_failures_carry_the_angles() {
        let c = BoundaryCurve::circle(1.0, 64).unwrap();
        let cone = FrictionCone::new(0.5).unwrap();
        let cfg = QualityConfig {
            solver: InnerSolver::ForwardBackward(ForwardBackwardConfig {
                max_iters: 3,
                ..Default::default()
            }),
            starts: 2,
            ..Default::default()
        };
        match worst_case_wrench(&c, 0.0, 3.0, &cone, &cfg) {
            Err(GraspError::InnerSolve { alpha, .. }) => assert!(alpha.is_finite()),
            other => panic!("expected an inner-solve failure, got {other:?}"),
        }
    }
}
