//! Oracles shared by the integration tests. They recompute quantities from
//! the grasp map and the cone rays without going through the solvers.

#![allow(dead_code)]

use continuum_grasp::geometry::CurveSegment;
use continuum_grasp::graspmap::{local_grasp_map, total_wrench, FrictionCone, Wrench};
use continuum_grasp::ocp::SolveReport;
use nalgebra::{Matrix3, Vector2, Vector3};

/// `max_ij |u_i(s_j) - max((B^T p)_i, 0)|` with `p = -chi (w_L + w_e)` and
/// `w_L` integrated from the contact forces.
pub fn stationarity_gap(
    seg: &CurveSegment,
    cone: &FrictionCone,
    external: Wrench,
    chi: f64,
    report: &SolveReport,
) -> f64 {
    let forces: Vec<Vector2<f64>> = report
        .control
        .values()
        .iter()
        .map(|u| cone.force(u))
        .collect();
    let wl = total_wrench(seg, &forces).unwrap();
    let p = -(wl.as_vector() + external.as_vector()) * chi;
    seg.samples()
        .iter()
        .zip(report.control.values())
        .map(|(sample, u)| {
            let b = local_grasp_map(sample) * cone.rays();
            let target = (b.transpose() * p).map(|x| x.max(0.0));
            (u - target).amax()
        })
        .fold(0.0, f64::max)
}

/// Trapezoid `int B B^T ds` built from the grasp map.
pub fn cone_gramian(seg: &CurveSegment, cone: &FrictionCone) -> Matrix3<f64> {
    let n = seg.len();
    let mut w = Matrix3::zeros();
    for (j, s) in seg.samples().iter().enumerate() {
        let c = if j == 0 || j == n - 1 { 0.5 } else { 1.0 } * seg.step();
        let b = local_grasp_map(s) * cone.rays();
        w += b * b.transpose() * c;
    }
    w
}

/// Smallest `(B^T p)_i` over the segment.
pub fn min_ray_response(seg: &CurveSegment, cone: &FrictionCone, p: &Vector3<f64>) -> f64 {
    seg.samples()
        .iter()
        .map(|s| (local_grasp_map(s) * cone.rays()).transpose() * p)
        .map(|r| r.min())
        .fold(f64::MAX, f64::min)
}

/// A unit external wrench whose optimal control is strictly positive:
/// choose a costate direction `p` with `B^T p > 0` on the whole segment and
/// invert `p = -chi (W_hat p + w_e)`. Returns the unit wrench and its
/// optimal cost.
pub fn interior_wrench(
    seg: &CurveSegment,
    cone: &FrictionCone,
    chi: f64,
    p_dir: Vector3<f64>,
) -> Option<(Wrench, f64)> {
    if min_ray_response(seg, cone, &p_dir) <= 0.0 {
        return None;
    }
    let w_hat = cone_gramian(seg, cone);
    let w = -(p_dir / chi + w_hat * p_dir);
    let scale = 1.0 / w.norm();
    let (w, p) = (w * scale, p_dir * scale);
    // u = B^T p, so 1/2 int |u|^2 = 1/2 p^T W_hat p and w_L + w_e = -p / chi
    let cost = 0.5 * p.dot(&(w_hat * p)) + 0.5 * p.norm_squared() / chi;
    Some((Wrench::from(w), cost))
}
