//! The force gramian of a segment against its geometric moments.

use continuum_grasp::geometry::{BoundaryCurve, CurveSegment, FourierMode};
use continuum_grasp::graspmap::{
    controllability_gramian, local_grasp_map, FrictionCone, GramianKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `L (L int|gamma|^2 - |int gamma|^2)` with trapezoid weights.
fn moment_determinant(seg: &CurveSegment) -> f64 {
    let h = seg.step();
    let n = seg.len();
    let (mut mean, mut second) = (nalgebra::Vector2::zeros(), 0.0);
    for (j, p) in seg.samples().iter().enumerate() {
        let c = if j == 0 || j == n - 1 { 0.5 * h } else { h };
        mean += p.position * c;
        second += p.position.norm_squared() * c;
    }
    let l = h * (n - 1) as f64;
    l * (l * second - mean.norm_squared())
}

fn check(name: &str, seg: &CurveSegment) {
    let det = controllability_gramian(seg, GramianKind::Force).determinant();
    let oracle = moment_determinant(seg);
    assert!(det > 0.0, "{name}: det W = {det}");
    let rel = (det - oracle).abs() / det;
    assert!(rel <= 1e-8, "{name}: relative gap {rel:e}");
}

#[test]
fn reference_curves_match_their_moments() {
    for (name, c) in [
        ("circle", BoundaryCurve::circle(1.0, 400).unwrap()),
        ("ellipse", BoundaryCurve::ellipse(2.0, 1.0, 400).unwrap()),
        ("dc1", BoundaryCurve::deformed_circle_dc1(400).unwrap()),
    ] {
        let l0 = c.total_length();
        check(name, &c.whole());
        check(name, &c.subcurve(0.0, 0.5 * l0).unwrap());
        check(name, &c.subcurve(0.8 * l0, 0.3 * l0).unwrap());
    }
}

#[test]
fn random_fourier_curves_match_their_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for i in 0..20 {
        let count = rng.random_range(1..=4);
        let budget = 0.9 / count as f64;
        let modes: Vec<FourierMode> = (0..count)
            .map(|_| {
                FourierMode::new(
                    rng.random_range(2..=7),
                    rng.random_range(0.0..budget),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let c = BoundaryCurve::fourier_perturbed_circle(rng.random_range(0.5..2.0), &modes, 400)
            .unwrap();
        let l0 = c.total_length();
        let s0 = rng.random_range(0.0..l0);
        let len = rng.random_range(0.05..1.0) * l0;
        check(&format!("fourier #{i}"), &c.subcurve(s0, len).unwrap());
    }
}

#[test]
fn cone_gramian_weights_the_contact_frame_by_the_rays() {
    // v1 v1^T + v2 v2^T = diag(2 cos^2 psi, 2 sin^2 psi) = diag(0.4, 1.6) at mu = 0.5
    let c = BoundaryCurve::ellipse(2.0, 1.0, 300).unwrap();
    let seg = c.subcurve(1.0, 2.5).unwrap();
    let cone = FrictionCone::new(0.5).unwrap();
    let d = nalgebra::Matrix2::new(0.4, 0.0, 0.0, 1.6);
    let n = seg.len();
    let mut oracle = nalgebra::Matrix3::zeros();
    for (j, p) in seg.samples().iter().enumerate() {
        let c = if j == 0 || j == n - 1 { 0.5 } else { 1.0 } * seg.step();
        let g = local_grasp_map(p);
        oracle += g * d * g.transpose() * c;
    }
    let w_hat = controllability_gramian(&seg, GramianKind::Cone(&cone));
    assert!((w_hat - oracle).amax() < 1e-12 * oracle.amax());
    let w = controllability_gramian(&seg, GramianKind::Force);
    assert!((w * 2.0 - w_hat).symmetric_eigenvalues().min() > -1e-12);
}
