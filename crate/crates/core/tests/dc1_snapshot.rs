//! Frozen results for the deformed circle DC1. These values come from the
//! full pipeline at its defaults; a change here means the numerics moved.

use continuum_grasp::geometry::BoundaryCurve;
use continuum_grasp::graspmap::FrictionCone;
use continuum_grasp::quality::{maximize_quality_over_start, worst_case_wrench, QualityConfig};

const TOTAL_LENGTH: f64 = 6.443_669_798_727_36;
const BEST_INDEX: usize = 37;
const Q_MAX: f64 = 0.128_605_392_198_075;
const WORST_WRENCH: [f64; 3] = [0.428314, -0.515625, -0.742077];

#[test]
fn placement_on_dc1_is_unchanged() {
    let c = BoundaryCurve::deformed_circle_dc1(400).unwrap();
    let l0 = c.total_length();
    assert!((l0 - TOTAL_LENGTH).abs() < 1e-12 * TOTAL_LENGTH);

    let cone = FrictionCone::new(0.5).unwrap();
    let cfg = QualityConfig::default();
    let p = maximize_quality_over_start(&c, 0.5 * l0, 200, &cone, &cfg).unwrap();
    assert_eq!(p.best_index, BEST_INDEX);
    assert!(
        (p.q_max - Q_MAX).abs() < 1e-6 * Q_MAX,
        "q_max = {:.15e}",
        p.q_max
    );

    // the argmax is unique: the runner-up is clearly below
    let runner_up = p
        .qualities
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != p.best_index)
        .map(|(_, &q)| q)
        .fold(f64::MIN, f64::max);
    assert!(runner_up < (1.0 - 1e-3) * p.q_max);

    let q = worst_case_wrench(&c, p.best_start, 0.5 * l0, &cone, &cfg).unwrap();
    let w = q.worst_wrench.as_vector();
    for i in 0..3 {
        assert!((w[i] - WORST_WRENCH[i]).abs() < 1e-4, "{}", q.worst_wrench);
    }
}
