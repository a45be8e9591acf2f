use continuum_grasp::geometry::BoundaryCurve;
use continuum_grasp::graspmap::FrictionCone;
use continuum_grasp::quality::{
    maximize_quality_over_start, quality_length_sweep, worst_case_wrench, QualityConfig,
};

fn cone() -> FrictionCone {
    FrictionCone::new(0.5).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn worst_case_dominates_every_start() {
    let c = BoundaryCurve::deformed_circle_dc1(400).unwrap();
    let l0 = c.total_length();
    let q = worst_case_wrench(&c, 0.1 * l0, 0.5 * l0, &cone(), &QualityConfig::default()).unwrap();
    assert_eq!(q.starts.len(), 12);
    for s in &q.starts {
        assert!(q.j_tilde >= s.start_effort && q.j_tilde >= s.effort);
        assert!(s.effort >= s.start_effort);
    }
    assert!(q.q > 0.0 && q.j_tilde <= 0.5 * 5e4);
    assert!((q.worst_wrench.norm() - 1.0).abs() < 1e-12);
    assert!((q.q * q.j_tilde - 1.0).abs() < 1e-12);
}

#[test]
fn results_do_not_depend_on_the_thread_count() {
    let c = BoundaryCurve::ellipse(2.0, 1.0, 400).unwrap();
    let l0 = c.total_length();
    let cfg = QualityConfig::default();
    let one = in_pool(1, || {
        worst_case_wrench(&c, 0.3 * l0, 0.4 * l0, &cone(), &cfg).unwrap()
    });
    let four = in_pool(4, || {
        worst_case_wrench(&c, 0.3 * l0, 0.4 * l0, &cone(), &cfg).unwrap()
    });
    assert_eq!(one.q.to_bits(), four.q.to_bits());
    assert_eq!(one.worst_wrench, four.worst_wrench);
    let again = worst_case_wrench(&c, 0.3 * l0, 0.4 * l0, &cone(), &cfg).unwrap();
    assert_eq!(one.q.to_bits(), again.q.to_bits());
}

#[test]
fn circle_quality_is_independent_of_the_start() {
    let c = BoundaryCurve::circle(1.0, 400).unwrap();
    let l0 = c.total_length();
    let p =
        maximize_quality_over_start(&c, 0.5 * l0, 20, &cone(), &QualityConfig::default()).unwrap();
    let (lo, hi) = p
        .qualities
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &q| (a.min(q), b.max(q)));
    assert!((hi - lo) / hi <= 0.01, "spread {lo} .. {hi}");
    assert_eq!(p.starts.len(), 20);
    assert_eq!(p.q_max, hi);
}

#[test]
fn ellipse_quality_respects_the_mirror_symmetry() {
    let c = BoundaryCurve::ellipse(2.0, 1.0, 400).unwrap();
    let l0 = c.total_length();
    let cfg = QualityConfig::default();
    let q = |s0: f64| {
        worst_case_wrench(&c, s0, 0.5 * l0, &cone(), &cfg)
            .unwrap()
            .q
    };
    for k in [0usize, 30, 40, 45, 130] {
        let s0 = k as f64 * l0 / 200.0;
        let mirror = (0.5 * l0 - s0).rem_euclid(l0);
        let (a, b) = (q(s0), q(mirror));
        assert!((a - b).abs() <= 0.02 * a.max(b), "s0 = {s0}: {a} vs {b}");
    }
}

#[test]
fn placement_ties_go_to_the_smallest_start() {
    let c = BoundaryCurve::ellipse(2.0, 1.0, 400).unwrap();
    let l0 = c.total_length();
    let p =
        maximize_quality_over_start(&c, 0.5 * l0, 8, &cone(), &QualityConfig::default()).unwrap();
    // grid points 2 and 6 are the two mirror-equivalent optima
    assert_eq!(p.best_index, 2);
    assert!((p.best_start - 0.25 * l0).abs() < 1e-12);
}

#[test]
fn longer_grasps_are_better() {
    let c = BoundaryCurve::circle(1.0, 400).unwrap();
    let l0 = c.total_length();
    let lengths = [0.1 * l0, 0.5 * l0, l0, 0.5 * l0];
    let sweep =
        quality_length_sweep(&c, 0.0, &lengths, &cone(), &QualityConfig::default()).unwrap();
    assert_eq!(sweep.len(), 4);
    assert!(sweep[2].q > sweep[1].q && sweep[1].q > sweep[0].q);
    assert_eq!(sweep[1].q.to_bits(), sweep[3].q.to_bits());
    assert!(
        quality_length_sweep(&c, 0.0, &[1.1 * l0], &cone(), &QualityConfig::default()).is_err()
    );
}

#[test]
fn doubling_the_grid_changes_quality_by_less_than_a_percent() {
    for (name, coarse, fine) in [
        (
            "circle",
            BoundaryCurve::circle(1.0, 400).unwrap(),
            BoundaryCurve::circle(1.0, 800).unwrap(),
        ),
        (
            "ellipse",
            BoundaryCurve::ellipse(2.0, 1.0, 400).unwrap(),
            BoundaryCurve::ellipse(2.0, 1.0, 800).unwrap(),
        ),
    ] {
        let cfg = QualityConfig::default();
        let q = |c: &BoundaryCurve| {
            worst_case_wrench(c, 0.0, 0.5 * c.total_length(), &cone(), &cfg)
                .unwrap()
                .q
        };
        let (a, b) = (q(&coarse), q(&fine));
        assert!((a - b).abs() <= 0.01 * b, "{name}: {a} vs {b}");
    }
}
