//! Martin-kernel limit drivers: exact identities, independent rate routes and
//! regression values of the principal-part decomposition.

use mq_core::boundary::half_plane_assembly;
use mq_core::geometry::{a_of_q, circle_directions};
use mq_core::green::TruncationBox;
use mq_core::lattice::fixtures::{m1, m2};
use mq_core::limits::{
    free_martin_kernel_check, rate_by_conjugate, ratio_limit_check, relative_gap, richardson_rate, smoothed,
    smoothed_trend_ok, quadrant_martin_convergence, uniform_bound_scan, xi_decomposition, RaySpec,
};
use mq_core::processes::WalkKind;
use mq_core::{Point, Vec2};

#[test]
fn ray_points_round_and_clamp() {
    let ray = RaySpec::new(Vec2::new(3.0, 4.0), &[10.0, 21.0]).unwrap();
    assert_eq!(ray.points(), vec![Point::new(6, 8), Point::new(13, 17)]);
    let axis = RaySpec::new(Vec2::new(1.0, 0.0), &[5.0]).unwrap();
    assert_eq!(axis.point(5.0), Point::new(5, 1));
    assert!(RaySpec::new(Vec2::new(-1.0, 1.0), &[5.0]).is_err());
    assert!(RaySpec::new(Vec2::new(1.0, 1.0), &[5.0, 5.0]).is_err());
    assert!(RaySpec::new(Vec2::new(1.0, 1.0), &[]).is_err());
}

#[test]
fn gaps_and_trend_rule() {
    assert_eq!(relative_gap(1.1, 1.0), 0.10000000000000009);
    assert_eq!(relative_gap(0.5, 0.0), 0.5);
    assert_eq!(smoothed(&[0.4, 0.2, 0.2, 0.1]), vec![0.30000000000000004, 0.2, 0.15000000000000002]);
    assert!(smoothed_trend_ok(&[0.4, 0.2, 0.25, 0.1]));
    assert!(!smoothed_trend_ok(&[0.1, 0.2, 0.3, 0.4]));
}

#[test]
fn richardson_fit_recovers_a_logarithmic_prefactor() {
    let samples: Vec<(f64, f64)> = [20.0, 40.0, 60.0, 80.0]
        .iter()
        .map(|&r: &f64| (r, 0.7 * r + 1.5 * r.ln() - 2.0))
        .collect();
    assert!((richardson_rate(&samples).unwrap() - 0.7).abs() < 1e-10);
    assert!(richardson_rate(&samples[..2]).is_none());
}

#[test]
fn conjugate_rate_agrees_with_the_spectral_point() {
    for m in [m1(), m2()] {
        for q in circle_directions(32) {
            let spectral = a_of_q(&m, q).unwrap().rate();
            let conj = rate_by_conjugate(&m, q).unwrap();
            assert!((spectral - conj).abs() < 1e-8, "{q}: {spectral} vs {conj}");
        }
    }
}

#[test]
fn kernels_are_exactly_one_at_the_reference_point() {
    let ray = RaySpec::new(Vec2::new(1.0, 1.0), &[20.0, 30.0]).unwrap();
    let z0 = Point::new(2, 2);
    let rep = free_martin_kernel_check(&m1(), &ray, &[z0, Point::new(3, 1)], z0).unwrap();
    for row in rep.rows.iter().filter(|r| r.test_point == z0) {
        assert!((row.observed - 1.0).abs() < 1e-13);
    }
    let rep = ratio_limit_check(&m2(), WalkKind::Free, &ray, z0, Point::new(0, 0)).unwrap();
    assert!(rep.rows.iter().all(|r| (r.observed - 1.0).abs() < 1e-13));
    assert!(rep.verdict.consistency_ok);
}

#[test]
fn ratio_limits_reject_shifts_off_the_period_lattice() {
    let ray = RaySpec::new(Vec2::new(1.0, 1.0), &[20.0]).unwrap();
    // The nearest-neighbour fixture has period 2.
    assert!(ratio_limit_check(&m1(), WalkKind::Free, &ray, Point::new(2, 2), Point::new(1, 0)).is_err());
    assert!(ratio_limit_check(&m1(), WalkKind::HalfPlane1, &ray, Point::new(2, 2), Point::new(2, 2)).is_err());
    assert!(ratio_limit_check(&m1(), WalkKind::Quadrant, &ray, Point::new(2, 2), Point::new(2, 0)).is_err());
}

#[test]
fn critical_target_matches_the_half_plane_assembly() {
    // The limit target along (1,0) is a ratio of h_{a(1,0)} values; rebuild it
    // from h¹ and the exit law of the quadrant walk.
    let m = m2();
    let ray = RaySpec::new(Vec2::new(1.0, 0.0), &[20.0]).unwrap();
    let (z0, pts) = (Point::new(1, 1), [Point::new(2, 3), Point::new(4, 1)]);
    let rep = quadrant_martin_convergence(&m, &ray, &pts, z0).unwrap();
    let assembled = half_plane_assembly(&m, &TruncationBox::around(&[z0, pts[0], pts[1]], 0), 60).unwrap();
    let at = |p: Point| assembled.iter().find(|(z, _)| *z == p).unwrap().1;
    let a = a_of_q(&m, Vec2::new(1.0, 0.0)).unwrap().a;
    for row in &rep.rows {
        let expected = at(row.test_point) / at(z0) * a.dot_point(row.test_point - z0).exp();
        assert!((row.target - expected).abs() <= 1e-6 * expected, "{}: {} vs {expected}", row.test_point, row.target);
    }
}

#[test]
fn principal_part_with_full_trimming_reproduces_the_killed_green_function() {
    let rec = xi_decomposition(&m1(), Vec2::new(1.0, 1.0), 0.999, Point::new(2, 3), 20.0).unwrap();
    assert!((rec.ratio - 1.0).abs() < 1e-4, "{}", rec.ratio);
    assert!(rec.xi > 0.0 && rec.g_plus > 0.0);
    assert!(xi_decomposition(&m1(), Vec2::new(1.0, 1.0), 1.0, Point::new(2, 3), 20.0).is_err());
}

#[test]
fn uniform_envelope_constants_are_stable() {
    let ray = RaySpec::new(Vec2::new(1.0, 1.0), &[20.0, 30.0]).unwrap();
    let free = uniform_bound_scan(&m1(), WalkKind::Free, &ray, 0.05, 0.2, Point::new(1, 1)).unwrap();
    assert!(free.stable);
    for c in &free.constants {
        assert!(c.upper >= 1.0 && c.points > 0);
        let lower = c.lower.unwrap();
        assert!(lower > 0.0 && lower <= 1.0);
    }
    let half = uniform_bound_scan(&m2(), WalkKind::HalfPlane1, &ray, 0.05, 0.2, Point::new(1, 1)).unwrap();
    assert!(half.stable && half.constants.iter().all(|c| c.lower.is_none()));
    assert!(uniform_bound_scan(&m1(), WalkKind::Free, &ray, 0.05, 1.5, Point::new(1, 1)).is_err());
}

#[test]
fn opposite_shifts_give_reciprocal_ratios() {
    let ray = RaySpec::new(Vec2::new(2.0, 1.0), &[20.0, 30.0, 40.0]).unwrap();
    let rep = ratio_limit_check(&m2(), WalkKind::HalfPlane1, &ray, Point::new(3, 2), Point::new(1, 0)).unwrap();
    let defects: Vec<f64> = rep
        .diagnostics
        .iter()
        .filter(|d| d.0.starts_with("reciprocal_defect"))
        .map(|d| d.1)
        .collect();
    assert_eq!(defects.len(), 3);
    assert!(defects.iter().all(|&d| d <= 1e-6), "{defects:?}");
    assert_eq!(rep.diagnostic("period"), rep.diagnostic("half_plane_period"));
}
