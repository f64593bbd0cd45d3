//! Green functions against series oracles, comparison principles and
//! renewal decompositions.

use mq_core::geometry::a_of_q;
use mq_core::green::{check_renewal, check_twist_identity, green_column, RenewalVariant, TruncationBox};
use mq_core::lattice::fixtures::{m1, m2};
use mq_core::processes::WalkKind;
use mq_core::{Point, Vec2};

/// `Σ_m C(2m,m)² x^m`: the expected number of visits to the origin of the
/// nearest-neighbour walk whose opposite steps have masses multiplying to `x`
/// in both coordinates.
fn return_series(x: f64) -> f64 {
    // P(S_{2m} = 0) = x^m Σ_j C(2m,2j) C(2j,j) C(2m−2j,m−j) = x^m C(2m,m)².
    let (mut term, mut sum) = (1.0, 1.0);
    for m in 0..20_000u32 {
        let m = m as f64;
        term *= (2.0 * (2.0 * m + 1.0) / (m + 1.0)).powi(2) * x;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

#[test]
fn free_return_count_matches_the_binomial_series() {
    let exact = return_series(0.35 * 0.15);
    let origin = Point::new(0, 0);
    let col = green_column(&m1(), WalkKind::Free, Vec2::ZERO, origin, &TruncationBox::around(&[origin], 80)).unwrap();
    let g = col.value(origin).unwrap();
    assert!((g - exact).abs() < 1e-8, "{g} vs {exact}");
}

#[test]
fn killing_decreases_green_functions() {
    let m = m2();
    let target = Point::new(6, 4);
    let bx = TruncationBox::around(&[Point::new(1, 1), target], 40);
    let free = green_column(&m, WalkKind::Free, Vec2::ZERO, target, &bx).unwrap();
    let half = green_column(&m, WalkKind::HalfPlane1, Vec2::ZERO, target, &bx).unwrap();
    let quad = green_column(&m, WalkKind::Quadrant, Vec2::ZERO, target, &bx).unwrap();
    for x in 1..=8 {
        for y in 1..=8 {
            let z = Point::new(x, y);
            let (f, h, q) = (free.value(z).unwrap(), half.value(z).unwrap(), quad.value(z).unwrap());
            assert!(q > 0.0 && q <= h + 1e-14 && h <= f + 1e-14, "{z}: {q} {h} {f}");
        }
    }
    assert!(quad.value(target).unwrap() >= 1.0);
}

#[test]
fn twisted_and_plain_solves_agree() {
    let m = m1();
    let a = a_of_q(&m, Vec2::new(1.0, 2.0)).unwrap().a;
    let bx = TruncationBox {
        x_range: (-5, 5),
        y_range: (-5, 5),
        margin: 30,
    };
    let pairs: Vec<(Point, Point)> = [(-3, 2), (4, -1), (0, 0)]
        .iter()
        .flat_map(|&(tx, ty)| [(1, 1), (-4, 3), (2, -5)].map(|(x, y)| (Point::new(x, y), Point::new(tx, ty))))
        .collect();
    let defect = check_twist_identity(&m, WalkKind::Free, a, &bx, &pairs).unwrap();
    assert!(defect < 1e-8, "{defect}");
}

#[test]
fn renewal_decompositions_hold() {
    let m = m2();
    let bx = TruncationBox {
        x_range: (1, 8),
        y_range: (1, 8),
        margin: 60,
    };
    for variant in [RenewalVariant::QuadrantVsFree, RenewalVariant::QuadrantVsHalfPlane1] {
        for (z, t) in [((2, 3), (5, 5)), ((1, 1), (4, 2))] {
            let r = check_renewal(&m, variant, Point::new(z.0, z.1), Point::new(t.0, t.1), &bx).unwrap();
            assert!(r.residual <= r.tolerance + 1e-9, "{variant:?}: {r:?}");
        }
    }
}

#[test]
fn targets_outside_the_domain_are_rejected() {
    let bx = TruncationBox::around(&[Point::new(0, 3)], 10);
    assert!(green_column(&m1(), WalkKind::Quadrant, Vec2::ZERO, Point::new(0, 3), &bx).is_err());
    let bx = TruncationBox::around(&[Point::new(3, 3)], 10);
    assert!(green_column(&m1(), WalkKind::Free, Vec2::ZERO, Point::new(9, 9), &bx).is_err());
}

/// Partial sums `Σ_{n≤N} P_z(S_n = target, alive)` and survival `P_z(alive at N)`
/// of the twisted walk on `window`, by the backward recursion over steps.
fn truncated_series(
    steps: &[(Point, f64)],
    window: &[Point],
    target: Point,
    horizon: usize,
) -> (Vec<f64>, Vec<f64>) {
    let index: std::collections::HashMap<Point, usize> = window.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let next = |v: &[f64], source: f64| -> Vec<f64> {
        window
            .iter()
            .map(|&z| {
                let base = if source > 0.0 { f64::from(u8::from(z == target)) } else { 0.0 };
                base + steps
                    .iter()
                    .filter_map(|&(s, w)| index.get(&(z + s)).map(|&j| w * v[j]))
                    .sum::<f64>()
            })
            .collect()
    };
    let mut partial: Vec<f64> = window.iter().map(|&z| f64::from(u8::from(z == target))).collect();
    let mut alive = vec![1.0; window.len()];
    for _ in 0..horizon {
        partial = next(&partial, 1.0);
        alive = next(&alive, 0.0);
    }
    (partial, alive)
}

mod series {
    use super::*;
    use mq_core::geometry::{min_point, phi};
    use mq_core::JumpMeasure;
    use proptest::prelude::*;

    const OFFSETS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, -1)];

    fn case() -> impl Strategy<Value = (JumpMeasure, WalkKind, Point, bool)> {
        (
            prop::collection::vec(0.2f64..1.0, 6),
            prop::sample::select(vec![WalkKind::Free, WalkKind::Quadrant, WalkKind::HalfPlane1]),
            (1i64..=12, 1i64..=12),
            any::<bool>(),
        )
            .prop_map(|(w, kind, (x, y), twisted)| {
                // Bias towards the positive quadrant so every case is transient.
                let w: Vec<f64> = w.iter().zip([2.0, 2.0, 1.0, 1.0, 1.0, 1.0]).map(|(a, b)| a * b).collect();
                let total: f64 = w.iter().sum();
                let m = JumpMeasure::new(OFFSETS.iter().zip(&w).map(|(&(dx, dy), &p)| (Point::new(dx, dy), p / total)))
                    .unwrap();
                (m, kind, Point::new(x, y), twisted)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]
        #[test]
        fn solver_matches_the_truncated_series((m, kind, target, twisted) in case()) {
            let a = if twisted { min_point(&m).unwrap() * 0.5 } else { Vec2::ZERO };
            prop_assume!(phi(&m, a) <= 1.0);
            let bx = TruncationBox { x_range: (1, 12), y_range: (1, 12), margin: 8 };
            let col = green_column(&m, kind, a, target, &bx).unwrap();
            let window: Vec<Point> = col.grid().points().collect();
            prop_assert!(window.len() <= 41 * 41);
            let steps: Vec<(Point, f64)> = m.entries().iter().map(|&(s, p)| (s, p * a.dot_point(s).exp())).collect();
            let (partial, alive) = truncated_series(&steps, &window, target, 300);
            // The missing tail is E_z(G(S_N, target); alive) ≤ P_z(alive) · G(target, target).
            let g_tt = col.value(target).unwrap();
            for (i, &z) in window.iter().enumerate() {
                let g = col.value(z).unwrap();
                prop_assert!(g >= partial[i] - 1e-12);
                prop_assert!(g - partial[i] <= alive[i] * g_tt + 1e-12, "{}: {} vs {}", z, g, partial[i]);
            }
        }
    }
}

#[test]
fn linear_system_residual_is_at_solver_precision() {
    for (m, kind) in [(m1(), WalkKind::Quadrant), (m2(), WalkKind::HalfPlane1), (m2(), WalkKind::Free)] {
        let a = a_of_q(&m, Vec2::new(2.0, 1.0)).unwrap().a;
        let target = Point::new(8, 5);
        let col = green_column(&m, kind, a, target, &TruncationBox::around(&[Point::new(1, 1), target], 40)).unwrap();
        assert!(col.residual_max() <= 1e-11, "{kind:?}: {}", col.residual_max());
    }
}

#[test]
fn truncation_error_estimate_covers_a_wider_box() {
    let m = m2();
    let target = Point::new(5, 5);
    let bx = TruncationBox::around(&[Point::new(1, 1), target], 10);
    let col = green_column(&m, WalkKind::Quadrant, Vec2::ZERO, target, &bx).unwrap();
    let wide = green_column(&m, WalkKind::Quadrant, Vec2::ZERO, target, &bx.with_margin(20)).unwrap();
    for x in 1..=5 {
        for y in 1..=5 {
            let z = Point::new(x, y);
            let d = (col.value(z).unwrap() - wide.value(z).unwrap()).abs();
            assert!(d <= col.truncation_error * (1.0 + 1e-9) + 1e-15, "{z}: {d} vs {}", col.truncation_error);
        }
    }
}
