//! Exit laws and positive harmonic functions of the quadrant-killed walk.

use mq_core::boundary::{
    boundary_expectation_twisted, exit_distribution, free_martingale_defect, h1_function, h_function,
    half_plane_assembly, harmonicity_residual, level_crossing_profile, twisted_harmonicity_residual, ExitEvent,
    HarmonicOptions, WeightFn,
};
use mq_core::geometry::a_of_q;
use mq_core::green::TruncationBox;
use mq_core::lattice::fixtures::{m1, m2};
use mq_core::processes::WalkKind;
use mq_core::{Point, Vec2};

fn square(lo: i64, hi: i64, margin: i64) -> TruncationBox {
    TruncationBox {
        x_range: (lo, hi),
        y_range: (lo, hi),
        margin,
    }
}

#[test]
fn critical_harmonic_function_matches_the_half_plane_assembly() {
    for m in [m1(), m2()] {
        let region = square(1, 10, 0);
        let h = h_function(&m, Vec2::new(1.0, 0.0), &region, &HarmonicOptions::default()).unwrap();
        for (z, v) in half_plane_assembly(&m, &region, 60).unwrap() {
            let hv = h.twisted_value(z).unwrap();
            assert!((hv - v).abs() <= 1e-7 * hv.abs().max(1.0), "{z}: {hv} vs {v}");
        }
    }
}

#[test]
fn nearest_neighbour_half_plane_function_is_the_height() {
    // At a(1,0) the vertical marginal of the nearest-neighbour fixture is a
    // symmetric ±1 walk, which leaves ℕ* exactly at 0, so h¹(z)e^{−a·z} = z₂.
    let h1 = h1_function(&m1(), &square(1, 12, 1)).unwrap();
    for y in 1..=12 {
        for x in [1, 5, 12] {
            let v = h1.twisted_value(Point::new(x, y)).unwrap();
            assert!((v - y as f64).abs() < 1e-9, "({x},{y}): {v}");
        }
    }
}

#[test]
fn harmonic_functions_are_positive_harmonic_and_vanish_outside() {
    let m = m2();
    for q in [Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 3.0), Vec2::new(0.0, 1.0)] {
        let h = h_function(&m, q, &square(1, 12, 0), &HarmonicOptions::default()).unwrap();
        assert!(!h.bracket_warning, "bracket {} at {q}", h.bracket_width);
        for x in 1..=10 {
            for y in 1..=10 {
                let z = Point::new(x, y);
                assert!(h.value(z).unwrap() > 0.0);
                if h.is_trusted(z, &m) {
                    let plain = harmonicity_residual(&h, &m, z).unwrap();
                    assert!(plain <= 1e-7 * h.value(z).unwrap().max(1.0), "{q} {z}: {plain}");
                    assert!(twisted_harmonicity_residual(&h, &m, z).unwrap() <= 1e-7);
                }
            }
        }
        assert_eq!(h.value(Point::new(0, 4)), Some(0.0));
        assert_eq!(h.value(Point::new(4, -1)), Some(0.0));
    }
}

#[test]
fn diagonal_harmonic_function_increases_along_the_diagonal() {
    let m = m1();
    let h = h_function(&m, Vec2::new(1.0, 1.0), &square(1, 15, 0), &HarmonicOptions::default()).unwrap();
    let vals: Vec<f64> = (1..=15).map(|t| h.value(Point::new(t, t)).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] > w[0]), "{vals:?}");
}

#[test]
fn exit_law_conserves_mass_and_dominates_one_step_exits() {
    let m = m1();
    let a = a_of_q(&m, Vec2::new(1.0, 0.0)).unwrap().a;
    let z = Point::new(1, 5);
    let exit = exit_distribution(&m, WalkKind::Quadrant, a, z, &TruncationBox::around(&[z], 60)).unwrap();
    assert!(exit.conservation_defect().abs() < 1e-10);
    let first = exit.weights.iter().find(|e| e.point == Point::new(0, 5)).unwrap();
    assert!(first.weight >= m.mass(Point::new(-1, 0)) * (-a.x).exp());
    let (lo, hi) = exit.exit_bracket;
    // The bracket closes the leaked mass, so it starts at the in-window mass.
    assert!(exit.total_mass() <= lo + 1e-12 && lo <= hi && hi <= 1.0 + 1e-12, "{:?} {}", exit.exit_bracket, exit.total_mass());
    // Exits below the axis have non-positive height.
    assert!(boundary_expectation_twisted(&exit, WeightFn::S2, ExitEvent::Tau2BeforeTau1) <= 0.0);
}

#[test]
fn vertical_martingale_identity_holds_at_the_critical_twist() {
    for m in [m1(), m2()] {
        for z in [Point::new(1, 1), Point::new(7, 30)] {
            assert!(free_martingale_defect(&m, z).unwrap() < 1e-12);
        }
    }
}

#[test]
fn level_crossing_profile_is_the_gamblers_ruin_ratio() {
    // The twisted vertical walk of the nearest-neighbour fixture is a lazy
    // symmetric ±1 walk: from k it reaches k+1 before 0 with probability k/(k+1).
    let ks = [1, 2, 4, 8, 16];
    for c in level_crossing_profile(&m1(), &ks).unwrap() {
        let exact = c.k as f64 / (c.k + 1) as f64;
        assert!((c.value - exact).abs() < 1e-8, "k={}: {}", c.k, c.value);
        assert!((c.value - c.value_wide).abs() < 1e-8);
    }
    let general = level_crossing_profile(&m2(), &ks).unwrap();
    assert!(general.windows(2).all(|w| w[1].value >= w[0].value));
    assert!(general.iter().all(|c| c.value > 0.0 && c.value <= 1.0));
}

#[test]
fn swap_symmetric_measures_have_swapped_harmonic_functions() {
    let m = m2();
    assert!(m.is_swap_symmetric());
    for (q, qs) in [
        (Vec2::new(2.0, 1.0), Vec2::new(1.0, 2.0)),
        (Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)),
    ] {
        let h = h_function(&m, q, &square(1, 8, 0), &HarmonicOptions::default()).unwrap();
        let hs = h_function(&m, qs, &square(1, 8, 0), &HarmonicOptions::default()).unwrap();
        for x in 1..=8 {
            for y in 1..=8 {
                let (u, v) = (h.value(Point::new(x, y)).unwrap(), hs.value(Point::new(y, x)).unwrap());
                assert!((u - v).abs() <= 1e-8 * u.abs(), "{q} at ({x},{y}): {u} vs {v}");
            }
        }
    }
}

#[test]
fn boundary_functionals_are_stable_under_box_doubling() {
    let m = m1();
    let a = a_of_q(&m, Vec2::new(1.0, 1.0)).unwrap().a;
    let z = Point::new(4, 3);
    // The twisted walk drifts away along (1,1); the box must be wide enough
    // for returns from its far side to be negligible.
    let bx = TruncationBox::around(&[Point::new(1, 1), z], 120);
    let small = exit_distribution(&m, WalkKind::Quadrant, a, z, &bx).unwrap();
    let big = exit_distribution(&m, WalkKind::Quadrant, a, z, &bx.with_margin(240)).unwrap();
    for f in [WeightFn::One, WeightFn::S1, WeightFn::AbsS2] {
        for ev in [ExitEvent::TauLtInf, ExitEvent::Tau1BeforeTau2, ExitEvent::Tau2BeforeTau1] {
            let (u, v) = (boundary_expectation_twisted(&small, f, ev), boundary_expectation_twisted(&big, f, ev));
            assert!((u - v).abs() <= 1e-7, "{f:?} {ev:?}: {u} vs {v}");
        }
    }
}

#[test]
fn exit_laws_are_bitwise_independent_of_the_thread_count() {
    let m = m1();
    let a = a_of_q(&m, Vec2::new(1.0, 0.0)).unwrap().a;
    let z = Point::new(3, 3);
    let solve = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| exit_distribution(&m, WalkKind::Quadrant, a, z, &TruncationBox::around(&[z], 150)).unwrap())
    };
    let (one, four) = (solve(1), solve(4));
    assert_eq!(one.truncation_leak.to_bits(), four.truncation_leak.to_bits());
    assert_eq!(one.weights, four.weights);
}
