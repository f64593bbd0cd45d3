//! Measure ingestion, hypothesis checks and periods.

use mq_core::lattice::{fixtures, half_plane_return_period, period2d, validate};
use mq_core::{Error, JumpMeasure, Point};
use proptest::prelude::*;

#[test]
fn fixtures_satisfy_the_hypotheses() {
    for (m, period) in [(fixtures::m1(), 2), (fixtures::m2(), 1)] {
        let r = validate(&m);
        assert!(r.all_hold(), "{r:?}");
        assert_eq!(period2d(&m, 12).unwrap(), period);
        assert_eq!(half_plane_return_period(&m, 12).unwrap(), period);
        assert!(m.is_swap_symmetric());
    }
    assert!((fixtures::m1().mean().x - 0.2).abs() < 1e-15);
}

#[test]
fn invalid_measures_are_rejected() {
    let field = |r: mq_core::Result<JumpMeasure>| match r.unwrap_err() {
        Error::InvalidMeasure { field, .. } => field,
        e => panic!("unexpected {e}"),
    };
    assert_eq!(field(JumpMeasure::from_triples(&[(1, 0, 0.5), (0, 1, 0.49)])), "sum");
    assert_eq!(field(JumpMeasure::from_triples(&[(1, 0, 0.5), (1, 0, 0.5)])), "offset");
    assert_eq!(field(JumpMeasure::from_triples(&[(1, 0, 1.5), (0, 1, -0.5)])), "mass");
    assert_eq!(field(JumpMeasure::from_triples(&[(0, 0, 1.0)])), "entries");
    assert_eq!(field(JumpMeasure::from_triples(&[])), "entries");
}

#[test]
fn driftless_or_one_sided_walks_fail_validation() {
    let zero_drift = JumpMeasure::from_triples(&[(1, 0, 0.25), (-1, 0, 0.25), (0, 1, 0.25), (0, -1, 0.25)]).unwrap();
    assert!(!validate(&zero_drift).all_hold());
    let one_sided = JumpMeasure::from_triples(&[(1, 0, 0.5), (0, 1, 0.5)]).unwrap();
    assert!(!validate(&one_sided).all_hold());
}

proptest! {
    #[test]
    fn accepted_measures_have_unit_mass_and_stable_periods(
        w in prop::collection::vec(0.05f64..1.0, 5),
        scale in 1i64..=3,
    ) {
        let offsets = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1)];
        let total: f64 = w.iter().sum();
        let m = JumpMeasure::new(
            offsets.iter().zip(&w).map(|(&(x, y), &p)| (Point::new(x * scale, y * scale), p / total)),
        ).unwrap();
        let mass: f64 = m.entries().iter().map(|e| e.1).sum();
        prop_assert!((mass - 1.0).abs() <= 1e-12);
        let p = period2d(&m, 8).unwrap();
        prop_assert_eq!(p, period2d(&m, 16).unwrap());
        prop_assert_eq!(p, 1);
    }
}
