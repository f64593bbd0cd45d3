//! Jump measures on ℤ² and their structural properties: irreducibility of the
//! free and killed walks, drift, aperiodicity of the coordinates and the period
//! of the two-dimensional walk.

use crate::error::{Error, Result};
use crate::vector::{Point, Vec2};
use serde::{Deserialize, Serialize};
use std::collections::{HashSet, VecDeque};

/// A lattice step of the walk.
pub type Offset = Point;

/// Absolute tolerance on the total mass of a measure.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Default side of the window used to certify irreducibility of the killed walk.
pub const DEFAULT_WINDOW: i64 = 12;

/// Default horizon for the return-time enumeration behind the period.
pub const DEFAULT_PERIOD_HORIZON: usize = 12;

/// A finitely supported probability measure on ℤ².
///
/// Entries are kept sorted by offset so every derived quantity is computed in a
/// fixed order, independent of how the measure was written down.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpMeasure {
    entries: Vec<(Offset, f64)>,
}

impl JumpMeasure {
    /// Builds a measure, rejecting empty supports, non-positive or duplicated
    /// masses, a total mass away from one and the trivial measure at the origin.
    pub fn new(entries: impl IntoIterator<Item = (Offset, f64)>) -> Result<Self> {
        let mut entries: Vec<(Offset, f64)> = entries.into_iter().collect();
        if entries.is_empty() {
            return Err(Error::InvalidMeasure {
                field: "entries",
                detail: "support is empty".into(),
            });
        }
        for &(z, p) in &entries {
            if !(p.is_finite() && p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidMeasure {
                    field: "mass",
                    detail: format!("mass {p} at offset {z} is not in (0, 1]"),
                });
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidMeasure {
                field: "offset",
                detail: format!("offset {} appears more than once", w[0].0),
            });
        }
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure {
                field: "sum",
                detail: format!("masses sum to {total}, expected 1 within {MASS_TOLERANCE:e}"),
            });
        }
        if entries.iter().all(|e| e.0 == Point::new(0, 0)) {
            return Err(Error::InvalidMeasure {
                field: "entries",
                detail: "support is {(0,0)}: the walk never moves".into(),
            });
        }
        Ok(Self { entries })
    }

    /// Convenience constructor from `(dx, dy, mass)` triples.
    pub fn from_triples(triples: &[(i64, i64, f64)]) -> Result<Self> {
        Self::new(triples.iter().map(|&(x, y, p)| (Point::new(x, y), p)))
    }

    pub fn entries(&self) -> &[(Offset, f64)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = Offset> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    /// Mass of a single offset (zero off the support).
    pub fn mass(&self, z: Offset) -> f64 {
        self.entries
            .binary_search_by(|e| e.0.cmp(&z))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// The drift `Σ z μ(z)`.
    pub fn mean(&self) -> Vec2 {
        self.entries
            .iter()
            .fold(Vec2::ZERO, |acc, &(z, p)| acc + z.as_vec() * p)
    }

    /// Largest coordinate of any step in absolute value.
    pub fn max_step(&self) -> i64 {
        self.support().map(|z| z.x.abs().max(z.y.abs())).max().unwrap_or(0)
    }

    /// Largest downward jump `max(0, -min dx)` and `max(0, -min dy)` per axis.
    pub fn max_down_jump(&self) -> [i64; 2] {
        let mx = self.support().map(|z| -z.x).max().unwrap_or(0).max(0);
        let my = self.support().map(|z| -z.y).max().unwrap_or(0).max(0);
        [mx, my]
    }

    /// Largest upward jump per axis.
    pub fn max_up_jump(&self) -> [i64; 2] {
        let mx = self.support().map(|z| z.x).max().unwrap_or(0).max(0);
        let my = self.support().map(|z| z.y).max().unwrap_or(0).max(0);
        [mx, my]
    }

    /// The measure with coordinates exchanged, `(dx, dy) ↦ (dy, dx)`.
    pub fn swapped(&self) -> JumpMeasure {
        let mut entries: Vec<_> = self.entries.iter().map(|&(z, p)| (z.swap(), p)).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        JumpMeasure { entries }
    }

    /// True when the measure is invariant under exchanging the coordinates.
    pub fn is_swap_symmetric(&self) -> bool {
        self.entries
            .iter()
            .all(|&(z, p)| (self.mass(z.swap()) - p).abs() <= MASS_TOLERANCE)
    }

    /// Marginal law of one coordinate as sorted `(step, mass)` pairs.
    pub fn marginal(&self, axis: usize) -> Vec<(i64, f64)> {
        let mut out: Vec<(i64, f64)> = Vec::new();
        for &(z, p) in &self.entries {
            let s = if axis == 0 { z.x } else { z.y };
            match out.binary_search_by(|e| e.0.cmp(&s)) {
                Ok(i) => out[i].1 += p,
                Err(i) => out.insert(i, (s, p)),
            }
        }
        out
    }
}

/// Outcome of checking the standing hypotheses on a measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// Free walk irreducible on ℤ² and drift nonzero.
    pub h1_irreducible: bool,
    /// The support alone reaches every lattice point (irreducibility without the drift condition).
    pub generates_lattice: bool,
    pub mean: Vec2,
    /// Walk killed outside ℕ*×ℕ* irreducible on the certification window.
    pub h2_killed_irreducible: bool,
    /// Always true for finite support.
    pub h3_finite_phi: bool,
    /// Each coordinate walk irreducible and aperiodic on ℤ.
    pub h4_coordinates_aperiodic: [bool; 2],
    /// Gcd of the return times of the free walk; `None` when it never returns
    /// within the enumeration horizon.
    pub period_2d: Option<u64>,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.h1_irreducible
            && self.h2_killed_irreducible
            && self.h3_finite_phi
            && self.h4_coordinates_aperiodic.iter().all(|&b| b)
    }

    /// Converts a failed report into an error naming the first violated hypothesis.
    pub fn require(&self) -> Result<()> {
        if !self.generates_lattice {
            return Err(Error::Hypothesis("free walk is not irreducible on ℤ²".into()));
        }
        if self.mean == Vec2::ZERO {
            return Err(Error::Hypothesis("drift is zero".into()));
        }
        if !self.h2_killed_irreducible {
            return Err(Error::Hypothesis(
                "walk killed outside the open quadrant is not irreducible".into(),
            ));
        }
        if !self.h4_coordinates_aperiodic.iter().all(|&b| b) {
            return Err(Error::Hypothesis(format!(
                "coordinate walks not irreducible/aperiodic on ℤ: {:?}",
                self.h4_coordinates_aperiodic
            )));
        }
        Ok(())
    }
}

/// Checks every hypothesis with the default certification window.
pub fn validate(measure: &JumpMeasure) -> HypothesisReport {
    validate_with_window(measure, DEFAULT_WINDOW)
}

/// Checks every hypothesis; the killed walk is certified on `[1, window]²`.
pub fn validate_with_window(measure: &JumpMeasure, window: i64) -> HypothesisReport {
    let mean = measure.mean();
    let generates_lattice = free_walk_irreducible(measure);
    let h2 = killed_walk_irreducible(measure, window.max(2));
    let h4 = [coordinate_aperiodic(measure, 0), coordinate_aperiodic(measure, 1)];
    let period_2d = if generates_lattice {
        period2d(measure, DEFAULT_PERIOD_HORIZON).ok()
    } else {
        None
    };
    HypothesisReport {
        h1_irreducible: generates_lattice && mean != Vec2::ZERO,
        generates_lattice,
        mean,
        h2_killed_irreducible: h2,
        h3_finite_phi: true,
        h4_coordinates_aperiodic: h4,
        period_2d,
    }
}

/// The drift of the measure.
pub fn mean(measure: &JumpMeasure) -> Vec2 {
    measure.mean()
}

/// Breadth-first reachability over a bounded region; `allowed` filters states,
/// `steps` are applied forward.
fn reachable(start: Point, steps: &[Offset], allowed: impl Fn(Point) -> bool) -> HashSet<Point> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    if allowed(start) {
        seen.insert(start);
        queue.push_back(start);
    }
    while let Some(p) = queue.pop_front() {
        for &s in steps {
            let n = p + s;
            if allowed(n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen
}

/// The free walk reaches ±e₁ and ±e₂ from the origin, hence every point of ℤ².
fn free_walk_irreducible(measure: &JumpMeasure) -> bool {
    let steps: Vec<Offset> = measure.support().collect();
    let r = 8 + 4 * measure.max_step();
    let seen = reachable(Point::new(0, 0), &steps, |p| p.x.abs() <= r && p.y.abs() <= r);
    [(1, 0), (-1, 0), (0, 1), (0, -1)]
        .iter()
        .all(|&(x, y)| seen.contains(&Point::new(x, y)))
}

/// Every state of `[1, window]²` is reachable from (1,1) and can reach (1,1)
/// without leaving the open quadrant. Paths may wander into a padded region.
fn killed_walk_irreducible(measure: &JumpMeasure, window: i64) -> bool {
    let steps: Vec<Offset> = measure.support().collect();
    let back: Vec<Offset> = steps.iter().map(|&s| -s).collect();
    let hi = window + 4 * measure.max_step() + 4;
    let inside = |p: Point| p.x >= 1 && p.y >= 1 && p.x <= hi && p.y <= hi;
    let start = Point::new(1, 1);
    let fwd = reachable(start, &steps, inside);
    let bwd = reachable(start, &back, inside);
    (1..=window).all(|x| {
        (1..=window).all(|y| {
            let p = Point::new(x, y);
            fwd.contains(&p) && bwd.contains(&p)
        })
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Coordinate `axis` of the walk is irreducible on ℤ (its steps have gcd one and
/// take both signs) and its return times have gcd one.
fn coordinate_aperiodic(measure: &JumpMeasure, axis: usize) -> bool {
    let marg = measure.marginal(axis);
    let has_pos = marg.iter().any(|e| e.0 > 0);
    let has_neg = marg.iter().any(|e| e.0 < 0);
    let step_gcd = marg.iter().fold(0u64, |g, e| gcd(g, e.0.unsigned_abs()));
    if !(has_pos && has_neg && step_gcd == 1) {
        return false;
    }
    let steps: Vec<Offset> = marg.iter().map(|e| Point::new(e.0, 0)).collect();
    let k = DEFAULT_PERIOD_HORIZON;
    matches!(return_gcd(&steps, Point::new(0, 0), k, |_| true), Some(1))
}

/// Gcd of the times `k ≤ k_max` at which the walk can be back at `start`,
/// computed on supports only (positivity, not magnitude).
fn return_gcd(
    steps: &[Offset],
    start: Point,
    k_max: usize,
    allowed: impl Fn(Point) -> bool,
) -> Option<u64> {
    let mut current: HashSet<Point> = HashSet::from([start]);
    let mut g = 0u64;
    for k in 1..=k_max {
        let mut next = HashSet::with_capacity(current.len() * steps.len());
        for &p in &current {
            for &s in steps {
                let n = p + s;
                if allowed(n) {
                    next.insert(n);
                }
            }
        }
        if next.contains(&start) {
            g = gcd(g, k as u64);
        }
        current = next;
    }
    (g > 0).then_some(g)
}

/// Period of the free walk: gcd of `{k ≤ k_max : P₀(S(k)=0) > 0}`. The result
/// is recomputed with `2·k_max` and must agree.
pub fn period2d(measure: &JumpMeasure, k_max: usize) -> Result<u64> {
    if k_max < 8 {
        return Err(Error::Input(format!("period horizon {k_max} must be at least 8")));
    }
    let steps: Vec<Offset> = measure.support().collect();
    let origin = Point::new(0, 0);
    let short = return_gcd(&steps, origin, k_max, |_| true).ok_or_else(|| {
        Error::Input(format!("no return to the origin within {k_max} steps; increase k_max"))
    })?;
    let long = return_gcd(&steps, origin, 2 * k_max, |_| true)
        .expect("a return within k_max is also a return within 2·k_max");
    if short != long {
        return Err(Error::Input(format!(
            "return-time gcd not stable: {short} at horizon {k_max}, {long} at {}; increase k_max",
            2 * k_max
        )));
    }
    Ok(short)
}

/// Gcd of the return times of the walk killed outside `ℤ×ℕ*`, started at
/// `(0, 1)`; irreducibility makes it independent of the starting state.
pub fn half_plane_return_period(measure: &JumpMeasure, k_max: usize) -> Result<u64> {
    let steps: Vec<Offset> = measure.support().collect();
    let start = Point::new(0, 1);
    let short = return_gcd(&steps, start, k_max, |p| p.y >= 1).ok_or_else(|| {
        Error::Input(format!(
            "killed walk does not return within {k_max} steps; increase k_max"
        ))
    })?;
    let long = return_gcd(&steps, start, 2 * k_max, |p| p.y >= 1)
        .expect("a return within k_max is also a return within 2·k_max");
    if short != long {
        return Err(Error::Input(format!(
            "killed return-time gcd not stable: {short} vs {long}; increase k_max"
        )));
    }
    Ok(short)
}

/// Reference measures used throughout the tests and as CLI defaults.
pub mod fixtures {
    use super::JumpMeasure;

    /// Nearest-neighbour walk with drift (0.2, 0.2); period 2.
    pub fn m1() -> JumpMeasure {
        JumpMeasure::from_triples(&[(1, 0, 0.35), (-1, 0, 0.15), (0, 1, 0.35), (0, -1, 0.15)])
            .expect("fixture is valid")
    }

    /// Walk with diagonal steps and drift (0.15, 0.15); aperiodic.
    pub fn m2() -> JumpMeasure {
        JumpMeasure::from_triples(&[
            (1, 0, 0.3),
            (0, 1, 0.3),
            (-1, -1, 0.2),
            (1, 1, 0.1),
            (-1, 0, 0.05),
            (0, -1, 0.05),
        ])
        .expect("fixture is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::{m1, m2};
    use super::*;

    #[test]
    fn rejects_malformed_measures() {
        let field = |r: Result<JumpMeasure>| match r {
            Err(Error::InvalidMeasure { field, .. }) => field,
            other => panic!("expected invalid measure, got {other:?}"),
        };
        assert_eq!(field(JumpMeasure::from_triples(&[])), "entries");
        assert_eq!(field(JumpMeasure::from_triples(&[(1, 0, 0.5), (0, 1, 0.49)])), "sum");
        assert_eq!(field(JumpMeasure::from_triples(&[(1, 0, 0.5), (1, 0, 0.5)])), "offset");
        assert_eq!(field(JumpMeasure::from_triples(&[(1, 0, 1.5), (0, 1, -0.5)])), "mass");
        assert_eq!(field(JumpMeasure::from_triples(&[(0, 0, 1.0)])), "entries");
        // The origin may carry mass as long as the walk moves.
        assert!(JumpMeasure::from_triples(&[(0, 0, 0.5), (1, 0, 0.5)]).is_ok());
    }

    #[test]
    fn fixture_means_and_periods() {
        let r1 = validate(&m1());
        assert!(r1.all_hold());
        assert!(r1.mean.max_abs_diff(Vec2::new(0.2, 0.2)) < 1e-15);
        assert_eq!(r1.period_2d, Some(2));
        let r2 = validate(&m2());
        assert!(r2.all_hold());
        assert!(r2.mean.max_abs_diff(Vec2::new(0.15, 0.15)) < 1e-15);
        assert_eq!(r2.period_2d, Some(1));
    }

    #[test]
    fn diagonal_walk_is_not_irreducible_when_killed() {
        let m = JumpMeasure::from_triples(&[(1, 1, 0.5), (-1, -1, 0.5)]).unwrap();
        let r = validate(&m);
        assert!(!r.h2_killed_irreducible);
        assert!(!r.generates_lattice);
    }

    #[test]
    fn symmetric_walk_fails_drift_condition() {
        let m = JumpMeasure::from_triples(&[(1, 0, 0.25), (-1, 0, 0.25), (0, 1, 0.25), (0, -1, 0.25)])
            .unwrap();
        let r = validate(&m);
        assert_eq!(r.mean, Vec2::ZERO);
        assert!(r.generates_lattice);
        assert!(!r.h1_irreducible);
        assert!(r.require().is_err());
    }

    #[test]
    fn even_steps_do_not_generate_the_lattice() {
        let m = JumpMeasure::from_triples(&[(2, 0, 0.25), (-2, 0, 0.25), (0, 2, 0.3), (0, -2, 0.2)])
            .unwrap();
        let r = validate(&m);
        assert!(!r.h1_irreducible);
        assert_eq!(r.period_2d, None);
    }

    #[test]
    fn period_horizon_is_validated() {
        assert!(period2d(&m1(), 4).is_err());
        assert_eq!(period2d(&m1(), 12).unwrap(), 2);
        assert_eq!(period2d(&m2(), 12).unwrap(), 1);
    }

    #[test]
    fn killed_half_plane_period_matches_free_period() {
        assert_eq!(half_plane_return_period(&m1(), 12).unwrap(), 2);
        assert_eq!(half_plane_return_period(&m2(), 12).unwrap(), 1);
    }

    #[test]
    fn swap_and_marginals() {
        let m = m2();
        assert!(m.is_swap_symmetric());
        assert_eq!(m.swapped(), m);
        let marg = m1().marginal(1);
        assert_eq!(marg, vec![(-1, 0.15), (0, 0.5), (1, 0.35)]);
        assert_eq!(m2().max_down_jump(), [1, 1]);
    }
}
