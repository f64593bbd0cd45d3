//! Green functions of the free and killed walks (and their exponential twists)
//! on truncated windows, Martin kernels, and residual checks of the exact
//! identities relating them.

use crate::boundary::{exit_distribution, ExitDistribution};
use crate::error::{Error, Result};
use crate::geometry::phi;
use crate::lattice::{JumpMeasure, Offset};
use crate::linalg::{Grid, StencilSystem};
use crate::processes::{TauClass, WalkKind, STOCHASTIC_SLACK};
use crate::vector::{Point, Vec2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default padding between the queried region and the artificial boundary.
pub const DEFAULT_MARGIN: i64 = 40;

/// Relative truncation error above which a column is flagged.
pub const TRUNCATION_WARNING: f64 = 1e-6;

/// Denominators below this cannot be trusted in a Martin kernel ratio.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// The region where values are wanted plus a margin; the solve window is the
/// padded region intersected with the walk's domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationBox {
    pub x_range: (i64, i64),
    pub y_range: (i64, i64),
    pub margin: i64,
}

impl TruncationBox {
    /// Smallest box containing `points`, padded by `margin`.
    pub fn around(points: &[Point], margin: i64) -> Self {
        let xs = points.iter().map(|p| p.x);
        let ys = points.iter().map(|p| p.y);
        Self {
            x_range: (xs.clone().min().unwrap_or(0), xs.max().unwrap_or(0)),
            y_range: (ys.clone().min().unwrap_or(0), ys.max().unwrap_or(0)),
            margin,
        }
    }

    pub fn with_margin(self, margin: i64) -> Self {
        Self { margin, ..self }
    }

    pub fn contains(&self, p: Point) -> bool {
        (self.x_range.0..=self.x_range.1).contains(&p.x) && (self.y_range.0..=self.y_range.1).contains(&p.y)
    }

    /// The solve window for a walk of the given kind.
    pub fn window(&self, kind: WalkKind) -> Result<Grid> {
        let mut lo = Point::new(self.x_range.0 - self.margin, self.y_range.0 - self.margin);
        let hi = Point::new(self.x_range.1 + self.margin, self.y_range.1 + self.margin);
        if matches!(kind, WalkKind::Quadrant | WalkKind::HalfPlane2) {
            lo.x = lo.x.max(1);
        }
        if matches!(kind, WalkKind::Quadrant | WalkKind::HalfPlane1) {
            lo.y = lo.y.max(1);
        }
        Grid::from_corners(lo, hi)
    }
}

/// Twisted step weights `μ(z) e^{a·z}`, rejecting supercritical twists.
pub(crate) fn twisted_steps(measure: &JumpMeasure, a: Vec2) -> Result<Vec<(Offset, f64)>> {
    let total = phi(measure, a);
    if total > 1.0 + STOCHASTIC_SLACK {
        return Err(Error::Input(format!(
            "twist {a} has φ(a) = {total} > 1; Green functions need φ(a) ≤ 1"
        )));
    }
    Ok(measure
        .entries()
        .iter()
        .map(|&(z, p)| (z, p * a.dot_point(z).exp()))
        .collect())
}

/// Values `z ↦ G^a(z, target)` of the twisted kernel on a window.
#[derive(Clone, Debug)]
pub struct GreenColumn {
    pub target: Point,
    pub kind: WalkKind,
    pub twist: Vec2,
    grid: Grid,
    values: Vec<f64>,
    steps: Vec<(Offset, f64)>,
    pub queried: TruncationBox,
    /// Largest change of a value on the queried region when the margin is doubled.
    pub truncation_error: f64,
    /// The same change relative to the value.
    pub relative_truncation_error: f64,
    /// Set when the relative truncation error exceeds [`TRUNCATION_WARNING`].
    pub truncation_warning: bool,
}

impl GreenColumn {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `G^a(z, target)`: zero outside the domain, `None` outside the window.
    pub fn value(&self, z: Point) -> Option<f64> {
        if !self.kind.contains(z) {
            return Some(0.0);
        }
        self.grid.index(z).map(|i| self.values[i])
    }

    /// `log G(z, target)` of the untwisted walk, using
    /// `G(z, z′) = G^a(z, z′) e^{a·(z − z′)}`.
    pub fn log_green(&self, z: Point) -> Option<f64> {
        self.value(z)
            .map(|v| v.ln() + self.twist.dot_point(z - self.target))
    }

    /// `G(z, target)` of the untwisted walk (may underflow to zero).
    pub fn green(&self, z: Point) -> Option<f64> {
        self.log_green(z).map(f64::exp)
    }

    /// Largest residual of `g(z) = δ(z, target) + Σ_s w(s) g(z+s)` over the window.
    pub fn residual_max(&self) -> f64 {
        let g = &self.grid;
        (0..g.len())
            .map(|i| {
                let z = g.point(i);
                let mut r = self.values[i] - f64::from(u8::from(z == self.target));
                for &(s, w) in &self.steps {
                    if let Some(j) = g.index(z + s) {
                        r -= w * self.values[j];
                    }
                }
                r.abs()
            })
            .fold(0.0, f64::max)
    }
}

fn solve_column(
    kind: WalkKind,
    steps: &[(Offset, f64)],
    target: Point,
    grid: Grid,
) -> Result<Vec<f64>> {
    let sys = StencilSystem::new(grid, steps)?;
    let mut b = vec![0.0; grid.len()];
    let i = grid
        .index(target)
        .ok_or_else(|| Error::Input(format!("target {target} outside the {} window", kind.name())))?;
    b[i] = 1.0;
    sys.solve(&b)
}

/// Green column of the walk of `kind` under the twisted kernel `μ(z)e^{a·z}`,
/// with its truncation error estimated by re-solving with the margin doubled.
pub fn green_column(
    measure: &JumpMeasure,
    kind: WalkKind,
    a: Vec2,
    target: Point,
    bx: &TruncationBox,
) -> Result<GreenColumn> {
    if !kind.contains(target) {
        return Err(Error::Input(format!("target {target} outside the {} domain", kind.name())));
    }
    if !bx.contains(target) {
        return Err(Error::Input(format!("target {target} outside the queried region")));
    }
    for corner in [
        Point::new(bx.x_range.0, bx.y_range.0),
        Point::new(bx.x_range.1, bx.y_range.1),
    ] {
        if !kind.contains(corner) {
            return Err(Error::Input(format!(
                "queried region corner {corner} outside the {} domain",
                kind.name()
            )));
        }
    }
    let steps = twisted_steps(measure, a)?;
    let grid = bx.window(kind)?;
    let big_grid = bx.with_margin(2 * bx.margin.max(1)).window(kind)?;
    let (values, big) = rayon::join(
        || solve_column(kind, &steps, target, grid),
        || solve_column(kind, &steps, target, big_grid),
    );
    let (values, big) = (values?, big?);
    let (mut abs_err, mut rel_err) = (0.0f64, 0.0f64);
    for x in bx.x_range.0..=bx.x_range.1 {
        for y in bx.y_range.0..=bx.y_range.1 {
            let p = Point::new(x, y);
            let (i, j) = (grid.index(p).expect("queried"), big_grid.index(p).expect("queried"));
            let d = (values[i] - big[j]).abs();
            abs_err = abs_err.max(d);
            if big[j] > 0.0 {
                rel_err = rel_err.max(d / big[j]);
            }
        }
    }
    if rel_err > TRUNCATION_WARNING {
        log::warn!(
            "{} column at {target}: relative truncation error {rel_err:e} (margin {})",
            kind.name(),
            bx.margin
        );
    }
    Ok(GreenColumn {
        target,
        kind,
        twist: a,
        grid,
        values,
        steps,
        queried: *bx,
        truncation_error: abs_err,
        relative_truncation_error: rel_err,
        truncation_warning: rel_err > TRUNCATION_WARNING,
    })
}

/// Several columns at once, solved in parallel; results follow `targets`.
pub fn green_columns(
    measure: &JumpMeasure,
    kind: WalkKind,
    a: Vec2,
    targets: &[Point],
    bx: &TruncationBox,
) -> Result<Vec<GreenColumn>> {
    targets
        .par_iter()
        .map(|&t| green_column(measure, kind, a, t, bx))
        .collect()
}

/// Martin kernel `G(z, z′)/G(z₀, z′)` of the untwisted walk from a column
/// (twisted or not).
pub fn martin_kernel(column: &GreenColumn, z: Point, z0: Point) -> Result<f64> {
    Ok(log_martin_kernel(column, z, z0)?.exp())
}

/// Logarithm of [`martin_kernel`].
pub fn log_martin_kernel(column: &GreenColumn, z: Point, z0: Point) -> Result<f64> {
    let missing = |p: Point| Error::Input(format!("point {p} outside the column window"));
    let num = column.value(z).ok_or_else(|| missing(z))?;
    let den = column.value(z0).ok_or_else(|| missing(z0))?;
    if !(den >= UNDERFLOW_FLOOR) {
        return Err(Error::Underflow { value: den });
    }
    Ok((num / den).ln() + column.twist.dot_point(z - z0))
}

/// Largest relative discrepancy of `G^a(z, z′) = G(z, z′) e^{a·(z′−z)}` over
/// the given `(z, z′)` pairs, both sides from independent solves.
pub fn check_twist_identity(
    measure: &JumpMeasure,
    kind: WalkKind,
    a: Vec2,
    bx: &TruncationBox,
    pairs: &[(Point, Point)],
) -> Result<f64> {
    const FLOOR: f64 = 1e-12;
    if !matches!(kind, WalkKind::Free | WalkKind::HalfPlane1) {
        return Err(Error::Input("twist identity is checked for free and half-plane walks".into()));
    }
    let mut by_target: BTreeMap<Point, Vec<Point>> = BTreeMap::new();
    for &(z, t) in pairs {
        by_target.entry(t).or_default().push(z);
    }
    let targets: Vec<Point> = by_target.keys().copied().collect();
    let worst: Vec<f64> = targets
        .par_iter()
        .map(|&t| -> Result<f64> {
            let twisted = green_column(measure, kind, a, t, bx)?;
            let plain = green_column(measure, kind, Vec2::ZERO, t, bx)?;
            let mut worst = 0.0f64;
            for &z in &by_target[&t] {
                let missing = || Error::Input(format!("source {z} outside the window"));
                let ga = twisted.value(z).ok_or_else(missing)?;
                let g = plain.value(z).ok_or_else(missing)?;
                let rhs = g * a.dot_point(t - z).exp();
                worst = worst.max((ga - rhs).abs() / ga.max(FLOOR));
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// Which decomposition of the quadrant Green function is checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RenewalVariant {
    /// `G₊(z,z′) = G(z,z′) − E_z(G(S(τ),z′); τ<∞)`.
    QuadrantVsFree,
    /// `G₊(z,z′) = G¹₊(z,z′) − E_z(G¹₊(S(τ),z′); τ=τ₁<τ₂)`.
    QuadrantVsHalfPlane1,
}

/// Both sides of a renewal decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Truncation uncertainty of the two sides combined.
    pub tolerance: f64,
}

/// Checks a renewal decomposition of `G₊(z, target)` (untwisted walks). The
/// right side uses the exit distribution of the quadrant walk from `z`.
pub fn check_renewal(
    measure: &JumpMeasure,
    variant: RenewalVariant,
    z: Point,
    target: Point,
    bx: &TruncationBox,
) -> Result<RenewalCheck> {
    if !WalkKind::Quadrant.contains(z) || !WalkKind::Quadrant.contains(target) {
        return Err(Error::Input("renewal check needs z and target in the open quadrant".into()));
    }
    let a = Vec2::ZERO;
    let quad = green_column(measure, WalkKind::Quadrant, a, target, bx)?;
    let exit: ExitDistribution = exit_distribution(measure, WalkKind::Quadrant, a, z, bx)?;
    let (other_kind, class_filter) = match variant {
        RenewalVariant::QuadrantVsFree => (WalkKind::Free, None),
        RenewalVariant::QuadrantVsHalfPlane1 => (WalkKind::HalfPlane1, Some(TauClass::Tau1BeforeTau2)),
    };
    // The other walk's window must contain every exit point with its margin.
    let mut pts: Vec<Point> = exit.weights.iter().map(|e| e.point).collect();
    pts.extend([z, target, Point::new(bx.x_range.0, bx.y_range.0), Point::new(bx.x_range.1, bx.y_range.1)]);
    if other_kind == WalkKind::HalfPlane1 {
        pts.retain(|p| p.y >= 1);
    }
    let other_box = TruncationBox::around(&pts, bx.margin);
    let other = green_column(measure, other_kind, a, target, &other_box)?;
    let lhs = quad.value(z).expect("z is queried");
    let mut sum = 0.0;
    for e in &exit.weights {
        if class_filter.is_some_and(|c| e.class != c) {
            continue;
        }
        sum += e.weight * other.value(e.point).expect("exit points are queried");
    }
    let rhs = other.value(z).expect("z is queried") - sum;
    let g_max = other.value(target).unwrap_or(1.0).max(1.0);
    let tolerance = quad.truncation_error
        + other.truncation_error * (1.0 + exit.total_mass())
        + exit.truncation_leak * g_max;
    Ok(RenewalCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::fixtures::m1;

    #[test]
    fn windows_respect_domains() {
        let bx = TruncationBox::around(&[Point::new(1, 1), Point::new(5, 3)], 10);
        let q = bx.window(WalkKind::Quadrant).unwrap();
        assert_eq!((q.lo(), q.hi()), (Point::new(1, 1), Point::new(15, 13)));
        let h = bx.window(WalkKind::HalfPlane1).unwrap();
        assert_eq!((h.lo(), h.hi()), (Point::new(-9, 1), Point::new(15, 13)));
        let f = bx.window(WalkKind::Free).unwrap();
        assert_eq!(f.lo(), Point::new(-9, -9));
    }

    #[test]
    fn column_basic_contract() {
        let bx = TruncationBox::around(&[Point::new(1, 1), Point::new(6, 6)], 20);
        let col = green_column(&m1(), WalkKind::Quadrant, Vec2::ZERO, Point::new(4, 4), &bx).unwrap();
        assert!(col.value(Point::new(4, 4)).unwrap() >= 1.0);
        assert_eq!(col.value(Point::new(0, 3)), Some(0.0));
        assert!(col.residual_max() <= 1e-11);
        assert!((martin_kernel(&col, Point::new(2, 2), Point::new(2, 2)).unwrap() - 1.0).abs() < 1e-15);
        assert!(green_column(&m1(), WalkKind::Quadrant, Vec2::new(1.0, 1.0), Point::new(4, 4), &bx).is_err());
        assert!(green_column(&m1(), WalkKind::Quadrant, Vec2::ZERO, Point::new(40, 4), &bx).is_err());
    }
}
