//! Exit distributions of killed walks, exponentially weighted boundary
//! functionals, and the positive harmonic functions `h_a` and `h¹` assembled
//! from them.
//!
//! Every functional is computed for the twisted walk (kernel `μ(z)e^{a·z}`),
//! whose values are probabilities or bounded expectations, and converted back
//! with the factor `e^{a·z}` only at the end. Far sides of a truncation window
//! are closed with rigorous lower and upper values of the functional, so each
//! result comes with a certified bracket.

use crate::error::{Error, Result};
use crate::geometry::{a_of_q, classify, line_roots, phi, Direction, SpectralPoint, Tolerances};
use crate::green::{twisted_steps, TruncationBox};
use crate::lattice::{JumpMeasure, Offset};
use crate::linalg::{Grid, StencilSystem};
use crate::processes::{TauClass, WalkKind, STOCHASTIC_SLACK};
use crate::vector::{Point, Vec2};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default acceptance threshold for the relative far-boundary bracket.
pub const BRACKET_TOLERANCE: f64 = 1e-7;

/// Default largest margin tried when widening a window to close a bracket.
pub const MAX_MARGIN: i64 = 480;

/// Mass at one exit point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitWeight {
    pub point: Point,
    pub class: TauClass,
    /// `P^a_z(S(τ) = point)` for the twisted walk, i.e. `E_z(e^{a·(S(τ)−z)}; S(τ) = point)`.
    pub weight: f64,
}

/// Exit law of a killed twisted walk from one source, on a truncation window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitDistribution {
    pub source: Point,
    pub kind: WalkKind,
    pub twist: Vec2,
    /// Exit points in lexicographic order.
    pub weights: Vec<ExitWeight>,
    /// Mass removed by the per-step killing `1 − φ(a)` before exit.
    pub survival_mass: f64,
    /// Mass that reached the artificial far boundary of the window.
    pub truncation_leak: f64,
    /// Far-boundary points with the mass that reached them.
    pub leak: Vec<(Point, f64)>,
    /// Certified bracket on `P^a_z(τ < ∞)`, closing the leaked mass with
    /// exit-probability bounds.
    pub exit_bracket: (f64, f64),
    /// Set when the leak exceeds the requested tolerance.
    pub leak_warning: bool,
}

impl ExitDistribution {
    /// Total exit mass inside the window.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().map(|e| e.weight).sum()
    }

    /// `mass + survival + leak − 1`; zero up to solver error.
    pub fn conservation_defect(&self) -> f64 {
        self.total_mass() + self.survival_mass + self.truncation_leak - 1.0
    }
}

/// The rigorous bounds on a twisted walk's exit behaviour used to close far
/// sides of truncation windows.
#[derive(Clone, Debug)]
pub struct ExitClosure {
    /// Per coordinate, the decay rate `θ_i`: the largest `s ≥ 0` with `φ(a − s e_i) = 1`.
    /// `None` when the coordinate never decreases.
    theta: [Option<f64>; 2],
    down: [i64; 2],
}

impl ExitClosure {
    pub fn new(measure: &JumpMeasure, a: Vec2) -> Result<Self> {
        let down = measure.max_down_jump();
        let mut theta = [None, None];
        for (i, th) in theta.iter_mut().enumerate() {
            if down[i] == 0 {
                continue;
            }
            let dir = if i == 0 { Vec2::new(-1.0, 0.0) } else { Vec2::new(0.0, -1.0) };
            *th = Some(match line_roots(measure, a, dir)? {
                Some(roots) => roots.1.max(0.0),
                // The line only touches D at a: the coordinate has zero drift.
                None if phi(measure, a) <= 1.0 + STOCHASTIC_SLACK => 0.0,
                None => return Err(Error::Input(format!("twist {a} lies outside D"))),
            });
        }
        Ok(Self { theta, down })
    }

    /// Bounds on the probability that coordinate `i` of the twisted walk from
    /// level `v ≥ 1` ever reaches `≤ 0`. The exponential martingale
    /// `e^{−θ S_i(t)}` and overshoot at most `J_i − 1` give
    /// `[e^{−θ(v+J_i−1)}, e^{−θ v}]`.
    pub fn coordinate_exit(&self, i: usize, v: i64) -> (f64, f64) {
        match self.theta[i] {
            None => (0.0, 0.0),
            Some(th) => (
                (-th * (v + self.down[i] - 1) as f64).exp(),
                (-th * v as f64).exp(),
            ),
        }
    }

    /// Bounds on the exit probability of a walk of `kind` from `v`.
    pub fn exit_probability(&self, kind: WalkKind, v: Point) -> (f64, f64) {
        match kind {
            WalkKind::Free => (0.0, 0.0),
            WalkKind::HalfPlane1 => self.coordinate_exit(1, v.y),
            WalkKind::HalfPlane2 => self.coordinate_exit(0, v.x),
            WalkKind::Quadrant => {
                let (l1, u1) = self.coordinate_exit(0, v.x);
                let (l2, u2) = self.coordinate_exit(1, v.y);
                (l1.max(l2), (u1 + u2).min(1.0))
            }
        }
    }
}

/// Upper envelope of `E^a_v(S₂(τ); τ = τ₁ < τ₂)` at the critical twist
/// `a = a(1,0)`: for `0 < δ < a₂'' − a₂'`, with `â₂ = a₂ + δ` and `â₁` the left
/// solution of `φ(·, â₂) = 1`, the value is at most `δ⁻¹ e^{(â−a)·v}`.
#[derive(Clone, Debug)]
pub struct CriticalEnvelope {
    /// `(δ, â − a)` over a grid of admissible `δ`, including half the gap.
    table: Vec<(f64, Vec2)>,
}

impl CriticalEnvelope {
    pub fn new(measure: &JumpMeasure, a10: Vec2, a01: Vec2) -> Result<Self> {
        let gap = a01.y - a10.y;
        if !(gap > 0.0) {
            return Err(Error::Hypothesis(format!(
                "critical ordinates not ordered: a(1,0)₂ = {}, a(0,1)₂ = {}",
                a10.y, a01.y
            )));
        }
        let mut table = Vec::new();
        for k in 1..32 {
            let delta = gap * k as f64 / 32.0;
            let base = Vec2::new(a10.x, a10.y + delta);
            if let Some((lo, _)) = line_roots(measure, base, Vec2::new(1.0, 0.0))? {
                table.push((delta, Vec2::new(lo, delta)));
            }
        }
        if table.is_empty() {
            return Err(Error::Hypothesis("no admissible δ for the critical envelope".into()));
        }
        Ok(Self { table })
    }

    /// The half-gap `δ` and its `â − a`.
    pub fn half_gap(&self) -> (f64, Vec2) {
        self.table[self.table.len() / 2]
    }

    /// `min_δ δ⁻¹ e^{(â−a)·v}`.
    pub fn bound(&self, v: Point) -> f64 {
        self.table
            .iter()
            .map(|&(d, shift)| shift.dot_point(v).exp() / d)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Solution of a backward functional with its far-boundary bracket.
#[derive(Clone, Debug)]
pub struct BracketedSolution {
    pub grid: Grid,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BracketedSolution {
    pub fn get(&self, z: Point) -> Option<(f64, f64)> {
        self.grid.index(z).map(|i| (self.lo[i], self.hi[i]))
    }
}

/// Solves `u(z) = Σ_s w(s) u(z+s)` on `grid`, with `u = exit_value` outside the
/// domain of `kind` and `u ∈ [closure.0, closure.1]` on the far side (inside the
/// domain but outside the grid). Returns the solutions for both closures,
/// which bracket the true functional by monotonicity of the kernel.
pub fn backward_functional(
    steps: &[(Offset, f64)],
    kind: WalkKind,
    grid: Grid,
    exit_value: &dyn Fn(Point) -> f64,
    closure: &dyn Fn(Point) -> (f64, f64),
) -> Result<BracketedSolution> {
    let sys = StencilSystem::new(grid, steps)?;
    let n = grid.len();
    let (mut b_lo, mut b_hi) = (vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let z = grid.point(i);
        for &(s, w) in steps {
            let t = z + s;
            if !kind.contains(t) {
                let v = w * exit_value(t);
                b_lo[i] += v;
                b_hi[i] += v;
            } else if !grid.contains(t) {
                let (lo, hi) = closure(t);
                b_lo[i] += w * lo;
                b_hi[i] += w * hi;
            }
        }
    }
    let mut sols = sys.solve_many(&[b_lo, b_hi])?;
    let hi = sols.pop().expect("two columns");
    let lo = sols.pop().expect("two columns");
    Ok(BracketedSolution { grid, lo, hi })
}

/// Exit distribution of the twisted walk of `kind` from `z` on the window of
/// `bx`, by one adjoint solve for the occupation measure.
pub fn exit_distribution(
    measure: &JumpMeasure,
    kind: WalkKind,
    a: Vec2,
    z: Point,
    bx: &TruncationBox,
) -> Result<ExitDistribution> {
    exit_distribution_with_tolerance(measure, kind, a, z, bx, 1e-7)
}

pub fn exit_distribution_with_tolerance(
    measure: &JumpMeasure,
    kind: WalkKind,
    a: Vec2,
    z: Point,
    bx: &TruncationBox,
    leak_tolerance: f64,
) -> Result<ExitDistribution> {
    Ok(exit_distributions(measure, kind, a, &[z], bx, leak_tolerance)?
        .pop()
        .expect("one source"))
}

/// Exit distributions from several sources sharing one factorisation.
pub fn exit_distributions(
    measure: &JumpMeasure,
    kind: WalkKind,
    a: Vec2,
    sources: &[Point],
    bx: &TruncationBox,
    leak_tolerance: f64,
) -> Result<Vec<ExitDistribution>> {
    let steps = twisted_steps(measure, a)?;
    let grid = bx.window(kind)?;
    let mut rhs = Vec::with_capacity(sources.len());
    for &z in sources {
        if !kind.contains(z) {
            return Err(Error::Input(format!("source {z} outside the {} domain", kind.name())));
        }
        let src = grid
            .index(z)
            .ok_or_else(|| Error::Input(format!("source {z} outside the window")))?;
        let mut e = vec![0.0; grid.len()];
        e[src] = 1.0;
        rhs.push(e);
    }
    let sys = StencilSystem::new(grid, &steps)?;
    let occupations = sys.solve_adjoint_many(&rhs)?;
    let closure = ExitClosure::new(measure, a)?;
    let total_weight: f64 = steps.iter().map(|s| s.1).sum();
    let class = |w: Point| match kind {
        WalkKind::HalfPlane1 => TauClass::Tau2NotAfterTau1,
        WalkKind::HalfPlane2 => TauClass::Tau1BeforeTau2,
        _ => TauClass::of_exit(w),
    };
    Ok(sources
        .iter()
        .zip(occupations)
        .map(|(&z, occupation)| {
            let mut exits: BTreeMap<Point, f64> = BTreeMap::new();
            let mut leak: BTreeMap<Point, f64> = BTreeMap::new();
            let mut visits = 0.0;
            for (i, &nu) in occupation.iter().enumerate() {
                visits += nu;
                let p = grid.point(i);
                for &(s, w) in &steps {
                    let t = p + s;
                    if !kind.contains(t) {
                        *exits.entry(t).or_default() += nu * w;
                    } else if !grid.contains(t) {
                        *leak.entry(t).or_default() += nu * w;
                    }
                }
            }
            let weights: Vec<ExitWeight> = exits
                .into_iter()
                .map(|(point, weight)| ExitWeight {
                    point,
                    class: class(point),
                    weight,
                })
                .collect();
            let leak: Vec<(Point, f64)> = leak.into_iter().collect();
            let truncation_leak: f64 = leak.iter().map(|l| l.1).sum();
            let mass: f64 = weights.iter().map(|e| e.weight).sum();
            let (mut lo, mut hi) = (mass, mass);
            for &(v, m) in &leak {
                let (l, u) = closure.exit_probability(kind, v);
                lo += m * l;
                hi += m * u;
            }
            ExitDistribution {
                source: z,
                kind,
                twist: a,
                weights,
                survival_mass: (1.0 - total_weight).max(0.0) * visits,
                truncation_leak,
                leak,
                exit_bracket: (lo, hi.min(1.0)),
                leak_warning: truncation_leak > leak_tolerance,
            }
        })
        .collect())
}

/// Function of the exit point integrated by [`boundary_expectation`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WeightFn {
    One,
    S1,
    S2,
    AbsS2,
    /// `e^{δ S₂}`.
    ExpExtra(f64),
}

impl WeightFn {
    pub fn eval(self, w: Point) -> f64 {
        match self {
            WeightFn::One => 1.0,
            WeightFn::S1 => w.x as f64,
            WeightFn::S2 => w.y as f64,
            WeightFn::AbsS2 => (w.y as f64).abs(),
            WeightFn::ExpExtra(d) => (d * w.y as f64).exp(),
        }
    }
}

/// Event restricting the exit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitEvent {
    TauLtInf,
    Tau1BeforeTau2,
    Tau2BeforeTau1,
}

impl ExitEvent {
    fn admits(self, c: TauClass) -> bool {
        match self {
            ExitEvent::TauLtInf => true,
            ExitEvent::Tau1BeforeTau2 => c == TauClass::Tau1BeforeTau2,
            ExitEvent::Tau2BeforeTau1 => c == TauClass::Tau2NotAfterTau1,
        }
    }
}

/// `E_z(f(S(τ)) e^{a·(S(τ)−z)}; event)`: the functional in units of `e^{a·z}`.
pub fn boundary_expectation_twisted(exit: &ExitDistribution, f: WeightFn, event: ExitEvent) -> f64 {
    exit.weights
        .iter()
        .filter(|e| event.admits(e.class))
        .map(|e| f.eval(e.point) * e.weight)
        .sum()
}

/// `E_z(f(S(τ)) e^{a·S(τ)}; event)`.
pub fn boundary_expectation(exit: &ExitDistribution, f: WeightFn, event: ExitEvent) -> f64 {
    boundary_expectation_twisted(exit, f, event) * exit.twist.dot_point(exit.source).exp()
}

/// Branch of the harmonic-function formula.
pub type Branch = Direction;

/// Options of the harmonic-function solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicOptions {
    /// Required relative bracket width.
    pub bracket_tol: f64,
    /// Initial margin around the queried window.
    pub margin: i64,
    /// Largest margin tried.
    pub max_margin: i64,
}

impl Default for HarmonicOptions {
    fn default() -> Self {
        Self {
            bracket_tol: BRACKET_TOLERANCE,
            margin: 60,
            max_margin: MAX_MARGIN,
        }
    }
}

/// A positive harmonic function of the killed walk on a window of the quadrant
/// (or of `ℤ×ℕ*` for `h¹`).
#[derive(Clone, Debug)]
pub struct HarmonicFunction {
    pub a: SpectralPoint,
    pub branch: Branch,
    /// Domain on which the function is harmonic.
    pub kind: WalkKind,
    /// Queried region; the solve window extends it by the final margin.
    pub region: TruncationBox,
    grid: Grid,
    /// Twisted values `h(z) e^{−a·z}`: lower and upper far-boundary closures.
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Largest `(h_hi − h_lo)/h_hi` over the queried region.
    pub bracket_width: f64,
    pub bracket_warning: bool,
    /// Set when the values were computed for the coordinate-swapped measure.
    swapped: bool,
}

impl HarmonicFunction {
    fn local(&self, z: Point) -> Point {
        if self.swapped {
            z.swap()
        } else {
            z
        }
    }

    /// Twisted value `h(z) e^{−a·z}` (midpoint of the bracket); zero outside
    /// the domain, `None` outside the solve window.
    pub fn twisted_value(&self, z: Point) -> Option<f64> {
        if !self.kind.contains(z) {
            return Some(0.0);
        }
        self.grid
            .index(self.local(z))
            .map(|i| 0.5 * (self.lo[i] + self.hi[i]))
    }

    /// `h(z)`.
    pub fn value(&self, z: Point) -> Option<f64> {
        self.twisted_value(z)
            .map(|v| v * self.a.a.dot_point(z).exp())
    }

    /// `log h(z)`, computed without overflow.
    pub fn log_value(&self, z: Point) -> Option<f64> {
        self.twisted_value(z).map(|v| v.ln() + self.a.a.dot_point(z))
    }

    /// Lower and upper values of `h(z)`.
    pub fn bracket(&self, z: Point) -> Option<(f64, f64)> {
        if !self.kind.contains(z) {
            return Some((0.0, 0.0));
        }
        let f = self.a.a.dot_point(z).exp();
        self.grid
            .index(self.local(z))
            .map(|i| (self.lo[i] * f, self.hi[i] * f))
    }

    /// Whether `z` and its whole stencil lie inside the solve window or
    /// outside the domain, so the one-step equation can be checked there.
    pub fn is_trusted(&self, z: Point, measure: &JumpMeasure) -> bool {
        let ok = |p: Point| !self.kind.contains(p) || self.grid.contains(self.local(p));
        ok(z) && measure.support().all(|s| ok(z + s))
    }
}

/// The harmonic function `h_{a(q)}` of the quadrant-killed walk on the queried
/// region, for `q` in the closed positive quarter circle:
///
/// * interior `q`: `h(z) = e^{a·z} − E_z(e^{a·S(τ)}; τ<∞)`;
/// * `q = (1,0)`: `h(z) = x₂e^{a·z} − E_z(S₂(τ)e^{a·S(τ)}; τ<∞)`;
/// * `q = (0,1)`: `h(z) = x₁e^{a·z} − E_z(S₁(τ)e^{a·S(τ)}; τ<∞)`.
///
/// The margin grows until the relative bracket width meets the tolerance.
pub fn h_function(
    measure: &JumpMeasure,
    q: Vec2,
    region: &TruncationBox,
    opts: &HarmonicOptions,
) -> Result<HarmonicFunction> {
    if !(q.x >= -1e-15 && q.y >= -1e-15 && q.norm() > 0.0) {
        return Err(Error::Input(format!("direction {q} is not in the positive quarter")));
    }
    let branch = classify(q, &Tolerances::default());
    if branch == Direction::Critical01 {
        // Exchange the coordinates and use the (1,0) formula.
        let sw = measure.swapped();
        let region_sw = TruncationBox {
            x_range: region.y_range,
            y_range: region.x_range,
            margin: region.margin,
        };
        let mut h = h_function(&sw, Vec2::new(1.0, 0.0), &region_sw, opts)?;
        h.a = a_of_q(measure, Vec2::new(0.0, 1.0))?;
        h.branch = Direction::Critical01;
        h.region = *region;
        h.swapped = true;
        return Ok(h);
    }
    for corner in [
        Point::new(region.x_range.0, region.y_range.0),
        Point::new(region.x_range.1, region.y_range.1),
    ] {
        if !WalkKind::Quadrant.contains(corner) {
            return Err(Error::Input(format!("region corner {corner} outside the quadrant")));
        }
    }
    let sp = a_of_q(measure, q)?;
    let a = sp.a;
    let steps = twisted_steps(measure, a)?;
    let closure = ExitClosure::new(measure, a)?;
    let envelope = if branch == Direction::Critical10 {
        Some(CriticalEnvelope::new(measure, a, a_of_q(measure, Vec2::new(0.0, 1.0))?.a)?)
    } else {
        None
    };
    let jump2 = measure.max_down_jump()[1];
    let mut margin = opts.margin.max(1);
    loop {
        let bx = region.with_margin(margin);
        let grid = bx.window(WalkKind::Quadrant)?;
        // Twisted functional u and the map u ↦ ĥ = h e^{−a·z}.
        let sol = match &envelope {
            None => backward_functional(
                &steps,
                WalkKind::Quadrant,
                grid,
                &|_| 1.0,
                &|v| closure.exit_probability(WalkKind::Quadrant, v),
            )?,
            Some(env) => backward_functional(
                &steps,
                WalkKind::Quadrant,
                grid,
                &|w| w.y as f64,
                &|v| ((1 - jump2) as f64, env.bound(v)),
            )?,
        };
        let n = grid.len();
        let (mut lo, mut hi) = (vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let base = match branch {
                Direction::Interior => 1.0,
                _ => grid.point(i).y as f64,
            };
            // ĥ decreases in u: the upper closure of u gives the lower ĥ.
            lo[i] = base - sol.hi[i];
            hi[i] = base - sol.lo[i];
        }
        let mut width = 0.0f64;
        for x in region.x_range.0..=region.x_range.1 {
            for y in region.y_range.0..=region.y_range.1 {
                let i = grid.index(Point::new(x, y)).expect("region inside window");
                width = width.max((hi[i] - lo[i]) / hi[i].abs().max(f64::MIN_POSITIVE));
            }
        }
        let done = width <= opts.bracket_tol;
        if done || margin >= opts.max_margin {
            if !done {
                log::warn!("h bracket {width:e} above {:e} at margin {margin}", opts.bracket_tol);
            }
            return Ok(HarmonicFunction {
                a: sp,
                branch,
                kind: WalkKind::Quadrant,
                region: bx,
                grid,
                lo,
                hi,
                bracket_width: width,
                bracket_warning: !done,
                swapped: false,
            });
        }
        margin = (margin * 3 / 2).min(opts.max_margin);
    }
}

/// `|Σ_w μ(w) h(z+w) − h(z)|` for the killed walk (`h` vanishes off the domain).
pub fn harmonicity_residual(h: &HarmonicFunction, measure: &JumpMeasure, z: Point) -> Result<f64> {
    if !h.is_trusted(z, measure) {
        return Err(Error::Input(format!("stencil of {z} leaves the trusted window")));
    }
    let hz = h.value(z).expect("trusted");
    let mut s = 0.0;
    for &(w, p) in measure.entries() {
        s += p * h.value(z + w).expect("trusted");
    }
    Ok((s - hz).abs())
}

/// Same residual in twisted units, `|Σ_w μ(w)e^{a·w} ĥ(z+w) − ĥ(z)|`, which
/// stays of order one where `h` itself is exponentially large or small.
pub fn twisted_harmonicity_residual(h: &HarmonicFunction, measure: &JumpMeasure, z: Point) -> Result<f64> {
    if !h.is_trusted(z, measure) {
        return Err(Error::Input(format!("stencil of {z} leaves the trusted window")));
    }
    let hz = h.twisted_value(z).expect("trusted");
    let mut s = 0.0;
    for &(w, p) in measure.entries() {
        s += p * h.a.a.dot_point(w).exp() * h.twisted_value(z + w).expect("trusted");
    }
    Ok((s - hz).abs())
}

/// Defect of the one-step identity `Σ_w μ(w)(x₂+w₂)e^{a·(z+w)} = x₂e^{a·z}` of
/// the free walk at `a = a(1,0)`, in units of `e^{a·z}`: the process
/// `S₂(t)e^{a·S(t)}` is a martingale because `φ(a) = 1` and `∂φ/∂a₂(a) = 0`.
pub fn free_martingale_defect(measure: &JumpMeasure, z: Point) -> Result<f64> {
    let a = a_of_q(measure, Vec2::new(1.0, 0.0))?.a;
    let x2 = z.y as f64;
    let s: f64 = measure
        .entries()
        .iter()
        .map(|&(w, p)| p * (x2 + w.y as f64) * a.dot_point(w).exp())
        .sum();
    Ok((s - x2).abs())
}

/// Twisted values `h_{a(1,0)}(z)e^{−a·z}` on `region`, assembled from `h¹` as
/// `h¹(z) − E_z(h¹(S(τ)); τ = τ₁ < τ₂)`: the quadrant walk exits either
/// below the first axis, where `h¹` vanishes, or through `x₁ ≤ 0` into the
/// domain of `h¹`.
pub fn half_plane_assembly(measure: &JumpMeasure, region: &TruncationBox, margin: i64) -> Result<Vec<(Point, f64)>> {
    if region.x_range.0 < 1 || region.y_range.0 < 1 {
        return Err(Error::Input("assembly region must lie in the open quadrant".into()));
    }
    let a = a_of_q(measure, Vec2::new(1.0, 0.0))?.a;
    let jd = measure.max_down_jump();
    let points: Vec<Point> = (region.x_range.0..=region.x_range.1)
        .flat_map(|x| (region.y_range.0..=region.y_range.1).map(move |y| Point::new(x, y)))
        .collect();
    let bx = TruncationBox::around(&points, margin);
    // h¹ is needed at the source and at every exit point left of the axis.
    let h1_region = TruncationBox {
        x_range: (1 - jd[0], region.x_range.1),
        y_range: (1, region.y_range.1 + margin),
        margin: 1,
    };
    let h1 = h1_function(measure, &h1_region)?;
    let h1v = |p: Point| {
        h1.twisted_value(p)
            .ok_or_else(|| Error::Input(format!("h¹ not available at {p}")))
    };
    let exits = exit_distributions(measure, WalkKind::Quadrant, a, &points, &bx, f64::INFINITY)?;
    let out: Vec<Result<(Point, f64)>> = points
        .iter()
        .zip(&exits)
        .map(|(&z, exit)| {
            let mut v = h1v(z)?;
            for e in &exit.weights {
                if e.class == TauClass::Tau1BeforeTau2 {
                    v -= e.weight * h1v(e.point)?;
                }
            }
            Ok((z, v))
        })
        .collect();
    out.into_iter().collect()
}

/// Twisted law of the second coordinate at the critical twist `a(1,0)`: a
/// stochastic, zero-mean walk on ℤ.
pub fn vertical_marginal(measure: &JumpMeasure, a: Vec2) -> Vec<(Offset, f64)> {
    let mut out: BTreeMap<i64, f64> = BTreeMap::new();
    for &(z, p) in measure.entries() {
        *out.entry(z.y).or_default() += p * a.dot_point(z).exp();
    }
    out.into_iter().map(|(k, w)| (Point::new(0, k), w)).collect()
}

/// Strip height used for one-dimensional solves in the vertical direction.
const STRIP_HEIGHT: i64 = 20_000;

/// The positive harmonic function `h¹(z) = x₂e^{a·z} − E_z(S₂(τ₂)e^{a·S(τ₂)}; τ₂<∞)`
/// of the walk killed outside `ℤ×ℕ*`, `a = a(1,0)`, on the queried region.
///
/// The functional depends on `x₂` only: `S₂` under the twisted kernel is the
/// zero-mean walk [`vertical_marginal`], so it is solved on a one-dimensional
/// strip, closed above by the overshoot bounds `[1 − J₂, 0]`.
pub fn h1_function(measure: &JumpMeasure, region: &TruncationBox) -> Result<HarmonicFunction> {
    if region.y_range.0 < 1 {
        return Err(Error::Input("h¹ region must lie in ℤ×ℕ*".into()));
    }
    let sp = a_of_q(measure, Vec2::new(1.0, 0.0))?;
    let a = sp.a;
    let marg = vertical_marginal(measure, a);
    let jump2 = measure.max_down_jump()[1];
    let top = region.y_range.1 + STRIP_HEIGHT;
    let strip = Grid::from_corners(Point::new(0, 1), Point::new(0, top))?;
    let f = backward_functional(
        &marg,
        WalkKind::HalfPlane1,
        strip,
        &|w| w.y as f64,
        &|_| ((1 - jump2) as f64, 0.0),
    )?;
    let bx = region.with_margin(region.margin.max(1));
    let grid = bx.window(WalkKind::HalfPlane1)?;
    let n = grid.len();
    let (mut lo, mut hi) = (vec![0.0; n], vec![0.0; n]);
    let mut width = 0.0f64;
    for i in 0..n {
        let z = grid.point(i);
        let (u_lo, u_hi) = f.get(Point::new(0, z.y)).expect("strip covers the window");
        lo[i] = z.y as f64 - u_hi;
        hi[i] = z.y as f64 - u_lo;
        if region.contains(z) {
            width = width.max((hi[i] - lo[i]) / hi[i]);
        }
    }
    Ok(HarmonicFunction {
        a: sp,
        branch: Direction::Critical10,
        kind: WalkKind::HalfPlane1,
        region: bx,
        grid,
        lo,
        hi,
        bracket_width: width,
        bracket_warning: width > BRACKET_TOLERANCE,
        swapped: false,
    })
}

/// One value of the level-crossing profile with its stability check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCrossing {
    pub k: i64,
    /// Probability with the strip truncated `Δ` levels above the target.
    pub value: f64,
    /// The same with `2Δ`.
    pub value_wide: f64,
}

/// Headroom above the target level in [`level_crossing_profile`].
pub const LEVEL_HEADROOM: i64 = 60;

/// For each `k`, `E_{(0,k)}(e^{a·(S(τ̂)−(0,k))}; τ̂ < τ₂)` with `a = a(1,0)` and
/// `τ̂` the first time the second coordinate equals `k + 1`: the probability
/// that the twisted vertical walk from `k` hits `k + 1` exactly before
/// reaching `≤ 0`. Computed as `G(k, k+1)/G(k+1, k+1)` for the walk killed
/// outside `[1, k+1+Δ]`, with a re-solve at `2Δ`.
pub fn level_crossing_profile(measure: &JumpMeasure, k_list: &[i64]) -> Result<Vec<LevelCrossing>> {
    let a = a_of_q(measure, Vec2::new(1.0, 0.0))?.a;
    let marg = vertical_marginal(measure, a);
    let hit = |k: i64, headroom: i64| -> Result<f64> {
        let grid = Grid::from_corners(Point::new(0, 1), Point::new(0, k + 1 + headroom))?;
        let sys = StencilSystem::new(grid, &marg)?;
        let mut e = vec![0.0; grid.len()];
        let t = grid.index(Point::new(0, k + 1)).expect("target in strip");
        e[t] = 1.0;
        let g = sys.solve(&e)?;
        Ok(g[grid.index(Point::new(0, k)).expect("start in strip")] / g[t])
    };
    k_list
        .iter()
        .map(|&k| {
            if k < 1 {
                return Err(Error::Input(format!("level {k} must be positive")));
            }
            let value = hit(k, LEVEL_HEADROOM)?;
            let value_wide = hit(k, 2 * LEVEL_HEADROOM)?;
            if (value - value_wide).abs() > 1e-9 {
                log::warn!("level-crossing value at k={k} moved by {:e} under widening", (value - value_wide).abs());
            }
            Ok(LevelCrossing { k, value, value_wide })
        })
        .collect()
}
