//! Transition kernels of the free walk, the walks killed outside the quadrant
//! or a half-plane, their exponential twists, and path simulation.

use crate::error::{Error, Result};
use crate::geometry::phi;
use crate::lattice::{JumpMeasure, Offset};
use crate::vector::{Point, Vec2};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Tolerance above one accepted for the total weight of a kernel that must be
/// substochastic (it absorbs rounding in `a(q)`).
pub const STOCHASTIC_SLACK: f64 = 1e-12;

/// The state space of a walk: the walk is killed on leaving it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WalkKind {
    /// ℤ².
    Free,
    /// ℕ*×ℕ*.
    Quadrant,
    /// ℤ×ℕ*.
    HalfPlane1,
    /// ℕ*×ℤ.
    HalfPlane2,
}

impl WalkKind {
    pub fn contains(self, p: Point) -> bool {
        match self {
            WalkKind::Free => true,
            WalkKind::Quadrant => p.x >= 1 && p.y >= 1,
            WalkKind::HalfPlane1 => p.y >= 1,
            WalkKind::HalfPlane2 => p.x >= 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WalkKind::Free => "free",
            WalkKind::Quadrant => "quadrant",
            WalkKind::HalfPlane1 => "halfplane1",
            WalkKind::HalfPlane2 => "halfplane2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(WalkKind::Free),
            "quadrant" => Ok(WalkKind::Quadrant),
            "halfplane1" => Ok(WalkKind::HalfPlane1),
            "halfplane2" => Ok(WalkKind::HalfPlane2),
            other => Err(Error::Input(format!(
                "unknown walk kind `{other}` (expected free, quadrant, halfplane1, halfplane2)"
            ))),
        }
    }
}

/// Which coordinate constraint an exit from the quadrant violated.
///
/// `τ₁` is the exit time of the first coordinate from ℕ*, `τ₂` that of the
/// second. A single step violating both is classified as `τ₂ ≤ τ₁`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TauClass {
    /// `τ = τ₁ < τ₂`: the exit point has `x ≤ 0 < y`.
    Tau1BeforeTau2,
    /// `τ = τ₂ ≤ τ₁`: the exit point has `y ≤ 0`.
    Tau2NotAfterTau1,
}

impl TauClass {
    /// Class of an exit point outside the quadrant.
    pub fn of_exit(w: Point) -> TauClass {
        if w.y <= 0 {
            TauClass::Tau2NotAfterTau1
        } else {
            TauClass::Tau1BeforeTau2
        }
    }
}

/// The kernel `μ(z) e^{a·z}`; substochastic when `φ(a) < 1`.
#[derive(Clone, Debug)]
pub struct TwistedKernel {
    base: JumpMeasure,
    a: Vec2,
    steps: Vec<(Offset, f64)>,
    cumulative: Vec<f64>,
    total: f64,
}

impl TwistedKernel {
    pub fn new(measure: &JumpMeasure, a: Vec2) -> Self {
        let steps: Vec<(Offset, f64)> = measure
            .entries()
            .iter()
            .map(|&(z, p)| (z, p * a.dot_point(z).exp()))
            .collect();
        let mut acc = 0.0;
        let cumulative = steps
            .iter()
            .map(|s| {
                acc += s.1;
                acc
            })
            .collect();
        Self {
            base: measure.clone(),
            a,
            steps,
            cumulative,
            total: acc,
        }
    }

    pub fn base(&self) -> &JumpMeasure {
        &self.base
    }

    pub fn twist(&self) -> Vec2 {
        self.a
    }

    /// Step weights `μ(z) e^{a·z}`.
    pub fn steps(&self) -> &[(Offset, f64)] {
        &self.steps
    }

    /// Total weight, equal to `φ(a)`.
    pub fn total_weight(&self) -> f64 {
        self.total
    }

    /// Per-step killing probability `1 − φ(a)` (zero when `φ(a) ≥ 1`).
    pub fn deficit(&self) -> f64 {
        (1.0 - self.total).max(0.0)
    }

    /// Mean displacement `Σ z μ(z) e^{a·z}`.
    pub fn mean(&self) -> Vec2 {
        self.steps
            .iter()
            .fold(Vec2::ZERO, |acc, &(z, w)| acc + z.as_vec() * w)
    }

    pub fn is_substochastic(&self) -> bool {
        self.total <= 1.0 + STOCHASTIC_SLACK
    }

    fn require_substochastic(&self) -> Result<()> {
        if self.is_substochastic() {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "twisted kernel has total weight φ(a) = {} > 1; simulation needs φ(a) ≤ 1",
                self.total
            )))
        }
    }

    /// Draws one step; `None` means the walk is killed (probability `1 − φ(a)`).
    pub fn sample_step<R: RngExt + ?Sized>(&self, rng: &mut R) -> Option<Offset> {
        let u: f64 = rng.random();
        if u >= self.total {
            return None;
        }
        let i = self.cumulative.partition_point(|&c| c <= u);
        Some(self.steps[i.min(self.steps.len() - 1)].0)
    }
}

/// `twisted_kernel(μ, a)`.
pub fn twisted_kernel(measure: &JumpMeasure, a: Vec2) -> TwistedKernel {
    TwistedKernel::new(measure, a)
}

/// Why a simulated path stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Left the domain through the first-coordinate constraint only.
    HitTau1,
    /// Left the domain through the second-coordinate constraint (ties included).
    HitTau2,
    /// Still alive at the horizon.
    Horizon,
    /// Removed by the killing event of a substochastic kernel.
    KilledMass,
}

/// A simulated path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    /// Visited states, starting with `z0`; the last one is the exit point when
    /// the path left the domain.
    pub states: Vec<Point>,
    pub stop_reason: StopReason,
    pub stop_time: u64,
    /// Exit class, for quadrant paths that left the domain.
    pub tau_class: Option<TauClass>,
}

fn stop_for_exit(kind: WalkKind, w: Point) -> StopReason {
    match kind {
        WalkKind::HalfPlane1 => StopReason::HitTau2,
        WalkKind::HalfPlane2 => StopReason::HitTau1,
        _ => match TauClass::of_exit(w) {
            TauClass::Tau1BeforeTau2 => StopReason::HitTau1,
            TauClass::Tau2NotAfterTau1 => StopReason::HitTau2,
        },
    }
}

/// Runs one path; `record` receives every visited state when present.
fn run_path(
    kind: WalkKind,
    kernel: &TwistedKernel,
    z0: Point,
    horizon: u64,
    rng: &mut ChaCha8Rng,
    mut record: Option<&mut Vec<Point>>,
) -> (StopReason, u64, Point) {
    let mut z = z0;
    if let Some(r) = record.as_deref_mut() {
        r.push(z);
    }
    for t in 1..=horizon {
        let Some(s) = kernel.sample_step(rng) else {
            return (StopReason::KilledMass, t, z);
        };
        z = z + s;
        if let Some(r) = record.as_deref_mut() {
            r.push(z);
        }
        if !kind.contains(z) {
            return (stop_for_exit(kind, z), t, z);
        }
    }
    (StopReason::Horizon, horizon, z)
}

/// Simulates the walk of the given kind under `kernel` from `z0` for at most
/// `horizon` steps. Deterministic in `seed`.
pub fn sample_path(
    kind: WalkKind,
    kernel: &TwistedKernel,
    z0: Point,
    horizon: u64,
    seed: u64,
) -> Result<PathSample> {
    if !kind.contains(z0) {
        return Err(Error::Input(format!("start {z0} is outside the {} domain", kind.name())));
    }
    if horizon == 0 {
        return Err(Error::Input("horizon must be at least 1".into()));
    }
    kernel.require_substochastic()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::new();
    let (stop_reason, stop_time, last) = run_path(kind, kernel, z0, horizon, &mut rng, Some(&mut states));
    let left = matches!(stop_reason, StopReason::HitTau1 | StopReason::HitTau2);
    Ok(PathSample {
        states,
        stop_reason,
        stop_time,
        tau_class: (left && kind == WalkKind::Quadrant).then(|| TauClass::of_exit(last)),
    })
}

/// Monte Carlo estimate of a probability with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n: u64,
    pub hits: u64,
    pub seed: u64,
}

/// Random stream of one sample: the root seed fixes the key and the sample
/// index selects the ChaCha stream, so the value of every sample is independent
/// of how samples are distributed over threads.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Fraction of twisted paths from `z0` that leave the quadrant within
/// `horizon` steps; estimates `P_z(τ^a < ∞)` from below.
pub fn exit_probability_mc(
    kernel: &TwistedKernel,
    z0: Point,
    horizon: u64,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(Error::Input("n_samples must be positive".into()));
    }
    if !WalkKind::Quadrant.contains(z0) {
        return Err(Error::Input(format!("start {z0} is outside the quadrant")));
    }
    kernel.require_substochastic()?;
    let hits: u64 = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let (reason, _, _) = run_path(WalkKind::Quadrant, kernel, z0, horizon, &mut rng, None);
            u64::from(matches!(reason, StopReason::HitTau1 | StopReason::HitTau2))
        })
        .sum();
    let p = hits as f64 / n_samples as f64;
    Ok(McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / n_samples as f64).sqrt(),
        n: n_samples,
        hits,
        seed,
    })
}

/// `φ(a)` recomputed from the measure, for callers that only hold the kernel.
pub fn kernel_phi(kernel: &TwistedKernel) -> f64 {
    phi(kernel.base(), kernel.twist())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::fixtures::m1;

    #[test]
    fn untwisted_kernel_is_the_measure() {
        let k = twisted_kernel(&m1(), Vec2::ZERO);
        assert!((k.total_weight() - 1.0).abs() < 1e-15);
        for (&(z, w), &(z2, p)) in k.steps().iter().zip(m1().entries()) {
            assert_eq!(z, z2);
            assert_eq!(w, p);
        }
        assert!((kernel_phi(&k) - k.total_weight()).abs() < 1e-15);
    }

    #[test]
    fn domains() {
        assert!(WalkKind::HalfPlane1.contains(Point::new(-7, 1)));
        assert!(!WalkKind::HalfPlane1.contains(Point::new(3, 0)));
        assert!(WalkKind::HalfPlane2.contains(Point::new(1, -4)));
        assert!(!WalkKind::Quadrant.contains(Point::new(0, 5)));
        assert_eq!(TauClass::of_exit(Point::new(0, 0)), TauClass::Tau2NotAfterTau1);
        assert_eq!(TauClass::of_exit(Point::new(0, 3)), TauClass::Tau1BeforeTau2);
        for k in [WalkKind::Free, WalkKind::Quadrant, WalkKind::HalfPlane1, WalkKind::HalfPlane2] {
            assert_eq!(WalkKind::parse(k.name()).unwrap(), k);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let k = twisted_kernel(&m1(), Vec2::ZERO);
        assert!(sample_path(WalkKind::Quadrant, &k, Point::new(0, 1), 10, 1).is_err());
        assert!(exit_probability_mc(&k, Point::new(1, 1), 10, 0, 1).is_err());
        let hot = twisted_kernel(&m1(), Vec2::new(2.0, 2.0));
        assert!(sample_path(WalkKind::Free, &hot, Point::new(0, 0), 10, 1).is_err());
    }
}
