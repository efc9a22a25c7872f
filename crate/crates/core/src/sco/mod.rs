//! Stochastic convex optimization tasks and the solvers that produce
//! α-optimal points for them.
//!
//! Finite convex losses go through [`solve_subgradient`]; the ∞-valued
//! linear-programming loss goes through [`hard_svm`]; one-dimensional
//! non-convex tasks are solved by grid search. [`solve`] dispatches.

mod hard_svm;
mod losses;
mod subgradient;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::learning::{expected_loss, FiniteDistribution, LabeledExample, LossValue};
use crate::rng;
use crate::vecops::{add_scaled, dist, norm};

pub use hard_svm::{hard_svm, lift_affine, HardSvmOutcome, InfeasibilityReport};
pub use losses::{hinge_loss, lp_loss, ConstantLoss, HalfAbsoluteLoss, HingeLoss, LpLoss};
pub use subgradient::{solve_subgradient, solve_subgradient_traced};

/// The parameter set `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexDomain {
    Full { dim: usize },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl ConvexDomain {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Parameter(format!("ball radius must be positive, got {radius}")));
        }
        Ok(ConvexDomain::Ball { center, radius })
    }

    pub fn cube(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::Parameter("box needs lo <= hi componentwise".into()));
        }
        Ok(ConvexDomain::Box { lo, hi })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexDomain::Full { dim } => *dim,
            ConvexDomain::Ball { center, .. } => center.len(),
            ConvexDomain::Box { lo, .. } => lo.len(),
        }
    }

    pub fn diameter(&self) -> Option<f64> {
        match self {
            ConvexDomain::Full { .. } => None,
            ConvexDomain::Ball { radius, .. } => Some(2.0 * radius),
            ConvexDomain::Box { lo, hi } => Some(dist(lo, hi)),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.diameter().is_some()
    }

    /// Euclidean projection onto the domain, in place.
    pub fn project(&self, w: &mut [f64]) {
        match self {
            ConvexDomain::Full { .. } => {}
            ConvexDomain::Ball { center, radius } => {
                let r = dist(w, center);
                if r > *radius {
                    let s = radius / r;
                    for (wi, ci) in w.iter_mut().zip(center) {
                        *wi = ci + (*wi - ci) * s;
                    }
                }
            }
            ConvexDomain::Box { lo, hi } => {
                for ((wi, l), h) in w.iter_mut().zip(lo).zip(hi) {
                    *wi = wi.clamp(*l, *h);
                }
            }
        }
    }

    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        let mut p = w.to_vec();
        self.project(&mut p);
        dist(&p, w) <= tol
    }

    /// A canonical interior point (origin projected onto the domain).
    pub fn anchor(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.dim()];
        self.project(&mut w);
        w
    }

    pub fn sample(&self, r: &mut rng::Rng, spread: f64) -> Vec<f64> {
        use rand::Rng as _;
        match self {
            ConvexDomain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| r.gen_range(*l..=*h)).collect(),
            _ => {
                let mut w = rng::gaussian_vec(r, self.dim());
                for v in &mut w {
                    *v *= spread;
                }
                self.project(&mut w);
                w
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Hinge,
    LinearProgramming,
    HalfAbsolute,
    Constant,
    NonConvex,
    Other,
}

/// Per-example loss `ℓ_z(w)` over the parameter space.
pub trait ExampleLoss: Send + Sync {
    fn kind(&self) -> LossKind {
        LossKind::Other
    }

    fn value(&self, z: &LabeledExample, w: &[f64]) -> Result<LossValue>;

    /// A subgradient at `w`; only required where the loss is finite.
    fn subgradient(&self, z: &LabeledExample, w: &[f64]) -> Result<Vec<f64>>;

    /// Lipschitz constant of `ℓ_z` on the whole parameter space, if known.
    fn lipschitz(&self, z: &LabeledExample) -> Option<f64>;

    /// Extra candidate points for grid search (e.g. known zeros).
    fn anchors(&self) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

/// `(W, Z, ℓ)`: a convex parameter set with a loss for every example.
#[derive(Clone)]
pub struct ScoTask {
    pub name: String,
    pub domain: ConvexDomain,
    pub loss: Arc<dyn ExampleLoss>,
    pub infinity_valued: bool,
    /// `false` for tasks whose losses are not convex; the subgradient solver refuses them.
    pub convex: bool,
}

impl fmt::Debug for ScoTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScoTask")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("kind", &self.loss.kind())
            .field("infinity_valued", &self.infinity_valued)
            .field("convex", &self.convex)
            .finish()
    }
}

impl ScoTask {
    /// Unregularized hinge loss over `W = R^{d+1}`, parameters `(w, a)`.
    pub fn hinge(d: usize) -> Self {
        ScoTask {
            name: format!("hinge(d={d})"),
            domain: ConvexDomain::Full { dim: d + 1 },
            loss: Arc::new(HingeLoss),
            infinity_valued: false,
            convex: true,
        }
    }

    /// `‖w‖²` on correctly signed examples, `∞` otherwise, over `W = R^d`.
    pub fn linear_programming(d: usize) -> Self {
        ScoTask {
            name: format!("linear-programming(d={d})"),
            domain: ConvexDomain::Full { dim: d },
            loss: Arc::new(LpLoss),
            infinity_valued: true,
            convex: true,
        }
    }

    /// `W = [-1, 1]`, `ℓ_z(w) = |z - w| / 2` where `z` is the example's label.
    pub fn half_absolute() -> Self {
        ScoTask {
            name: "half-absolute".into(),
            domain: ConvexDomain::Box {
                lo: vec![-1.0],
                hi: vec![1.0],
            },
            loss: Arc::new(HalfAbsoluteLoss),
            infinity_valued: false,
            convex: true,
        }
    }

    pub fn constant(value: f64, domain: ConvexDomain) -> Result<Self> {
        LossValue::finite(value)?;
        Ok(ScoTask {
            name: format!("constant({value})"),
            domain,
            loss: Arc::new(ConstantLoss(value)),
            infinity_valued: false,
            convex: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// `L_D(w)`.
    pub fn loss_value(&self, dist: &FiniteDistribution, w: &[f64]) -> Result<LossValue> {
        check_dim(self.dim(), w.len())?;
        expected_loss(dist, |z| self.loss.value(z, w))
    }

    /// A subgradient of `L_D` at `w` (weighted sum of per-example subgradients).
    pub fn subgradient(&self, dist: &FiniteDistribution, w: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.dim()];
        for atom in dist.atoms() {
            add_scaled(&mut g, &self.loss.subgradient(&atom.example, w)?, atom.weight);
        }
        Ok(g)
    }

    /// Lipschitz constant of `L_D`, the largest per-atom constant.
    pub fn lipschitz(&self, dist: &FiniteDistribution) -> Option<f64> {
        dist.atoms()
            .iter()
            .map(|a| self.loss.lipschitz(&a.example))
            .try_fold(0.0f64, |acc, l| l.map(|l| acc.max(l)))
    }

    /// Midpoint-convexity spot check of every per-example loss on random pairs.
    pub fn spot_check_convexity(
        &self,
        examples: &[LabeledExample],
        pairs: usize,
        spread: f64,
        seed: u64,
    ) -> Result<ConvexityCheck> {
        let mut r = rng::seeded(seed);
        let mut worst = f64::NEG_INFINITY;
        let mut checked = 0;
        for _ in 0..pairs {
            let u = self.domain.sample(&mut r, spread);
            let v = self.domain.sample(&mut r, spread);
            let mid: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
            for z in examples {
                let (lu, lv, lm) = (
                    self.loss.value(z, &u)?,
                    self.loss.value(z, &v)?,
                    self.loss.value(z, &mid)?,
                );
                if !(lu.is_finite() && lv.is_finite()) {
                    continue;
                }
                let violation = lm.as_f64() - 0.5 * (lu.as_f64() + lv.as_f64());
                worst = worst.max(violation);
                checked += 1;
            }
        }
        Ok(ConvexityCheck {
            checked,
            worst_violation: worst,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityCheck {
    pub checked: usize,
    /// `max ℓ(mid) - (ℓ(u) + ℓ(v)) / 2`; nonpositive up to rounding for convex losses.
    pub worst_violation: f64,
}

/// Step-size schedule of the subgradient method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Polyak steps toward `known_opt` when it is set, otherwise `Constant`.
    Auto,
    /// `diameter / (lipschitz * sqrt(max_iters))`.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Target accuracy; solving stops once the certified gap is at most this.
    pub alpha: f64,
    /// Optimal value, when known in advance; enables Polyak steps.
    pub known_opt: Option<f64>,
    /// Radius of the ball that replaces an unbounded domain.
    pub norm_cap: Option<f64>,
    pub step: StepRule,
    pub start: Option<Vec<f64>>,
    /// Grid points per unit length for one-dimensional grid search.
    pub grid_resolution: usize,
    /// Largest cap tried by [`solve`] when it grows the cap for an unbounded domain.
    pub max_norm_cap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 100_000,
            alpha: 0.01,
            known_opt: None,
            norm_cap: None,
            step: StepRule::Auto,
            start: None,
            grid_resolution: 10_000,
            max_norm_cap: 1_048_576.0,
        }
    }
}

impl SolverConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        SolverConfig {
            alpha,
            ..Self::default()
        }
    }
}

/// Output of every solver: the point, its loss, and a certified lower bound on the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub point: Vec<f64>,
    pub achieved_loss: LossValue,
    /// Certified lower bound on the infimum over the (capped) domain.
    pub opt_estimate: LossValue,
    /// `achieved_loss - opt_estimate`.
    pub tolerance: f64,
    pub iterations: usize,
    pub certified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_cap: Option<f64>,
}

impl SolverReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Solves any supported task to an α-optimal point (`config.alpha`).
///
/// * ∞-valued linear-programming loss: a separating `w` from [`hard_svm`],
///   rescaled so that `‖w‖² = α / 2`; the infimum is `0` whenever the data is
///   separable, so the rescaled point is α-optimal.
/// * non-convex one-dimensional tasks: grid search.
/// * convex finite tasks: [`solve_subgradient`], growing the norm cap
///   geometrically when the domain is unbounded and no cap is given, until
///   the loss is within α of zero or doubling the cap gains less than α/4.
pub fn solve(task: &ScoTask, dist: &FiniteDistribution, config: &SolverConfig) -> Result<SolverReport> {
    if task.infinity_valued {
        return solve_linear_programming(task, dist, config);
    }
    if !task.convex {
        return grid_search(task, dist, config);
    }
    if task.domain.is_bounded() || config.norm_cap.is_some() {
        return solve_subgradient(task, dist, config);
    }
    let mut cap = 1.0;
    let mut last = None;
    let mut start = config.start.clone();
    while cap <= config.max_norm_cap {
        let cfg = SolverConfig {
            norm_cap: Some(cap),
            start: start.clone(),
            ..config.clone()
        };
        let report = solve_subgradient(task, dist, &cfg)?;
        // Losses are nonnegative, so a value within alpha of 0 is optimal on
        // the whole space; otherwise keep growing until a doubling stalls.
        if report.certified {
            let value = report.achieved_loss.as_f64();
            let stalled = matches!(&last, Some(SolverReport { certified: true, achieved_loss, .. })
                if achieved_loss.as_f64() - value <= 0.25 * config.alpha);
            if value <= config.alpha || stalled {
                return Ok(report);
            }
        }
        start = Some(report.point.clone());
        last = Some(report);
        cap *= 2.0;
    }
    last.ok_or_else(|| Error::Parameter(format!("max_norm_cap {} below 1", config.max_norm_cap)))
}

fn solve_linear_programming(
    task: &ScoTask,
    dist: &FiniteDistribution,
    config: &SolverConfig,
) -> Result<SolverReport> {
    if task.loss.kind() != LossKind::LinearProgramming {
        return Err(Error::Unsupported(format!(
            "no solver for the infinity-valued task {}",
            task.name
        )));
    }
    match hard_svm(dist, true)? {
        HardSvmOutcome::Infeasible(_) => Ok(SolverReport {
            point: vec![0.0; task.dim()],
            achieved_loss: LossValue::Infinite,
            opt_estimate: LossValue::Infinite,
            tolerance: 0.0,
            iterations: 0,
            certified: false,
            norm_cap: None,
        }),
        HardSvmOutcome::Feasible(svm) => {
            let target = (0.5 * config.alpha).sqrt();
            let n = norm(&svm.point);
            let point: Vec<f64> = if n > 0.0 {
                svm.point.iter().map(|v| v * target / n).collect()
            } else {
                svm.point.clone()
            };
            let achieved = task.loss_value(dist, &point)?;
            Ok(SolverReport {
                tolerance: achieved.as_f64(),
                certified: achieved.is_finite() && achieved.as_f64() <= config.alpha,
                point,
                achieved_loss: achieved,
                opt_estimate: LossValue::Finite(0.0),
                iterations: svm.iterations,
                norm_cap: None,
            })
        }
    }
}

/// Exhaustive search over a uniform grid of a one-dimensional box, plus the
/// loss's anchor points. Losses are nonnegative, so `0` is the lower bound.
pub fn grid_search(task: &ScoTask, dist: &FiniteDistribution, config: &SolverConfig) -> Result<SolverReport> {
    let (lo, hi) = match &task.domain {
        ConvexDomain::Box { lo, hi } if lo.len() == 1 => (lo[0], hi[0]),
        _ => {
            return Err(Error::Unsupported(format!(
                "grid search needs a one-dimensional box domain ({})",
                task.name
            )))
        }
    };
    let steps = ((hi - lo) * config.grid_resolution as f64).ceil().max(1.0) as usize;
    let mut candidates: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    candidates.extend(task.loss.anchors().into_iter().filter_map(|a| a.first().copied()));
    let mut best = (f64::INFINITY, lo);
    for w in &candidates {
        let v = task.loss_value(dist, &[*w])?.as_f64();
        if v < best.0 {
            best = (v, *w);
        }
    }
    Ok(SolverReport {
        point: vec![best.1],
        achieved_loss: LossValue::finite(best.0)?,
        opt_estimate: LossValue::Finite(0.0),
        tolerance: best.0,
        iterations: candidates.len(),
        certified: best.0 <= config.alpha,
        norm_cap: None,
    })
}
