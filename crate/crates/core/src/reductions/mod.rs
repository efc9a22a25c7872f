//! `(alpha, beta)`-reductions between learning tasks and an empirical harness
//! that checks a reduction's claim on finite suites of distributions.

mod nonconvex;
mod report;
mod suites;
mod verify;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classes::ConceptClass;
use crate::error::{Error, Result};
use crate::learning::{FiniteDistribution, Hypothesis, Label, LabeledExample};
use crate::representations::Representation;
use crate::sco::ScoTask;
use crate::vecops::dot;

pub use nonconvex::{nonconvex_reduction, NonConvexLoss};
pub use report::{fmt_float, VerificationRecord, VerificationReport};
pub use suites::{
    finite_class_suite, label_suite, separable_suite, SuiteEntry, DEFAULT_SUITE_SIZE,
};
pub use verify::{verify_reduction, VerifyConfig};

type InMap = dyn Fn(&LabeledExample) -> Result<LabeledExample> + Send + Sync;
type OutMap = dyn Fn(&[f64]) -> Result<Hypothesis> + Send + Sync;

/// How the guaranteed source accuracy depends on the target accuracy `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BetaRule {
    /// `beta = alpha`
    Alpha,
    /// `beta = 0`
    Zero,
    /// `beta = (1 + alpha) / 2`
    HalfOnePlusAlpha,
    /// `beta = 2 alpha`
    TwiceAlpha,
    /// `beta = alpha + extra`, for representations that are only `extra`-realizable.
    AlphaPlus { extra: f64 },
}

impl BetaRule {
    pub fn beta(self, alpha: f64) -> f64 {
        match self {
            BetaRule::Alpha => alpha,
            BetaRule::Zero => 0.0,
            BetaRule::HalfOnePlusAlpha => 0.5 * (1.0 + alpha),
            BetaRule::TwiceAlpha => 2.0 * alpha,
            BetaRule::AlphaPlus { extra } => alpha + extra,
        }
    }
}

/// The task a reduction maps into.
#[derive(Debug, Clone)]
pub enum Target {
    Sco(ScoTask),
    /// Homogeneous half-spaces in `R^dim`; solutions are normals `w`.
    Halfspaces { dim: usize },
}

/// A pair of maps `(r_in, r_out)`: examples of the source task to examples of
/// the target task, and target solutions back to source hypotheses.
#[derive(Clone)]
pub struct Reduction {
    pub name: String,
    in_map: Arc<InMap>,
    out_map: Arc<OutMap>,
    /// Largest target accuracy the claim is made for (`> 0`).
    pub claimed_alpha: f64,
    pub beta: BetaRule,
    /// Realizable source distributions map to realizable target distributions.
    pub exact: bool,
    pub source: ConceptClass,
    pub target: Target,
}

impl fmt::Debug for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reduction")
            .field("name", &self.name)
            .field("claimed_alpha", &self.claimed_alpha)
            .field("beta", &self.beta)
            .field("exact", &self.exact)
            .field("source", &self.source)
            .field("target", &self.target)
            .finish_non_exhaustive()
    }
}

impl Reduction {
    #[allow(clippy::too_many_arguments)]
    pub fn new<I, O>(
        name: impl Into<String>,
        in_map: I,
        out_map: O,
        claimed_alpha: f64,
        beta: BetaRule,
        exact: bool,
        source: ConceptClass,
        target: Target,
    ) -> Result<Self>
    where
        I: Fn(&LabeledExample) -> Result<LabeledExample> + Send + Sync + 'static,
        O: Fn(&[f64]) -> Result<Hypothesis> + Send + Sync + 'static,
    {
        if !(claimed_alpha > 0.0) {
            return Err(Error::Parameter(format!(
                "a reduction needs alpha > 0, got {claimed_alpha}"
            )));
        }
        Ok(Reduction {
            name: name.into(),
            in_map: Arc::new(in_map),
            out_map: Arc::new(out_map),
            claimed_alpha,
            beta,
            exact,
            source,
            target,
        })
    }

    pub fn map_example(&self, z: &LabeledExample) -> Result<LabeledExample> {
        (self.in_map)(z)
    }

    pub fn pull_back(&self, solution: &[f64]) -> Result<Hypothesis> {
        (self.out_map)(solution)
    }

    pub fn beta_for(&self, alpha: f64) -> f64 {
        self.beta.beta(alpha)
    }

    /// The same maps with a different claimed `alpha`.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Parameter(format!("a reduction needs alpha > 0, got {alpha}")));
        }
        Ok(Reduction {
            claimed_alpha: alpha,
            ..self.clone()
        })
    }
}

/// The distribution of `r_in(z)` for `z ~ dist`; colliding images merge.
pub fn pushforward(reduction: &Reduction, dist: &FiniteDistribution) -> Result<FiniteDistribution> {
    dist.map_examples(|z| reduction.map_example(z))
}

fn affine_sign(w: &[f64], a: f64, x: &[f64]) -> f64 {
    Label::from_sign(dot(w, x) + a).value()
}

/// Half-spaces in `R^d` to the hinge loss over `(w, a)` in `R^{d+1}`; `r_in` is
/// the identity and `r_out(w, a) = sign(<w, x> + a)`.
pub fn hinge_reduction(d: usize, alpha: f64) -> Result<Reduction> {
    if d == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    Reduction::new(
        format!("hinge(d={d})"),
        move |z: &LabeledExample| {
            crate::error::check_dim(d, z.point.len())?;
            Ok(z.clone())
        },
        move |sol: &[f64]| {
            crate::error::check_dim(d + 1, sol.len())?;
            let (w, a) = (sol[..d].to_vec(), sol[d]);
            Ok(Hypothesis::deterministic(move |x| {
                crate::error::check_dim(w.len(), x.len())?;
                Ok(affine_sign(&w, a, x))
            }))
        },
        alpha,
        BetaRule::Alpha,
        false,
        ConceptClass::Halfspaces {
            dim: d,
            homogeneous: false,
        },
        Target::Sco(ScoTask::hinge(d)),
    )
}

/// Homogeneous half-spaces in `R^d` to the linear-programming loss; `r_in` is
/// the identity and `r_out(w) = sign(<w, x>)`. Exact.
pub fn hard_svm_reduction(d: usize, alpha: f64) -> Result<Reduction> {
    if d == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    Reduction::new(
        format!("hard-svm(d={d})"),
        move |z: &LabeledExample| {
            crate::error::check_dim(d, z.point.len())?;
            Ok(z.clone())
        },
        move |sol: &[f64]| {
            crate::error::check_dim(d, sol.len())?;
            let w = sol.to_vec();
            Ok(Hypothesis::deterministic(move |x| {
                crate::error::check_dim(w.len(), x.len())?;
                Ok(affine_sign(&w, 0.0, x))
            }))
        },
        alpha,
        BetaRule::Zero,
        true,
        ConceptClass::Halfspaces {
            dim: d,
            homogeneous: true,
        },
        Target::Sco(ScoTask::linear_programming(d)),
    )
}

/// Any classification task to `W = [-1, 1]` with `l_z(w) = |z - w| / 2`:
/// `r_in(x, y) = y` and `r_out(w)` is the constant randomized hypothesis `w`.
pub fn trivial_reduction(alpha: f64) -> Result<Reduction> {
    Reduction::new(
        "trivial",
        |z: &LabeledExample| Ok(LabeledExample::new(Vec::new(), z.label)),
        |sol: &[f64]| {
            crate::error::check_dim(1, sol.len())?;
            if !(-1.0..=1.0).contains(&sol[0]) {
                return Err(Error::Domain(format!("{} is outside [-1, 1]", sol[0])));
            }
            Ok(Hypothesis::constant(sol[0]))
        },
        alpha,
        BetaRule::HalfOnePlusAlpha,
        false,
        ConceptClass::AllLabelings,
        Target::Sco(ScoTask::half_absolute()),
    )
}

/// A deterministic representation as a reduction to homogeneous half-spaces:
/// `r_in(x, y) = (r(x), y)` and `r_out(w)(x) = sign(<w, r(x)>)`. `repr_alpha`
/// is how far from realizable the representation leaves images (`0` when exact).
pub fn representation_to_reduction(
    repr: &Representation,
    repr_alpha: f64,
    source: ConceptClass,
    alpha: f64,
) -> Result<Reduction> {
    if !(repr_alpha >= 0.0) {
        return Err(Error::Parameter(format!("representation alpha must be >= 0, got {repr_alpha}")));
    }
    let dim = repr.target_dim();
    let r_in = repr.clone();
    let r_out = repr.clone();
    Reduction::new(
        format!("representation(D={dim})"),
        move |z: &LabeledExample| r_in.apply_example(z),
        move |sol: &[f64]| {
            crate::error::check_dim(dim, sol.len())?;
            let w = sol.to_vec();
            let r = r_out.clone();
            Ok(Hypothesis::deterministic(move |x| Ok(affine_sign(&w, 0.0, &r.apply(x)?))))
        },
        alpha,
        if repr_alpha == 0.0 {
            BetaRule::Alpha
        } else {
            BetaRule::AlphaPlus { extra: repr_alpha }
        },
        repr_alpha == 0.0,
        source,
        Target::Halfspaces { dim },
    )
}

/// `reduction` applied after the representation `repr`: examples are first
/// mapped by `repr`, hypotheses are pulled back along it.
pub fn precompose(repr: &Representation, repr_exact: bool, reduction: &Reduction, source: ConceptClass) -> Reduction {
    let inner = reduction.clone();
    let outer = reduction.clone();
    let r_in = repr.clone();
    let r_out = repr.clone();
    Reduction {
        name: format!("{} after representation(D={})", reduction.name, repr.target_dim()),
        in_map: Arc::new(move |z| inner.map_example(&r_in.apply_example(z)?)),
        out_map: Arc::new(move |sol| {
            let r = r_out.clone();
            Ok(outer.pull_back(sol)?.pullback(move |x| r.apply(x)))
        }),
        claimed_alpha: reduction.claimed_alpha,
        beta: reduction.beta,
        exact: reduction.exact && repr_exact,
        source,
        target: reduction.target.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::{zero_one_loss, HypothesisKind};

    fn ex(p: &[f64], y: Label) -> LabeledExample {
        LabeledExample::new(p.to_vec(), y)
    }

    #[test]
    fn alpha_must_be_positive() {
        assert!(matches!(trivial_reduction(0.0), Err(Error::Parameter(_))));
        assert!(trivial_reduction(0.1).unwrap().with_alpha(-1.0).is_err());
    }

    #[test]
    fn trivial_pushforward_keeps_labels_only() {
        let r = trivial_reduction(0.1).unwrap();
        let d = FiniteDistribution::new(vec![
            (ex(&[1.0, 2.0], Label::Pos), 0.5),
            (ex(&[3.0, 0.0], Label::Pos), 0.2),
            (ex(&[-1.0, 0.0], Label::Neg), 0.3),
        ])
        .unwrap();
        let p = pushforward(&r, &d).unwrap();
        assert_eq!(p.len(), 2);
        assert!((p.mass_of(&ex(&[], Label::Pos)) - 0.7).abs() < 1e-15);
        let h = r.pull_back(&[0.4]).unwrap();
        assert_eq!(h.kind(), HypothesisKind::Randomized);
        assert_eq!(h.eval(&[9.0]).unwrap(), 0.4);
    }

    #[test]
    fn trivial_losses_agree_and_balanced_gives_half() {
        let r = trivial_reduction(0.1).unwrap();
        let task = ScoTask::half_absolute();
        let d = FiniteDistribution::uniform(vec![ex(&[0.0], Label::Pos), ex(&[1.0], Label::Neg)]).unwrap();
        let pd = pushforward(&r, &d).unwrap();
        for w in [-1.0, -0.3, 0.0, 0.6, 1.0] {
            let src = zero_one_loss(&d, &r.pull_back(&[w]).unwrap()).unwrap();
            let tgt = task.loss_value(&pd, &[w]).unwrap().as_f64();
            assert!((src - tgt).abs() < 1e-15);
            assert!((src - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn hinge_pull_back_classifies() {
        let r = hinge_reduction(2, 0.05).unwrap();
        let h = r.pull_back(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(h.eval(&[2.0, -5.0]).unwrap(), 1.0);
        assert_eq!(h.eval(&[-2.0, 5.0]).unwrap(), -1.0);
        let d = FiniteDistribution::uniform(vec![ex(&[1.0, 1.0], Label::Pos), ex(&[2.0, 0.0], Label::Neg)]).unwrap();
        assert_eq!(pushforward(&r, &d).unwrap(), d);
    }

    #[test]
    fn representation_reduction_preserves_losses() {
        let repr = Representation::linear(vec![vec![1.0, 1.0], vec![0.0, 2.0], vec![-1.0, 0.5]]).unwrap();
        let red = representation_to_reduction(&repr, 0.0, ConceptClass::AllLabelings, 0.1).unwrap();
        assert_eq!(red.beta_for(0.1), 0.1);
        let d = FiniteDistribution::uniform(vec![
            ex(&[1.0, 0.0], Label::Pos),
            ex(&[0.0, 1.0], Label::Neg),
            ex(&[-1.0, 2.0], Label::Pos),
        ])
        .unwrap();
        let pd = pushforward(&red, &d).unwrap();
        for w in [[1.0, 0.0, 0.0], [0.3, -1.0, 2.0], [0.0, 0.0, -1.0]] {
            let src = zero_one_loss(&d, &red.pull_back(&w).unwrap()).unwrap();
            let tgt = crate::representations::homogeneous_zero_one(&pd, &w);
            assert!((src - tgt).abs() < 1e-15);
        }
        let id = representation_to_reduction(&Representation::Identity { dim: 2 }, 0.0, ConceptClass::AllLabelings, 0.1).unwrap();
        assert_eq!(pushforward(&id, &d).unwrap(), d);
    }

    #[test]
    fn precompose_routes_through_representation() {
        let repr = Representation::linear(vec![vec![2.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let red = precompose(&repr, true, &hard_svm_reduction(2, 0.1).unwrap(), ConceptClass::AllLabelings);
        let z = red.map_example(&ex(&[1.0, 1.0], Label::Pos)).unwrap();
        assert_eq!(z.point, vec![2.0, -1.0]);
        let h = red.pull_back(&[0.0, 1.0]).unwrap();
        assert_eq!(h.eval(&[0.0, 1.0]).unwrap(), -1.0);
        assert!(red.exact);
    }
}
