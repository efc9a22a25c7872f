//! Labeled examples, finitely supported distributions, hypotheses and the
//! loss functionals built on them.
//!
//! Distributions are always finitely supported. Continuous distributions are
//! handled upstream by sampling into empirical [`FiniteDistribution`]s, which
//! keeps every loss and every class optimum exactly computable.

use std::collections::HashMap;
use std::fmt;
use std::ops::Add;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classes::ConceptClass;
use crate::error::{Error, Result};
use crate::sco::{SolverConfig, ScoTask};

/// Tolerance on the total mass of a distribution after renormalization.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Inputs whose weights are off from 1 by more than this are rejected.
pub const RENORMALIZE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn from_sign(v: f64) -> Label {
        if v >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl TryFrom<i64> for Label {
    type Error = Error;

    fn try_from(v: i64) -> Result<Label> {
        match v {
            1 => Ok(Label::Pos),
            -1 => Ok(Label::Neg),
            other => Err(Error::Domain(format!("label must be +1 or -1, got {other}"))),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value() as i8)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Label, D::Error> {
        let v = i64::deserialize(d)?;
        Label::try_from(v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Pos => write!(f, "+1"),
            Label::Neg => write!(f, "-1"),
        }
    }
}

/// A pair `z = (x, y)` with `y` in `{+1, -1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub point: Vec<f64>,
    pub label: Label,
}

impl LabeledExample {
    pub fn new(point: Vec<f64>, label: Label) -> Self {
        LabeledExample { point, label }
    }

    pub fn flipped(&self) -> Self {
        LabeledExample {
            point: self.point.clone(),
            label: self.label.flipped(),
        }
    }

    pub(crate) fn key(&self) -> ExampleKey {
        ExampleKey(point_key(&self.point), self.label)
    }
}

/// Bitwise identity of a point; `-0.0` and `0.0` are identified.
pub(crate) fn point_key(p: &[f64]) -> Vec<u64> {
    p.iter()
        .map(|v| if *v == 0.0 { 0u64 } else { v.to_bits() })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct ExampleKey(Vec<u64>, Label);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(flatten)]
    pub example: LabeledExample,
    pub weight: f64,
}

/// A finitely supported probability distribution over labeled examples.
///
/// Weights are strictly positive and sum to one within [`MASS_TOLERANCE`];
/// atoms are pairwise distinct (duplicates are merged on construction).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteDistribution {
    atoms: Vec<Atom>,
}

impl FiniteDistribution {
    pub fn new(weighted: Vec<(LabeledExample, f64)>) -> Result<Self> {
        if weighted.is_empty() {
            return Err(Error::Domain("distribution needs at least one atom".into()));
        }
        let mut total = 0.0;
        for (ex, w) in &weighted {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::Domain(format!(
                    "atom {:?} has non-positive weight {w}",
                    ex.point
                )));
            }
            if ex.point.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("atom {:?} is not finite", ex.point)));
            }
            total += w;
        }
        if (total - 1.0).abs() > RENORMALIZE_LIMIT {
            return Err(Error::Domain(format!(
                "weights sum to {total}, more than {RENORMALIZE_LIMIT} away from 1"
            )));
        }
        let mut index: HashMap<ExampleKey, usize> = HashMap::new();
        let mut atoms: Vec<Atom> = Vec::with_capacity(weighted.len());
        for (example, weight) in weighted {
            match index.get(&example.key()) {
                Some(&i) => atoms[i].weight += weight / total,
                None => {
                    index.insert(example.key(), atoms.len());
                    atoms.push(Atom {
                        example,
                        weight: weight / total,
                    });
                }
            }
        }
        Ok(FiniteDistribution { atoms })
    }

    pub fn uniform(examples: Vec<LabeledExample>) -> Result<Self> {
        let n = examples.len() as f64;
        Self::new(examples.into_iter().map(|e| (e, 1.0 / n)).collect())
    }

    pub fn point_mass(example: LabeledExample) -> Self {
        FiniteDistribution {
            atoms: vec![Atom {
                example,
                weight: 1.0,
            }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn label_mass(&self, label: Label) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.example.label == label)
            .map(|a| a.weight)
            .sum()
    }

    /// Common ambient dimension of the support, if all points agree.
    pub fn dim(&self) -> Option<usize> {
        let d = self.atoms.first()?.example.point.len();
        self.atoms
            .iter()
            .all(|a| a.example.point.len() == d)
            .then_some(d)
    }

    /// Mass of the atom equal to `example`, zero if absent.
    pub fn mass_of(&self, example: &LabeledExample) -> f64 {
        let key = example.key();
        self.atoms
            .iter()
            .filter(|a| a.example.key() == key)
            .map(|a| a.weight)
            .sum()
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mixture(&self, other: &FiniteDistribution, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Parameter(format!("mixture weight {lambda} not in [0,1]")));
        }
        let mut weighted: Vec<(LabeledExample, f64)> = Vec::new();
        if lambda > 0.0 {
            weighted.extend(self.atoms.iter().map(|a| (a.example.clone(), lambda * a.weight)));
        }
        if lambda < 1.0 {
            weighted.extend(
                other
                    .atoms
                    .iter()
                    .map(|a| (a.example.clone(), (1.0 - lambda) * a.weight)),
            );
        }
        Self::new(weighted)
    }

    /// Maps every atom through `f`; colliding images merge their weights.
    pub fn map_examples<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&LabeledExample) -> Result<LabeledExample>,
    {
        let mapped = self
            .atoms
            .iter()
            .map(|a| Ok((f(&a.example)?, a.weight)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mapped)
    }
}

impl<'de> Deserialize<'de> for FiniteDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            atoms: Vec<Atom>,
        }
        let raw = Raw::deserialize(d)?;
        FiniteDistribution::new(raw.atoms.into_iter().map(|a| (a.example, a.weight)).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// A loss value in `[0, +inf]`. Infinity is an explicit variant, never a sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossValue {
    Finite(f64),
    Infinite,
}

impl LossValue {
    pub fn finite(v: f64) -> Result<LossValue> {
        if v.is_nan() || v < 0.0 {
            return Err(Error::Domain(format!("loss must be nonnegative, got {v}")));
        }
        if v.is_infinite() {
            return Ok(LossValue::Infinite);
        }
        Ok(LossValue::Finite(v))
    }

    pub fn is_finite(self) -> bool {
        matches!(self, LossValue::Finite(_))
    }

    /// The value as an `f64`, with `f64::INFINITY` for the infinite case.
    pub fn as_f64(self) -> f64 {
        match self {
            LossValue::Finite(v) => v,
            LossValue::Infinite => f64::INFINITY,
        }
    }

    pub fn scaled(self, s: f64) -> LossValue {
        match self {
            LossValue::Finite(v) => LossValue::Finite(v * s),
            LossValue::Infinite if s == 0.0 => LossValue::Finite(0.0),
            LossValue::Infinite => LossValue::Infinite,
        }
    }
}

impl Add for LossValue {
    type Output = LossValue;

    fn add(self, rhs: LossValue) -> LossValue {
        match (self, rhs) {
            (LossValue::Finite(a), LossValue::Finite(b)) => LossValue::Finite(a + b),
            _ => LossValue::Infinite,
        }
    }
}

impl PartialOrd for LossValue {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

impl fmt::Display for LossValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossValue::Finite(v) => write!(f, "{v}"),
            LossValue::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for LossValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LossValue::Finite(v) => s.serialize_f64(*v),
            LossValue::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for LossValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => LossValue::finite(v).map_err(serde::de::Error::custom),
            Raw::Str(s) if s == "inf" => Ok(LossValue::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad loss value {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisKind {
    Deterministic,
    Randomized,
}

type EvalFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;

/// A map from points to `[-1, 1]`. Deterministic hypotheses take values in
/// `{-1, +1}`; a randomized one outputs `+1` with probability `(1 + h(x)) / 2`.
#[derive(Clone)]
pub struct Hypothesis {
    kind: HypothesisKind,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hypothesis").field("kind", &self.kind).finish_non_exhaustive()
    }
}

impl Hypothesis {
    pub fn deterministic<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Hypothesis {
            kind: HypothesisKind::Deterministic,
            eval: Arc::new(f),
        }
    }

    pub fn randomized<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Hypothesis {
            kind: HypothesisKind::Randomized,
            eval: Arc::new(f),
        }
    }

    /// The randomized hypothesis `h(x) = value` for every `x`.
    pub fn constant(value: f64) -> Self {
        Self::randomized(move |_| Ok(value))
    }

    pub fn kind(&self) -> HypothesisKind {
        self.kind
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = (self.eval)(x)?;
        match self.kind {
            HypothesisKind::Deterministic if v != 1.0 && v != -1.0 => Err(Error::Domain(format!(
                "deterministic hypothesis returned {v} at {x:?}"
            ))),
            HypothesisKind::Randomized if !(-1.0..=1.0).contains(&v) => Err(Error::Domain(
                format!("randomized hypothesis returned {v} outside [-1,1] at {x:?}"),
            )),
            _ => Ok(v),
        }
    }

    /// `x -> self(f(x))`: the pullback of this hypothesis along a point map.
    pub fn pullback<F>(&self, f: F) -> Hypothesis
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        let inner = self.eval.clone();
        Hypothesis {
            kind: self.kind,
            eval: Arc::new(move |x| inner(&f(x)?)),
        }
    }
}

/// `L_D = E_{z~D}[loss(z)]`. Any positive-mass atom with infinite loss makes
/// the result infinite without evaluating the remaining atoms.
pub fn expected_loss<F>(dist: &FiniteDistribution, loss: F) -> Result<LossValue>
where
    F: Fn(&LabeledExample) -> Result<LossValue>,
{
    let mut acc = 0.0;
    for atom in dist.atoms() {
        match loss(&atom.example) {
            Ok(LossValue::Finite(v)) => acc += atom.weight * v,
            Ok(LossValue::Infinite) => return Ok(LossValue::Infinite),
            Err(e) => {
                return Err(Error::Domain(format!(
                    "loss undefined at atom ({:?}, {}): {e}",
                    atom.example.point, atom.example.label
                )))
            }
        }
    }
    LossValue::finite(acc.max(0.0))
}

/// Expected 0/1 loss, `E[|h(x) - y| / 2]`; for deterministic `h` this is the
/// misclassification probability.
pub fn zero_one_loss(dist: &FiniteDistribution, h: &Hypothesis) -> Result<f64> {
    let mut acc = 0.0;
    for atom in dist.atoms() {
        let v = h.eval(&atom.example.point)?;
        acc += atom.weight * 0.5 * (v - atom.example.label.value()).abs();
    }
    Ok(acc)
}

/// The label-flip involution `D -> -D`.
pub fn flip_labels(dist: &FiniteDistribution) -> FiniteDistribution {
    FiniteDistribution {
        atoms: dist
            .atoms()
            .iter()
            .map(|a| Atom {
                example: a.example.flipped(),
                weight: a.weight,
            })
            .collect(),
    }
}

/// Total variation distance, half the L1 distance of the mass functions.
pub fn total_variation(a: &FiniteDistribution, b: &FiniteDistribution) -> f64 {
    let mut diff: HashMap<ExampleKey, f64> = HashMap::new();
    for atom in a.atoms() {
        *diff.entry(atom.example.key()).or_insert(0.0) += atom.weight;
    }
    for atom in b.atoms() {
        *diff.entry(atom.example.key()).or_insert(0.0) -= atom.weight;
    }
    let mut terms: Vec<f64> = diff.values().map(|v| v.abs()).collect();
    terms.sort_by(|x, y| x.total_cmp(y));
    (0.5 * terms.iter().sum::<f64>()).min(1.0)
}

/// What `opt_over_class` minimizes over.
pub enum OptTarget<'a> {
    Class(&'a ConceptClass),
    Sco(&'a ScoTask, &'a SolverConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptValue {
    pub value: LossValue,
    /// Width of the certified interval `[value - tolerance, value]` containing the infimum.
    pub tolerance: f64,
    pub exact: bool,
}

/// `OPT(D) = inf_c L_D(c)`: exact for finite classes, solver-certified for SCO tasks.
pub fn opt_over_class(dist: &FiniteDistribution, target: OptTarget<'_>) -> Result<OptValue> {
    match target {
        OptTarget::Class(class) => class.opt(dist),
        OptTarget::Sco(task, config) => {
            let report = crate::sco::solve(task, dist, config)?;
            Ok(OptValue {
                value: report.achieved_loss,
                tolerance: report.tolerance,
                exact: false,
            })
        }
    }
}
