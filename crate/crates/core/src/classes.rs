//! Concept classes: finite `{+1, -1, *}` tables with exact VC / dual-VC search,
//! and the parametric classifiers (half-spaces, margin classifiers, majority
//! votes of three half-spaces).

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::learning::{point_key, FiniteDistribution, Hypothesis, Label, LabeledExample, LossValue, OptValue};
use crate::rng;
use crate::vecops::{dot, norm};

/// Default budget on `(#subsets examined) * |C|` for exhaustive VC search.
pub const DEFAULT_VC_BUDGET: u64 = 100_000_000;
/// Largest `d` accepted by [`projection_class`] (`2^d` columns).
pub const MAX_PROJECTION_DIM: usize = 16;
const MAX_CONSECUTIVE_REJECTIONS: u64 = 1_000_000;

/// One table entry. `Star` marks a point outside the concept's support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entry {
    Pos,
    Neg,
    Star,
}

impl Entry {
    pub fn label(self) -> Option<Label> {
        match self {
            Entry::Pos => Some(Label::Pos),
            Entry::Neg => Some(Label::Neg),
            Entry::Star => None,
        }
    }

    pub fn from_label(l: Label) -> Entry {
        match l {
            Label::Pos => Entry::Pos,
            Label::Neg => Entry::Neg,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Entry::Pos => "+1",
            Entry::Neg => "-1",
            Entry::Star => "*",
        }
    }
}

impl Serialize for Entry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "+1" | "1" | "+" => Ok(Entry::Pos),
            "-1" | "-" => Ok(Entry::Neg),
            "*" => Ok(Entry::Star),
            other => Err(serde::de::Error::custom(format!(
                "table entry must be \"+1\", \"-1\" or \"*\", got {other:?}"
            ))),
        }
    }
}

/// A finite (possibly partial) concept class: rows are concepts, columns are
/// domain points.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteConceptClass {
    points: Vec<Vec<f64>>,
    table: Vec<Vec<Entry>>,
    names: Vec<String>,
    index: HashMap<Vec<u64>, usize>,
}

#[derive(Serialize, Deserialize)]
struct ClassFile {
    points: Vec<Vec<f64>>,
    table: Vec<Vec<Entry>>,
    #[serde(default)]
    names: Vec<String>,
}

impl Serialize for FiniteConceptClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ClassFile {
            points: self.points.clone(),
            table: self.table.clone(),
            names: self.names.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteConceptClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = ClassFile::deserialize(d)?;
        let names = if f.names.is_empty() { None } else { Some(f.names) };
        FiniteConceptClass::new(f.points, f.table, names).map_err(serde::de::Error::custom)
    }
}

impl FiniteConceptClass {
    pub fn new(
        points: Vec<Vec<f64>>,
        table: Vec<Vec<Entry>>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::Domain("concept class is empty".into()));
        }
        let mut index = HashMap::new();
        for (j, p) in points.iter().enumerate() {
            if index.insert(point_key(p), j).is_some() {
                return Err(Error::Construction(format!("domain point {p:?} listed twice")));
            }
        }
        let mut seen = HashSet::new();
        for (i, row) in table.iter().enumerate() {
            check_dim(points.len(), row.len())?;
            if !seen.insert(row.clone()) {
                return Err(Error::Construction(format!("concept row {i} duplicates an earlier row")));
            }
        }
        let names = match names {
            Some(n) => {
                check_dim(table.len(), n.len())?;
                n
            }
            None => (0..table.len()).map(|i| format!("c{i}")).collect(),
        };
        Ok(FiniteConceptClass {
            points,
            table,
            names,
            index,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn table(&self) -> &[Vec<Entry>] {
        &self.table
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn num_concepts(&self) -> usize {
        self.table.len()
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn is_total(&self) -> bool {
        self.table.iter().flatten().all(|e| *e != Entry::Star)
    }

    /// Column indices where concept `c` is defined.
    pub fn support(&self, c: usize) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&j| self.table[c][j] != Entry::Star)
            .collect()
    }

    pub fn point_index(&self, x: &[f64]) -> Option<usize> {
        self.index.get(&point_key(x)).copied()
    }

    pub fn entry(&self, concept: usize, x: &[f64]) -> Result<Entry> {
        let j = self
            .point_index(x)
            .ok_or_else(|| Error::Domain(format!("point {x:?} is not in the class domain")))?;
        Ok(self.table[concept][j])
    }

    /// 0/1 loss of one concept; `*` entries count as mistakes.
    pub fn concept_loss(&self, concept: usize, dist: &FiniteDistribution) -> Result<f64> {
        let mut acc = 0.0;
        for atom in dist.atoms() {
            if self.entry(concept, &atom.example.point)?.label() != Some(atom.example.label) {
                acc += atom.weight;
            }
        }
        Ok(acc)
    }

    /// The concept as a deterministic hypothesis (errors outside its support).
    pub fn hypothesis(&self, concept: usize) -> Hypothesis {
        let class = self.clone();
        Hypothesis::deterministic(move |x| {
            class
                .entry(concept, x)?
                .label()
                .map(Label::value)
                .ok_or_else(|| Error::Domain(format!("concept {concept} undefined at {x:?}")))
        })
    }

    /// All examples `(x, c(x))` with `c(x) != *`.
    pub fn realizable_examples(&self, concept: usize) -> Vec<LabeledExample> {
        self.support(concept)
            .into_iter()
            .filter_map(|j| {
                self.table[concept][j]
                    .label()
                    .map(|l| LabeledExample::new(self.points[j].clone(), l))
            })
            .collect()
    }
}

/// `U_d`: the `d` coordinate projections on `{+1, -1}^d`.
///
/// Column `j` is the point whose coordinate `i` is `-1` iff bit `i` of `j` is set.
pub fn projection_class(d: usize) -> Result<FiniteConceptClass> {
    if d == 0 {
        return Err(Error::Parameter("projection class needs d >= 1".into()));
    }
    if d > MAX_PROJECTION_DIM {
        return Err(Error::Resource(format!(
            "projection class with d = {d} has 2^{d} points; the limit is d <= {MAX_PROJECTION_DIM}"
        )));
    }
    let points: Vec<Vec<f64>> = (0..1usize << d)
        .map(|j| (0..d).map(|i| if j >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
        .collect();
    let table = (0..d)
        .map(|i| {
            points
                .iter()
                .map(|p| if p[i] > 0.0 { Entry::Pos } else { Entry::Neg })
                .collect()
        })
        .collect();
    let names = (0..d).map(|i| format!("h{}", i + 1)).collect();
    FiniteConceptClass::new(points, table, Some(names))
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic order.
pub(crate) fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn log2_floor(n: usize) -> usize {
    (usize::BITS - 1 - n.leading_zeros()) as usize
}

impl FiniteConceptClass {
    /// Whether the column set is shattered. A labeling only counts when the
    /// witnessing concept is defined on every column of the set.
    pub fn shatters(&self, cols: &[usize]) -> bool {
        let k = cols.len();
        if k >= 64 || self.table.len() < 1usize << k {
            return k == 0 && !self.table.is_empty();
        }
        let need = 1usize << k;
        let mut patterns = HashSet::with_capacity(need);
        for row in &self.table {
            let mut bits = 0u64;
            let mut defined = true;
            for (b, &c) in cols.iter().enumerate() {
                match row[c] {
                    Entry::Pos => bits |= 1 << b,
                    Entry::Neg => {}
                    Entry::Star => {
                        defined = false;
                        break;
                    }
                }
            }
            if defined && patterns.insert(bits) && patterns.len() == need {
                return true;
            }
        }
        false
    }

    /// The class restricted to the points where at least two concepts
    /// disagree. Fails if that leaves no points or merges two concepts.
    pub fn disagreement_restriction(&self) -> Result<Self> {
        let keep: Vec<usize> = (0..self.points.len())
            .filter(|&j| self.table.iter().any(|row| row[j] != self.table[0][j]))
            .collect();
        if keep.is_empty() {
            return Err(Error::Domain("all concepts agree on every point".into()));
        }
        let points = keep.iter().map(|&j| self.points[j].clone()).collect();
        let table = self.table.iter().map(|row| keep.iter().map(|&j| row[j]).collect()).collect();
        let names = (!self.names.is_empty()).then(|| self.names.clone());
        FiniteConceptClass::new(points, table, names)
    }

    fn vc_size_bound(&self) -> usize {
        log2_floor(self.table.len()).min(self.points.len())
    }
}

/// Exact VC dimension with the default budget.
pub fn vc_dimension(class: &FiniteConceptClass) -> Result<usize> {
    vc_dimension_with_budget(class, DEFAULT_VC_BUDGET)
}

/// Exact VC dimension: subsets by increasing size, stopping at the first size
/// with no shattered subset (shattering is closed under taking subsets).
pub fn vc_dimension_with_budget(class: &FiniteConceptClass, budget: u64) -> Result<usize> {
    let n = class.num_points();
    let kmax = class.vc_size_bound();
    let worst: u64 = (1..=kmax as u64)
        .map(|k| binomial(n as u64, k))
        .fold(0u64, |a, b| a.saturating_add(b))
        .saturating_mul(class.num_concepts() as u64);
    if worst > budget {
        return Err(Error::Resource(format!(
            "exhaustive VC search needs up to {worst} concept evaluations (budget {budget}); \
             use the sampled lower-bound mode (vc_lower_bound_sampled) instead"
        )));
    }
    let mut vc = 0;
    for k in 1..=kmax {
        let mut idx: Vec<usize> = (0..k).collect();
        let mut found = false;
        loop {
            if class.shatters(&idx) {
                found = true;
                break;
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
        if !found {
            break;
        }
        vc = k;
    }
    Ok(vc)
}

/// Lower bound on the VC dimension from `samples_per_size` random subsets per size.
pub fn vc_lower_bound_sampled(class: &FiniteConceptClass, samples_per_size: usize, seed: u64) -> usize {
    use rand::seq::index::sample;
    let n = class.num_points();
    let mut r = rng::seeded(seed);
    let mut vc = 0;
    for k in 1..=class.vc_size_bound() {
        let hit = (0..samples_per_size).any(|_| {
            let mut cols = sample(&mut r, n, k).into_vec();
            cols.sort_unstable();
            class.shatters(&cols)
        });
        if !hit {
            break;
        }
        vc = k;
    }
    vc
}

/// The dual class together with the groups of domain points whose columns coincided.
#[derive(Debug, Clone)]
pub struct DualClass {
    pub class: FiniteConceptClass,
    /// `groups[i]` lists the original column indices merged into dual concept `i`.
    pub groups: Vec<Vec<usize>>,
}

/// Transpose of a total class: concepts become points and points become concepts.
pub fn dual_class(class: &FiniteConceptClass) -> Result<DualClass> {
    if !class.is_total() {
        return Err(Error::Unsupported(
            "dual classes are defined for total classes only".into(),
        ));
    }
    let m = class.num_concepts();
    let mut order: Vec<Vec<Entry>> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut seen: HashMap<Vec<Entry>, usize> = HashMap::new();
    for j in 0..class.num_points() {
        let col: Vec<Entry> = (0..m).map(|i| class.table[i][j]).collect();
        match seen.get(&col) {
            Some(&g) => groups[g].push(j),
            None => {
                seen.insert(col.clone(), order.len());
                order.push(col);
                groups.push(vec![j]);
            }
        }
    }
    // Dual domain: one point per original concept, the standard basis vector e_i.
    let points = (0..m)
        .map(|i| (0..m).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
        .collect();
    let names = groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|j| format!("x{j}"))
                .collect::<Vec<_>>()
                .join("=")
        })
        .collect();
    Ok(DualClass {
        class: FiniteConceptClass::new(points, order, Some(names))?,
        groups,
    })
}

pub fn dual_vc_dimension(class: &FiniteConceptClass) -> Result<usize> {
    vc_dimension(&dual_class(class)?.class)
}

/// Anything that labels points with `+1`, `-1` or `*`.
pub trait Classifier: Send + Sync {
    fn dim(&self) -> usize;
    fn evaluate_unchecked(&self, x: &[f64]) -> Entry;

    fn evaluate(&self, x: &[f64]) -> Result<Entry> {
        check_dim(self.dim(), x.len())?;
        Ok(self.evaluate_unchecked(x))
    }
}

/// Deterministic hypothesis from a classifier; `*` is an evaluation error.
pub fn classifier_hypothesis<C: Classifier + Clone + 'static>(c: &C) -> Hypothesis {
    let c = c.clone();
    Hypothesis::deterministic(move |x| {
        c.evaluate(x)?
            .label()
            .map(Label::value)
            .ok_or_else(|| Error::Domain(format!("classifier undefined at {x:?}")))
    })
}

/// `x -> sign(<w, x> + b)` with `sign(0) = +1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.iter().all(|v| *v == 0.0) {
            return Err(Error::Parameter("half-space normal must be nonzero".into()));
        }
        Ok(Halfspace { normal, offset })
    }

    pub fn homogeneous(normal: Vec<f64>) -> Result<Self> {
        Self::new(normal, 0.0)
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) + self.offset
    }
}

impl Classifier for Halfspace {
    fn dim(&self) -> usize {
        self.normal.len()
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> Entry {
        Entry::from_label(Label::from_sign(self.margin(x)))
    }
}

/// Partial homogeneous classifier on the sphere, undefined where `|<w, x>| < gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginClassifier {
    pub normal: Vec<f64>,
    pub margin: f64,
}

impl MarginClassifier {
    pub fn new(normal: Vec<f64>, margin: f64) -> Result<Self> {
        if (norm(&normal) - 1.0).abs() > 1e-10 {
            return Err(Error::Parameter(format!(
                "margin classifier normal must be a unit vector (norm {})",
                norm(&normal)
            )));
        }
        if !(margin > 0.0) {
            return Err(Error::Parameter(format!("margin must be positive, got {margin}")));
        }
        Ok(MarginClassifier { normal, margin })
    }
}

impl Classifier for MarginClassifier {
    fn dim(&self) -> usize {
        self.normal.len()
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> Entry {
        let v = dot(&self.normal, x);
        if v.abs() < self.margin {
            Entry::Star
        } else {
            Entry::from_label(Label::from_sign(v))
        }
    }
}

/// Majority vote of three homogeneous half-spaces of equal dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Majority3Classifier {
    pub members: [Halfspace; 3],
}

impl Majority3Classifier {
    pub fn new(h1: Halfspace, h2: Halfspace, h3: Halfspace) -> Result<Self> {
        for h in [&h1, &h2, &h3] {
            if h.offset != 0.0 {
                return Err(Error::Parameter("majority members must be homogeneous".into()));
            }
        }
        check_dim(h1.dim(), h2.dim())?;
        check_dim(h1.dim(), h3.dim())?;
        Ok(Majority3Classifier {
            members: [h1, h2, h3],
        })
    }

    pub fn votes(&self, x: &[f64]) -> [Label; 3] {
        self.members
            .each_ref()
            .map(|h| Label::from_sign(h.margin(x)))
    }
}

impl Classifier for Majority3Classifier {
    fn dim(&self) -> usize {
        self.members[0].dim()
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> Entry {
        let s: f64 = self.votes(x).iter().map(|l| l.value()).sum();
        Entry::from_label(Label::from_sign(s))
    }
}

/// `m` uniform points of `S^n` (in `R^{n+1}`) outside the margin band of
/// `normal`, labeled by the side they fall on, with uniform weights.
pub fn sample_margin_distribution(
    n: usize,
    normal: &[f64],
    gamma: f64,
    m: usize,
    seed: u64,
) -> Result<FiniteDistribution> {
    check_dim(n + 1, normal.len())?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("margin must lie in (0,1), got {gamma}")));
    }
    if m == 0 {
        return Err(Error::Parameter("need at least one atom".into()));
    }
    let classifier = MarginClassifier::new(normal.to_vec(), gamma)?;
    let mut r = rng::seeded(seed);
    let mut examples = Vec::with_capacity(m);
    while examples.len() < m {
        let mut rejected = 0u64;
        let x = loop {
            let x = rng::unit_vector(&mut r, n + 1);
            if let Some(l) = classifier.evaluate_unchecked(&x).label() {
                break (x, l);
            }
            rejected += 1;
            if rejected > MAX_CONSECUTIVE_REJECTIONS {
                return Err(Error::Parameter(format!(
                    "margin sampling stalled: {rejected} consecutive rejections at gamma = {gamma}, n = {n}"
                )));
            }
        };
        examples.push(LabeledExample::new(x.0, x.1));
    }
    FiniteDistribution::uniform(examples)
}

/// Source classes a reduction can be verified against.
#[derive(Debug, Clone)]
pub enum ConceptClass {
    Finite(FiniteConceptClass),
    /// All half-spaces in `R^dim`, homogeneous or affine.
    Halfspaces { dim: usize, homogeneous: bool },
    /// Every labeling of the domain, `{+1, -1}^X`.
    AllLabelings,
}

impl ConceptClass {
    pub fn opt(&self, dist: &FiniteDistribution) -> Result<OptValue> {
        match self {
            ConceptClass::Finite(c) => {
                let mut best = f64::INFINITY;
                for i in 0..c.num_concepts() {
                    best = best.min(c.concept_loss(i, dist)?);
                }
                Ok(OptValue {
                    value: LossValue::finite(best)?,
                    tolerance: 0.0,
                    exact: true,
                })
            }
            ConceptClass::AllLabelings => {
                let mut by_point: HashMap<Vec<u64>, (f64, f64)> = HashMap::new();
                for atom in dist.atoms() {
                    let e = by_point.entry(point_key(&atom.example.point)).or_default();
                    match atom.example.label {
                        Label::Pos => e.0 += atom.weight,
                        Label::Neg => e.1 += atom.weight,
                    }
                }
                let v: f64 = by_point.values().map(|(p, q)| p.min(*q)).sum();
                Ok(OptValue {
                    value: LossValue::finite(v)?,
                    tolerance: 0.0,
                    exact: true,
                })
            }
            ConceptClass::Halfspaces { dim, homogeneous } => {
                if let Some(d) = dist.dim() {
                    check_dim(*dim, d)?;
                }
                let lifted = if *homogeneous {
                    dist.clone()
                } else {
                    crate::sco::lift_affine(dist)?
                };
                if crate::sco::hard_svm(&lifted, true)?.is_feasible() {
                    return Ok(OptValue {
                        value: LossValue::Finite(0.0),
                        tolerance: 0.0,
                        exact: true,
                    });
                }
                let fit = crate::representations::best_halfspace_fit(
                    &lifted,
                    &crate::representations::FitOptions::default(),
                )?;
                Ok(OptValue {
                    value: LossValue::finite(fit.loss)?,
                    tolerance: 0.0,
                    exact: fit.exact,
                })
            }
        }
    }

    pub fn is_realizable(&self, dist: &FiniteDistribution) -> Result<bool> {
        Ok(self.opt(dist)?.value == LossValue::Finite(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_cube(n: usize) -> FiniteConceptClass {
        let points = (0..n).map(|j| vec![j as f64]).collect();
        let table = (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|j| if mask >> j & 1 == 1 { Entry::Pos } else { Entry::Neg })
                    .collect()
            })
            .collect();
        FiniteConceptClass::new(points, table, None).unwrap()
    }

    #[test]
    fn projection_class_shapes() {
        let u1 = projection_class(1).unwrap();
        assert_eq!(u1.num_concepts(), 1);
        assert_eq!(u1.num_points(), 2);
        assert_eq!(u1.table()[0], vec![Entry::Pos, Entry::Neg]);
        let u4 = projection_class(4).unwrap();
        assert_eq!((u4.num_concepts(), u4.num_points()), (4, 16));
        for (i, row) in u4.table().iter().enumerate() {
            for (p, e) in u4.points().iter().zip(row) {
                assert_eq!(e.label().unwrap().value(), p[i]);
            }
        }
        assert!(matches!(projection_class(17), Err(Error::Resource(_))));
    }

    #[test]
    fn vc_small_cases() {
        let single = FiniteConceptClass::new(vec![vec![0.0], vec![1.0]], vec![vec![Entry::Pos, Entry::Neg]], None).unwrap();
        assert_eq!(vc_dimension(&single).unwrap(), 0);
        assert_eq!(vc_dimension(&full_cube(3)).unwrap(), 3);
        assert_eq!(vc_dimension(&projection_class(4).unwrap()).unwrap(), 2);
    }

    #[test]
    fn vc_budget_is_enforced() {
        let u8 = projection_class(8).unwrap();
        let err = vc_dimension_with_budget(&u8, 1000).unwrap_err();
        assert!(err.to_string().contains("sampled"), "{err}");
        assert!(vc_lower_bound_sampled(&u8, 20_000, 3) <= 3);
    }

    #[test]
    fn partial_shattering_needs_support() {
        // Both labelings of column 0 exist, but the negative one comes from a
        // concept undefined on column 1, so {0, 1} is not shattered.
        let class = FiniteConceptClass::new(
            vec![vec![0.0], vec![1.0]],
            vec![
                vec![Entry::Pos, Entry::Pos],
                vec![Entry::Neg, Entry::Star],
                vec![Entry::Pos, Entry::Neg],
                vec![Entry::Neg, Entry::Neg],
            ],
            None,
        )
        .unwrap();
        assert!(class.shatters(&[0]));
        assert!(!class.shatters(&[0, 1]));
        assert_eq!(vc_dimension(&class).unwrap(), 1);
        assert!(!class.is_total());
        assert!(matches!(dual_class(&class), Err(Error::Unsupported(_))));
    }

    #[test]
    fn dual_of_projections() {
        let u4 = projection_class(4).unwrap();
        let dual = dual_class(&u4).unwrap();
        assert_eq!(dual.class.num_concepts(), 16);
        for (j, row) in dual.class.table().iter().enumerate() {
            for (i, e) in row.iter().enumerate() {
                assert_eq!(*e, u4.table()[i][dual.groups[j][0]]);
            }
        }
        assert_eq!(dual_vc_dimension(&u4).unwrap(), 4);
        let single_point = FiniteConceptClass::new(vec![vec![0.0]], vec![vec![Entry::Pos], vec![Entry::Neg]], None).unwrap();
        assert_eq!(dual_vc_dimension(&single_point).unwrap(), 0);
    }

    #[test]
    fn double_dual_recovers_table_up_to_merges() {
        let u3 = projection_class(3).unwrap();
        let dd = dual_class(&dual_class(&u3).unwrap().class).unwrap();
        assert_eq!(dd.class.table(), u3.table());
    }

    #[test]
    fn duplicate_rows_rejected() {
        let err = FiniteConceptClass::new(vec![vec![0.0]], vec![vec![Entry::Pos], vec![Entry::Pos]], None);
        assert!(matches!(err, Err(Error::Construction(_))));
    }

    #[test]
    fn json_roundtrip_and_format() {
        let u2 = projection_class(2).unwrap();
        let s = u2.to_json().unwrap();
        assert!(s.contains("\"+1\"") && s.contains("\"points\"") && s.contains("\"names\""));
        assert_eq!(FiniteConceptClass::from_json(&s).unwrap(), u2);
        let bad = r#"{"points": [[0.0]], "table": [["2"]]}"#;
        assert!(FiniteConceptClass::from_json(bad).is_err());
    }

    #[test]
    fn evaluate_classifiers() {
        let h = Halfspace::homogeneous(vec![1.0, 0.0]).unwrap();
        assert_eq!(h.evaluate(&[0.5, 3.0]).unwrap(), Entry::Pos);
        assert_eq!(h.evaluate(&[0.0, -3.0]).unwrap(), Entry::Pos);
        assert!(matches!(h.evaluate(&[1.0]), Err(Error::DimensionMismatch { .. })));
        let m = MarginClassifier::new(vec![1.0, 0.0], 1.0 / 3.0).unwrap();
        assert_eq!(m.evaluate(&[0.2, 0.9]).unwrap(), Entry::Star);
        assert_eq!(m.evaluate(&[-0.5, 0.1]).unwrap(), Entry::Neg);
        let maj = Majority3Classifier::new(
            Halfspace::homogeneous(vec![1.0, 0.0]).unwrap(),
            Halfspace::homogeneous(vec![0.0, 1.0]).unwrap(),
            Halfspace::homogeneous(vec![-1.0, -1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(maj.evaluate(&[1.0, 1.0]).unwrap(), Entry::Pos);
        assert!(Halfspace::homogeneous(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn margin_sampling() {
        let w = vec![0.0, 0.0, 1.0];
        let d = sample_margin_distribution(2, &w, 1.0 / 3.0, 50, 11).unwrap();
        let c = MarginClassifier::new(w.clone(), 1.0 / 3.0).unwrap();
        for a in d.atoms() {
            assert!(dot(&w, &a.example.point).abs() >= 1.0 / 3.0);
        }
        assert_eq!(crate::learning::zero_one_loss(&d, &classifier_hypothesis(&c)).unwrap(), 0.0);
        assert_eq!(d, sample_margin_distribution(2, &w, 1.0 / 3.0, 50, 11).unwrap());
        assert!(sample_margin_distribution(2, &w, 1.5, 5, 0).is_err());
    }

    #[test]
    fn margin_sampling_stall_is_reported() {
        // In S^100 the band |<w,x>| < 0.9 holds essentially always.
        let mut w = vec![0.0; 101];
        w[0] = 1.0;
        let err = sample_margin_distribution(100, &w, 0.9, 1, 0).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }

    #[test]
    fn opt_over_finite_and_all_labelings() {
        let u2 = projection_class(2).unwrap();
        // (+1,+1) labeled +1 and (-1,+1) labeled +1: h2 is consistent.
        let d = FiniteDistribution::uniform(vec![
            LabeledExample::new(vec![1.0, 1.0], Label::Pos),
            LabeledExample::new(vec![-1.0, 1.0], Label::Pos),
        ])
        .unwrap();
        assert_eq!(ConceptClass::Finite(u2).opt(&d).unwrap().value, LossValue::Finite(0.0));
        let contradictory = FiniteDistribution::new(vec![
            (LabeledExample::new(vec![1.0], Label::Pos), 0.7),
            (LabeledExample::new(vec![1.0], Label::Neg), 0.3),
        ])
        .unwrap();
        let v = ConceptClass::AllLabelings.opt(&contradictory).unwrap().value.as_f64();
        assert!((v - 0.3).abs() < 1e-15);
    }
}
