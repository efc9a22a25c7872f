use std::collections::HashSet;
use std::sync::Arc;

use crate::classes::{ConceptClass, FiniteConceptClass};
use crate::error::{check_dim, Error, Result};
use crate::learning::{Hypothesis, Label, LabeledExample, LossValue};
use crate::sco::{ConvexDomain, ExampleLoss, LossKind, ScoTask};

use super::{BetaRule, Reduction, Target};

/// `l_{x,y}(w) = d(w, V_{x,y}) / (d(w, V_{x,y}) + d(w, V_{x,-y}))` on `[0, 1]`,
/// where `V_{x,y}` collects the parameters of the concepts labeling `x` by `y`.
/// Target examples carry the domain index of `x` as their single coordinate.
#[derive(Debug, Clone)]
pub struct NonConvexLoss {
    positive: Vec<Vec<f64>>,
    negative: Vec<Vec<f64>>,
    params: Vec<f64>,
}

impl NonConvexLoss {
    fn sets(&self, index: usize, label: Label) -> Result<(&[f64], &[f64])> {
        let (pos, neg) = (
            self.positive
                .get(index)
                .ok_or_else(|| Error::Domain(format!("no domain point with index {index}")))?,
            &self.negative[index],
        );
        Ok(match label {
            Label::Pos => (pos, neg),
            Label::Neg => (neg, pos),
        })
    }

    /// `l_{x_index, label}(w)`. The `-1` loss is computed as the complement of
    /// the `+1` loss so the pair sums to exactly one in floating point.
    pub fn loss_at(&self, index: usize, label: Label, w: f64) -> Result<f64> {
        let (pos, neg) = self.sets(index, Label::Pos)?;
        let a = set_distance(w, pos);
        let b = set_distance(w, neg);
        let q = a / (a + b);
        Ok(match label {
            Label::Pos => q,
            Label::Neg => 1.0 - q,
        })
    }
}

fn set_distance(w: f64, set: &[f64]) -> f64 {
    set.iter().map(|v| (w - v).abs()).fold(f64::INFINITY, f64::min)
}

fn index_of(z: &LabeledExample) -> Result<usize> {
    check_dim(1, z.point.len())?;
    let v = z.point[0];
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::Domain(format!("{v} is not a domain index")));
    }
    Ok(v as usize)
}

impl ExampleLoss for NonConvexLoss {
    fn kind(&self) -> LossKind {
        LossKind::NonConvex
    }

    fn value(&self, z: &LabeledExample, w: &[f64]) -> Result<LossValue> {
        check_dim(1, w.len())?;
        LossValue::finite(self.loss_at(index_of(z)?, z.label, w[0])?)
    }

    fn subgradient(&self, _z: &LabeledExample, _w: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported("the set-distance ratio loss is not convex".into()))
    }

    fn lipschitz(&self, _z: &LabeledExample) -> Option<f64> {
        None
    }

    fn anchors(&self) -> Vec<Vec<f64>> {
        self.params.iter().map(|p| vec![*p]).collect()
    }
}

/// Exact `(alpha, 2 alpha)`-reduction from a finite total class to a
/// non-convex loss on `W = [0, 1]`. Concept `c` is placed at `params[c]`;
/// `r_in(x, y) = (index of x, y)` and `r_out(w)(x) = sign(l_{x,-1}(w) - l_{x,+1}(w))`.
pub fn nonconvex_reduction(class: &FiniteConceptClass, params: &[f64], alpha: f64) -> Result<Reduction> {
    if !class.is_total() {
        return Err(Error::Construction("the class must be total".into()));
    }
    check_dim(class.num_concepts(), params.len())?;
    if params.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Construction("parameters must lie in [0, 1]".into()));
    }
    let distinct: HashSet<u64> = params.iter().map(|p| (p + 0.0).to_bits()).collect();
    if distinct.len() != params.len() {
        return Err(Error::Construction("parameter assignment must be injective".into()));
    }
    let n = class.num_points();
    let mut positive = vec![Vec::new(); n];
    let mut negative = vec![Vec::new(); n];
    for (c, row) in class.table().iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            match e.label() {
                Some(Label::Pos) => positive[j].push(params[c]),
                Some(Label::Neg) => negative[j].push(params[c]),
                None => unreachable!("total class"),
            }
        }
    }
    if let Some(j) = (0..n).find(|&j| positive[j].is_empty() || negative[j].is_empty()) {
        return Err(Error::Construction(format!(
            "every concept agrees on point {:?}; the loss would be undefined there",
            class.points()[j]
        )));
    }
    let loss = Arc::new(NonConvexLoss {
        positive,
        negative,
        params: params.to_vec(),
    });
    let task = ScoTask {
        name: format!("set-distance ratio ({} concepts)", params.len()),
        domain: ConvexDomain::cube(vec![0.0], vec![1.0])?,
        loss: loss.clone(),
        infinity_valued: false,
        convex: false,
    };
    let in_class = class.clone();
    let out_class = class.clone();
    Reduction::new(
        "non-convex",
        move |z: &LabeledExample| {
            let j = in_class
                .point_index(&z.point)
                .ok_or_else(|| Error::Domain(format!("{:?} is not a domain point", z.point)))?;
            Ok(LabeledExample::new(vec![j as f64], z.label))
        },
        move |sol: &[f64]| {
            check_dim(1, sol.len())?;
            let w = sol[0];
            let loss = loss.clone();
            let class = out_class.clone();
            Ok(Hypothesis::deterministic(move |x| {
                let j = class
                    .point_index(x)
                    .ok_or_else(|| Error::Domain(format!("{x:?} is not a domain point")))?;
                let diff = loss.loss_at(j, Label::Neg, w)? - loss.loss_at(j, Label::Pos, w)?;
                Ok(Label::from_sign(diff).value())
            }))
        },
        alpha,
        BetaRule::TwiceAlpha,
        true,
        ConceptClass::Finite(class.clone()),
        Target::Sco(task),
    )
}

/// `U_d` restricted to the points where its concepts disagree, so every
/// label is produced by some concept at every point.
#[cfg(test)]
pub(crate) fn mixed_projection_class(d: usize) -> FiniteConceptClass {
    crate::classes::projection_class(d).unwrap().disagreement_restriction().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::projection_class;
    use crate::learning::{zero_one_loss, FiniteDistribution};
    use crate::reductions::pushforward;
    use crate::rng;
    use rand::Rng as _;

    fn params(n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn consistent_parameter_has_zero_loss_and_losses_sum_to_one() {
        let class = mixed_projection_class(3);
        let p = params(3);
        let red = nonconvex_reduction(&class, &p, 0.1).unwrap();
        let Target::Sco(task) = &red.target else { panic!() };
        let mut r = rng::seeded(1);
        for (j, x) in class.points().iter().enumerate() {
            for c in 0..3 {
                let y = class.table()[c][j].label().unwrap();
                let z = red.map_example(&LabeledExample::new(x.clone(), y)).unwrap();
                assert_eq!(task.loss.value(&z, &[p[c]]).unwrap(), LossValue::Finite(0.0));
            }
            for _ in 0..50 {
                let w: f64 = r.gen();
                let zp = LabeledExample::new(vec![j as f64], Label::Pos);
                let zn = LabeledExample::new(vec![j as f64], Label::Neg);
                let s = task.loss.value(&zp, &[w]).unwrap().as_f64() + task.loss.value(&zn, &[w]).unwrap().as_f64();
                assert!((s - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pulled_back_loss_at_most_twice_target() {
        let class = mixed_projection_class(4);
        let red = nonconvex_reduction(&class, &params(4), 0.1).unwrap();
        let Target::Sco(task) = &red.target else { panic!() };
        let mut r = rng::seeded(2);
        for _ in 0..100 {
            let k = r.gen_range(1..6);
            let examples: Vec<(LabeledExample, f64)> = (0..k)
                .map(|_| {
                    let j = r.gen_range(0..class.num_points());
                    let c = r.gen_range(0..4);
                    let y = class.table()[c][j].label().unwrap();
                    (LabeledExample::new(class.points()[j].clone(), y), r.gen_range(0.1..1.0))
                })
                .collect();
            let total: f64 = examples.iter().map(|e| e.1).sum();
            let d = FiniteDistribution::new(examples.into_iter().map(|(e, w)| (e, w / total)).collect()).unwrap();
            let pd = pushforward(&red, &d).unwrap();
            let w: f64 = r.gen();
            let src = zero_one_loss(&d, &red.pull_back(&[w]).unwrap()).unwrap();
            let tgt = task.loss_value(&pd, &[w]).unwrap().as_f64();
            assert!(src <= 2.0 * tgt + 1e-12, "{src} > 2 * {tgt}");
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let class = projection_class(2).unwrap();
        assert!(matches!(nonconvex_reduction(&class, &[0.2, 0.2], 0.1), Err(Error::Construction(_))));
        assert!(matches!(nonconvex_reduction(&class, &[0.2, 1.2], 0.1), Err(Error::Construction(_))));
        // (1, 1) is labeled + by both concepts, so the loss for label - is undefined.
        assert!(matches!(nonconvex_reduction(&class, &[0.2, 0.6], 0.1), Err(Error::Construction(_))));
        let single = projection_class(1).unwrap();
        assert!(matches!(nonconvex_reduction(&single, &[0.5], 0.1), Err(Error::Construction(_))));
    }
}
