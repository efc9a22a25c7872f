use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::classes::FiniteConceptClass;
use crate::error::{Error, Result};
use crate::learning::{FiniteDistribution, Label, LabeledExample};
use crate::rng;
use crate::vecops::dot;

pub const DEFAULT_SUITE_SIZE: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub id: String,
    pub dist: FiniteDistribution,
}

fn random_weights(r: &mut rng::Rng, examples: Vec<LabeledExample>) -> Result<FiniteDistribution> {
    let raw: Vec<f64> = (0..examples.len()).map(|_| r.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    FiniteDistribution::new(examples.into_iter().zip(raw).map(|(e, w)| (e, w / total)).collect())
}

/// Point masses, two-atom, uniform and random mixtures over a fixed pool of
/// labeled examples (assumed realizable as a whole).
fn suite_over_pool(pool: &[LabeledExample], count: usize, r: &mut rng::Rng) -> Result<Vec<SuiteEntry>> {
    if pool.is_empty() {
        return Err(Error::Parameter("empty example pool".into()));
    }
    let pos: Vec<&LabeledExample> = pool.iter().filter(|z| z.label == Label::Pos).collect();
    let neg: Vec<&LabeledExample> = pool.iter().filter(|z| z.label == Label::Neg).collect();
    let mut out = Vec::with_capacity(count);
    let push = |id: String, dist: FiniteDistribution, out: &mut Vec<SuiteEntry>| {
        if out.len() < count {
            out.push(SuiteEntry { id, dist });
        }
    };
    for (tag, side) in [("pos", &pos), ("neg", &neg)] {
        if let Some(z) = side.choose(r) {
            push(format!("point-mass-{tag}"), FiniteDistribution::point_mass((*z).clone()), &mut out);
        }
    }
    if let (Some(a), Some(b)) = (pos.choose(r), neg.choose(r)) {
        let lam = r.gen_range(0.1..0.9);
        push(
            "two-atom-opposite".into(),
            FiniteDistribution::new(vec![((*a).clone(), lam), ((*b).clone(), 1.0 - lam)])?,
            &mut out,
        );
    }
    if pool.len() >= 2 {
        let pair: Vec<LabeledExample> = pool.choose_multiple(r, 2).cloned().collect();
        push("two-atom-random".into(), FiniteDistribution::uniform(pair)?, &mut out);
    }
    push("uniform".into(), FiniteDistribution::uniform(pool.to_vec())?, &mut out);
    let mut k = 0;
    while out.len() < count {
        let size = r.gen_range(1..=pool.len());
        let pick: Vec<LabeledExample> = pool.choose_multiple(r, size).cloned().collect();
        push(format!("mixture-{k}"), random_weights(r, pick)?, &mut out);
        k += 1;
    }
    Ok(out)
}

/// Distributions over distinct one-dimensional points with arbitrary labels,
/// covering the full range of positive-label mass.
pub fn label_suite(count: usize, seed: u64) -> Result<Vec<SuiteEntry>> {
    let mut r = rng::seeded(seed);
    let mut out = Vec::with_capacity(count);
    let ex = |i: usize, y: Label| LabeledExample::new(vec![i as f64], y);
    out.push(SuiteEntry {
        id: "point-mass-pos".into(),
        dist: FiniteDistribution::point_mass(ex(0, Label::Pos)),
    });
    out.push(SuiteEntry {
        id: "point-mass-neg".into(),
        dist: FiniteDistribution::point_mass(ex(0, Label::Neg)),
    });
    for p in [0.5, 0.7, 0.3] {
        out.push(SuiteEntry {
            id: format!("two-atom-p{p}"),
            dist: FiniteDistribution::new(vec![(ex(0, Label::Pos), p), (ex(1, Label::Neg), 1.0 - p)])?,
        });
    }
    out.push(SuiteEntry {
        id: "uniform".into(),
        dist: FiniteDistribution::uniform((0..6).map(|i| ex(i, if i % 3 == 0 { Label::Neg } else { Label::Pos })).collect())?,
    });
    let mut k = 0;
    while out.len() < count {
        let m = r.gen_range(1..=8);
        let pool = (0..m)
            .map(|i| ex(i, if r.gen::<bool>() { Label::Pos } else { Label::Neg }))
            .collect();
        out.push(SuiteEntry {
            id: format!("mixture-{k}"),
            dist: random_weights(&mut r, pool)?,
        });
        k += 1;
    }
    out.truncate(count);
    Ok(out)
}

/// `atoms` points of `[-1, 1]^dim` labeled by a random half-space (through
/// the origin when `homogeneous`), each at distance at least `margin` from
/// its boundary, and `count` distributions over them.
pub fn separable_suite(
    dim: usize,
    atoms: usize,
    homogeneous: bool,
    margin: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<SuiteEntry>> {
    if dim == 0 || atoms == 0 {
        return Err(Error::Parameter("need dim >= 1 and atoms >= 1".into()));
    }
    let mut r = rng::seeded(seed);
    let w = rng::unit_vector(&mut r, dim);
    let b = if homogeneous { 0.0 } else { r.gen_range(-0.3..0.3) };
    let mut pool = Vec::with_capacity(atoms);
    let mut draws = 0u64;
    while pool.len() < atoms {
        draws += 1;
        if draws > 1_000_000 {
            return Err(Error::Parameter(format!("margin {margin} leaves no room in [-1,1]^{dim}")));
        }
        let x: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..=1.0)).collect();
        let s = dot(&w, &x) + b;
        if s.abs() >= margin {
            pool.push(LabeledExample::new(x, Label::from_sign(s)));
        }
    }
    suite_over_pool(&pool, count, &mut r)
}

/// Distributions realizable by one concept of a finite class each, on random
/// subsets of that concept's support.
pub fn finite_class_suite(class: &FiniteConceptClass, count: usize, seed: u64) -> Result<Vec<SuiteEntry>> {
    let mut r = rng::seeded(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let c = r.gen_range(0..class.num_concepts());
        let pool = class.realizable_examples(c);
        if pool.is_empty() {
            continue;
        }
        let k = out.len();
        let dist = match k % 3 {
            0 => FiniteDistribution::point_mass(pool.choose(&mut r).unwrap().clone()),
            1 => FiniteDistribution::uniform(pool.clone())?,
            _ => {
                let size = r.gen_range(1..=pool.len());
                let chosen: Vec<_> = pool.choose_multiple(&mut r, size).cloned().collect();
                random_weights(&mut r, chosen)?
            }
        };
        out.push(SuiteEntry {
            id: format!("concept-{c}-{k}"),
            dist,
        });
    }
    Ok(out)
}
