use rand::Rng as _;
use serde::Serialize;

use crate::classes::{classifier_hypothesis, Classifier, Majority3Classifier};
use crate::error::{Error, Result};
use crate::learning::{zero_one_loss, FiniteDistribution, LabeledExample};
use crate::rng;

const THIRD_TOLERANCE: f64 = 1e-12;
const MAX_CELL_DRAWS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Majority3Record {
    pub id: usize,
    pub losses: [f64; 3],
    /// Index of the member with the smallest loss (first on ties).
    pub winner: usize,
    pub min_loss: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Majority3Report {
    pub records: Vec<Majority3Record>,
    pub all_pass: bool,
}

/// For each distribution realizable by the majority vote, checks that some
/// single member has 0/1 loss at most 1/3.
pub fn majority3_identity_check(c: &Majority3Classifier, suite: &[FiniteDistribution]) -> Result<Majority3Report> {
    let majority = classifier_hypothesis(c);
    let members: Vec<_> = c.members.iter().map(classifier_hypothesis).collect();
    let mut records = Vec::with_capacity(suite.len());
    for (id, dist) in suite.iter().enumerate() {
        let own = zero_one_loss(dist, &majority)?;
        if own != 0.0 {
            return Err(Error::Precondition(format!(
                "distribution {id} is not realizable by the majority vote (loss {own})"
            )));
        }
        let mut losses = [0.0; 3];
        for (l, h) in losses.iter_mut().zip(&members) {
            *l = zero_one_loss(dist, h)?;
        }
        let winner = (0..3).fold(0, |b, i| if losses[i] < losses[b] { i } else { b });
        let min_loss = losses[winner];
        records.push(Majority3Record {
            id,
            losses,
            winner,
            min_loss,
            pass: min_loss <= 1.0 / 3.0 + THIRD_TOLERANCE,
        });
    }
    let all_pass = records.iter().all(|r| r.pass);
    Ok(Majority3Report { records, all_pass })
}

/// Three equally weighted atoms, one in each cell where exactly one member
/// disagrees with the other two, labeled by the majority. Every member errs
/// on exactly one atom, so each loss is 1/3.
pub fn planted_majority3_instance(c: &Majority3Classifier, seed: u64) -> Result<FiniteDistribution> {
    let mut r = rng::seeded(seed);
    let mut cells: [Option<LabeledExample>; 3] = [None, None, None];
    for _ in 0..MAX_CELL_DRAWS {
        let x = rng::gaussian_vec(&mut r, c.dim());
        let v = c.votes(&x);
        let odd = if v[1] == v[2] && v[0] != v[1] {
            0
        } else if v[0] == v[2] && v[1] != v[0] {
            1
        } else if v[0] == v[1] && v[2] != v[0] {
            2
        } else {
            continue;
        };
        if cells[odd].is_none() {
            let label = c.evaluate_unchecked(&x).label().expect("majority is total");
            cells[odd] = Some(LabeledExample::new(x, label));
        }
        if cells.iter().all(Option::is_some) {
            return FiniteDistribution::uniform(cells.into_iter().map(Option::unwrap).collect());
        }
    }
    Err(Error::Construction(
        "could not find all three single-disagreement cells; members may be degenerate".into(),
    ))
}

/// Random distributions on Gaussian points labeled by the majority vote.
pub fn random_majority3_suite(
    c: &Majority3Classifier,
    count: usize,
    atoms: usize,
    seed: u64,
) -> Result<Vec<FiniteDistribution>> {
    (0..count)
        .map(|i| {
            let mut r = rng::derived(seed, i as u64);
            let weighted = (0..atoms.max(1))
                .map(|_| {
                    let x = rng::gaussian_vec(&mut r, c.dim());
                    let y = c.evaluate_unchecked(&x).label().expect("majority is total");
                    (LabeledExample::new(x, y), r.gen_range(0.05..1.0))
                })
                .collect::<Vec<_>>();
            let total: f64 = weighted.iter().map(|w| w.1).sum();
            FiniteDistribution::new(weighted.into_iter().map(|(e, w)| (e, w / total)).collect())
        })
        .collect()
}
