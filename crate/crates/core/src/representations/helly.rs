use itertools::Itertools;
use serde::Serialize;

use crate::classes::{Entry, FiniteConceptClass};
use crate::error::{check_dim, Error, Result};
use crate::learning::{FiniteDistribution, LabeledExample};
use crate::sco::hard_svm;

use super::Representation;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HellyFailure {
    pub sample: usize,
    /// Minimal subsets (indices into the sample, at most `d + 1` long) whose
    /// images admit no consistent homogeneous half-space.
    pub subsets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HellyReport {
    pub exact_on_samples: bool,
    /// Per sample, a `w` with `sign<w, r(x)> = y` on the whole image, if found.
    pub witnesses: Vec<Option<Vec<f64>>>,
    pub failures: Vec<HellyFailure>,
}

/// Certifies exactness of an `alpha`-representation on finite realizable
/// samples: when `alpha < 1 / (d + 1)` every realizable sample must have a
/// consistent half-space on its image. A hard-SVM solution is the witness;
/// on failure the minimal inconsistent subsets of size `<= d + 1` are listed.
pub fn helly_certify(
    repr: &Representation,
    class: &FiniteConceptClass,
    d: usize,
    alpha: f64,
    samples: &[Vec<LabeledExample>],
) -> Result<HellyReport> {
    let threshold = 1.0 / (d as f64 + 1.0);
    if !(alpha >= 0.0 && alpha < threshold) {
        return Err(Error::Precondition(format!(
            "alpha = {alpha} must be below 1/(d+1) = {threshold} for the Helly argument"
        )));
    }
    check_dim(d, repr.target_dim())?;
    let mut witnesses = Vec::with_capacity(samples.len());
    let mut failures = Vec::new();
    for (s, sample) in samples.iter().enumerate() {
        if sample.is_empty() {
            return Err(Error::Precondition(format!("sample {s} is empty")));
        }
        check_realizable(class, sample, s)?;
        let image: Vec<LabeledExample> = sample
            .iter()
            .map(|z| repr.apply_example(z))
            .collect::<Result<_>>()?;
        match separator(&image)? {
            Some(w) => witnesses.push(Some(w)),
            None => {
                witnesses.push(None);
                failures.push(HellyFailure {
                    sample: s,
                    subsets: minimal_failing_subsets(&image, d + 1)?,
                });
            }
        }
    }
    Ok(HellyReport {
        exact_on_samples: failures.is_empty(),
        witnesses,
        failures,
    })
}

fn check_realizable(class: &FiniteConceptClass, sample: &[LabeledExample], s: usize) -> Result<()> {
    let realized = (0..class.num_concepts()).any(|c| {
        sample
            .iter()
            .all(|z| matches!(class.entry(c, &z.point), Ok(e) if e == Entry::from_label(z.label)))
    });
    if realized {
        Ok(())
    } else {
        Err(Error::Precondition(format!("sample {s} is not realizable by the class")))
    }
}

fn separator(image: &[LabeledExample]) -> Result<Option<Vec<f64>>> {
    // Duplicate examples are harmless; opposite labels on one point are caught by hard_svm.
    let n = image.len() as f64;
    let dist = FiniteDistribution::new(image.iter().map(|z| (z.clone(), 1.0 / n)).collect())?;
    Ok(hard_svm(&dist, true)?.report().map(|r| r.point.clone()))
}

fn minimal_failing_subsets(image: &[LabeledExample], max_size: usize) -> Result<Vec<Vec<usize>>> {
    let mut failing: Vec<Vec<usize>> = Vec::new();
    for size in 1..=max_size.min(image.len()) {
        for subset in (0..image.len()).combinations(size) {
            if failing.iter().any(|f| f.iter().all(|i| subset.contains(i))) {
                continue;
            }
            let part: Vec<LabeledExample> = subset.iter().map(|&i| image[i].clone()).collect();
            if separator(&part)?.is_none() {
                failing.push(subset);
            }
        }
    }
    Ok(failing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::Label;
    use crate::rng;
    use crate::vecops::dot;
    use rand::Rng as _;

    fn ex(p: &[f64], y: Label) -> LabeledExample {
        LabeledExample::new(p.to_vec(), y)
    }

    fn all_labelings(points: Vec<Vec<f64>>) -> FiniteConceptClass {
        let n = points.len();
        let table = (0..1usize << n)
            .map(|m| (0..n).map(|j| if m >> j & 1 == 1 { Entry::Pos } else { Entry::Neg }).collect())
            .collect();
        FiniteConceptClass::new(points, table, None).unwrap()
    }

    #[test]
    fn refuses_alpha_at_threshold() {
        let class = all_labelings(vec![vec![0.0]]);
        let repr = Representation::Identity { dim: 2 };
        let err = helly_certify(&repr, &class, 2, 1.0 / 3.0, &[]);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn identity_on_halfspace_class_always_witnessed() {
        let mut r = rng::seeded(8);
        let points: Vec<Vec<f64>> = (0..10).map(|_| rng::unit_vector(&mut r, 2)).collect();
        let normals: Vec<Vec<f64>> = (0..6).map(|_| rng::unit_vector(&mut r, 2)).collect();
        let table = normals
            .iter()
            .map(|w| points.iter().map(|x| Entry::from_label(Label::from_sign(dot(w, x)))).collect())
            .collect::<Vec<Vec<Entry>>>();
        let mut uniq = table.clone();
        uniq.sort_by_key(|row| format!("{row:?}"));
        uniq.dedup();
        let class = FiniteConceptClass::new(points.clone(), uniq, None).unwrap();
        let samples: Vec<Vec<LabeledExample>> = (0..30)
            .map(|_| {
                let c = r.gen_range(0..class.num_concepts());
                (0..points.len())
                    .filter(|_| r.gen::<bool>())
                    .map(|j| ex(&points[j], class.table()[c][j].label().unwrap()))
                    .collect::<Vec<_>>()
            })
            .filter(|s| !s.is_empty())
            .collect();
        let rep = helly_certify(&Representation::Identity { dim: 2 }, &class, 2, 0.2, &samples).unwrap();
        assert!(rep.exact_on_samples);
        for (s, w) in samples.iter().zip(&rep.witnesses) {
            let w = w.as_ref().unwrap();
            assert!(s.iter().all(|z| Label::from_sign(dot(w, &z.point)) == z.label));
        }
    }

    #[test]
    fn planted_violation_is_localized() {
        // a, b labeled +, a + b labeled -: no homogeneous half-space fits.
        let src = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let class = all_labelings(src.clone());
        let a = vec![1.0, 0.2];
        let b = vec![0.1, 1.0];
        let c = vec![1.1, 1.2];
        let far = vec![-1.0, -1.0];
        let repr = Representation::tabulated(src.clone(), vec![a, b, c, far]).unwrap();
        let sample = vec![
            ex(&src[3], Label::Neg),
            ex(&src[0], Label::Pos),
            ex(&src[1], Label::Pos),
            ex(&src[2], Label::Neg),
        ];
        let rep = helly_certify(&repr, &class, 2, 0.2, &[sample]).unwrap();
        assert!(!rep.exact_on_samples);
        // {far, b, c} is infeasible too: w1 + w2 > 0 and b >= 0 force
        // w2 > |w1|, while c < 0 needs w2 < 0.92 |w1|.
        assert_eq!(rep.failures[0].subsets, vec![vec![0, 2, 3], vec![1, 2, 3]]);
    }
}
