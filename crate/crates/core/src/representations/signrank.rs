use serde::{Deserialize, Serialize};

use crate::classes::FiniteConceptClass;
use crate::error::{Error, Result};
use crate::learning::{FiniteDistribution, Label, LabeledExample, LossValue};
use crate::reductions::{Reduction, Target};
use crate::sco::{hard_svm, HardSvmOutcome, LossKind, ScoTask, SolverConfig};
use crate::vecops::{dot, norm, norm_sq};

const MINIMAX_TOLERANCE: f64 = 1e-6;

/// Vectors `w(c)` and `phi(x)` in `R^dim` with `sign<w(c), phi(x)> = c(x)` for
/// every concept `c` and domain point `x` of the witnessed class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignRankWitness {
    pub dim: usize,
    pub concept_vectors: Vec<Vec<f64>>,
    pub point_vectors: Vec<Vec<f64>>,
    /// Largest per-concept value of `max_x l_{r_in(x, c(x))}(w_c)`.
    pub minimax_residual: f64,
}

impl SignRankWitness {
    /// Exhaustive sign check; returns the number of `(c, x)` pairs checked.
    pub fn verify(&self, class: &FiniteConceptClass) -> Result<usize> {
        if self.concept_vectors.len() != class.num_concepts() || self.point_vectors.len() != class.num_points() {
            return Err(Error::Extraction("witness does not match the class shape".into()));
        }
        let mut checks = 0;
        for (c, wc) in self.concept_vectors.iter().enumerate() {
            for (j, phi) in self.point_vectors.iter().enumerate() {
                let want = class.table()[c][j].label();
                if want != Some(Label::from_sign(dot(wc, phi))) {
                    return Err(Error::Extraction(format!(
                        "sign mismatch at concept {c}, point {:?}",
                        class.points()[j]
                    )));
                }
                checks += 1;
            }
        }
        Ok(checks)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Builds a half-space representation of a finite class from an exact
/// reduction to a convex task.
///
/// For every concept `c` a parameter `w_c` is found with
/// `max_x l_{r_in(x, c(x))}(w_c) <= 1e-6`. Then `w(c) = (w_c, 1)` and `phi(x)`
/// is a hard-SVM separator of `{(w_c, 1) : c(x) = +1}` from
/// `{(w_c, 1) : c(x) = -1}`. The result is checked on all pairs before it is returned.
pub fn extract_signrank_witness(
    class: &FiniteConceptClass,
    reduction: &Reduction,
    solver: &SolverConfig,
) -> Result<SignRankWitness> {
    if !class.is_total() {
        return Err(Error::Precondition("the class must be total".into()));
    }
    if !reduction.exact {
        return Err(Error::Precondition(format!("reduction {} is not exact", reduction.name)));
    }
    let Target::Sco(task) = &reduction.target else {
        return Err(Error::Unsupported("extraction needs a convex optimization target".into()));
    };

    let mut params = Vec::with_capacity(class.num_concepts());
    let mut residual: f64 = 0.0;
    for c in 0..class.num_concepts() {
        let examples: Vec<LabeledExample> = class
            .realizable_examples(c)
            .iter()
            .map(|z| reduction.map_example(z))
            .collect::<Result<_>>()?;
        let (w, r) = minimax_point(task, &examples, solver)?;
        if !(r <= MINIMAX_TOLERANCE) {
            return Err(Error::Extraction(format!(
                "minimax residual {r:e} for concept {c} exceeds {MINIMAX_TOLERANCE:e}"
            )));
        }
        residual = residual.max(r);
        params.push(w);
    }

    // Separate in rescaled coordinates (w_c / s, 1); the separator maps back by
    // dividing its first block by s, which leaves every inner product unchanged.
    let s = params.iter().map(|w| norm(w)).fold(0.0f64, f64::max);
    let s = if s > 0.0 { s } else { 1.0 };
    let lifted: Vec<Vec<f64>> = params
        .iter()
        .map(|w| {
            let mut v: Vec<f64> = w.iter().map(|x| x / s).collect();
            v.push(1.0);
            v
        })
        .collect();
    let k = task.dim();
    let mut point_vectors = Vec::with_capacity(class.num_points());
    for j in 0..class.num_points() {
        let examples: Vec<LabeledExample> = (0..class.num_concepts())
            .map(|c| LabeledExample::new(lifted[c].clone(), class.table()[c][j].label().expect("total")))
            .collect();
        let dist = FiniteDistribution::uniform(examples)?;
        match hard_svm(&dist, true)? {
            HardSvmOutcome::Feasible(rep) => {
                let mut phi = rep.point;
                for v in phi.iter_mut().take(k) {
                    *v /= s;
                }
                point_vectors.push(phi);
            }
            HardSvmOutcome::Infeasible(_) => {
                return Err(Error::Extraction(format!(
                    "no half-space separates the parameter sets at point {:?}",
                    class.points()[j]
                )))
            }
        }
    }
    let concept_vectors = params
        .into_iter()
        .map(|mut w| {
            w.push(1.0);
            w
        })
        .collect();
    let witness = SignRankWitness {
        dim: k + 1,
        concept_vectors,
        point_vectors,
        minimax_residual: residual,
    };
    witness.verify(class)?;
    Ok(witness)
}

/// `argmin_w max_i l_{z_i}(w)`, returned with its value.
fn minimax_point(task: &ScoTask, examples: &[LabeledExample], solver: &SolverConfig) -> Result<(Vec<f64>, f64)> {
    let value = |w: &[f64]| -> Result<f64> {
        let mut m: f64 = 0.0;
        for z in examples {
            match task.loss.value(z, w)? {
                LossValue::Finite(v) => m = m.max(v),
                LossValue::Infinite => return Ok(f64::INFINITY),
            }
        }
        Ok(m)
    };
    if task.infinity_valued {
        if task.loss.kind() != LossKind::LinearProgramming {
            return Err(Error::Unsupported(format!("no minimax solver for {}", task.name)));
        }
        // Any strictly separating w has max loss ‖w‖²; shrink it below the tolerance.
        let dist = FiniteDistribution::uniform(examples.to_vec())?;
        let w = match hard_svm(&dist, true)? {
            HardSvmOutcome::Feasible(rep) => rep.point,
            HardSvmOutcome::Infeasible(_) => {
                return Err(Error::Extraction("the concept's image is not separable".into()))
            }
        };
        let n2 = norm_sq(&w);
        let w: Vec<f64> = if n2 > 0.0 {
            let f = (0.5 * MINIMAX_TOLERANCE / n2).sqrt();
            w.iter().map(|v| v * f).collect()
        } else {
            w
        };
        let v = value(&w)?;
        return Ok((w, v));
    }
    if !task.convex {
        return Err(Error::Unsupported(format!("{} is not convex", task.name)));
    }
    // Subgradient method on the pointwise maximum with Polyak steps toward 0.
    let mut w = solver.start.clone().unwrap_or_else(|| task.domain.anchor());
    task.domain.project(&mut w);
    let mut best = (value(&w)?, w.clone());
    for _ in 0..solver.max_iters {
        if best.0 <= MINIMAX_TOLERANCE {
            break;
        }
        let f = value(&w)?;
        let worst = examples
            .iter()
            .map(|z| task.loss.value(z, &w).map(|v| v.as_f64()))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, v)| if *v > b.1 { (i, *v) } else { b })
            .0;
        let g = task.loss.subgradient(&examples[worst], &w)?;
        let g2 = norm_sq(&g);
        if g2 == 0.0 {
            break;
        }
        let step = f / g2;
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= step * gi;
        }
        task.domain.project(&mut w);
        let v = value(&w)?;
        if v < best.0 {
            best = (v, w.clone());
        }
    }
    Ok((best.1, best.0))
}
