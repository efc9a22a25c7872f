use serde::Serialize;

use crate::error::{Error, Result};
use crate::learning::{FiniteDistribution, Label, LabeledExample, LossValue};
use crate::vecops::{dot, norm, norm_sq};

use super::SolverReport;

const MAX_LOG_PENALTY: u32 = 20;
const MAX_SWEEPS: usize = 5_000;
const KKT_TOLERANCE: f64 = 1e-9;

/// Why no strictly separating half-space was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfeasibilityReport {
    /// Indices (into `dist.atoms()`) with `y<w, x> <= 0` at the last iterate.
    pub violated: Vec<usize>,
    /// Smallest `y<w, x>` at the last iterate, after normalizing `w` to unit length.
    pub min_margin: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HardSvmOutcome {
    Feasible(SolverReport),
    Infeasible(InfeasibilityReport),
}

impl HardSvmOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, HardSvmOutcome::Feasible(_))
    }

    pub fn report(&self) -> Option<&SolverReport> {
        match self {
            HardSvmOutcome::Feasible(r) => Some(r),
            HardSvmOutcome::Infeasible(_) => None,
        }
    }
}

/// `(x, y) -> ((x, 1), y)`: affine half-spaces in `R^d` become homogeneous ones in `R^{d+1}`.
pub fn lift_affine(dist: &FiniteDistribution) -> Result<FiniteDistribution> {
    dist.map_examples(|z| {
        let mut p = z.point.clone();
        p.push(1.0);
        Ok(LabeledExample::new(p, z.label))
    })
}

/// Minimum-norm `w` with `y<w, x> >= 1` on every atom.
///
/// Solved by penalty continuation: `min ‖w‖² + c Σ max(0, 1 - y<w, x>)` for
/// `c = 1, 2, 4, ..., 2^20`, each by dual coordinate descent warm-started from
/// the previous penalty. Feasibility is decided exactly on the final iterate
/// (`y<w, x> > 0` everywhere), after which `w` is rescaled so the smallest
/// margin is `1`. `opt_estimate` is a dual lower bound on `‖w‖²`.
///
/// With `homogeneous = false` the points are lifted to `(x, 1)` first and the
/// returned point is `(w, b)`; the offset is regularized like the normal.
/// Atoms at the origin satisfy label `+1` by the `sign(0) = +1` convention and
/// make label `-1` infeasible.
pub fn hard_svm(dist: &FiniteDistribution, homogeneous: bool) -> Result<HardSvmOutcome> {
    if !homogeneous {
        return hard_svm(&lift_affine(dist)?, true);
    }
    let dim = dist
        .dim()
        .ok_or_else(|| Error::Domain("hard_svm needs points of a common dimension".into()))?;

    let mut constraints: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut origin_negatives = Vec::new();
    for (i, atom) in dist.atoms().iter().enumerate() {
        let x = &atom.example.point;
        if x.iter().all(|v| *v == 0.0) {
            if atom.example.label == Label::Neg {
                origin_negatives.push(i);
            }
            continue;
        }
        let y = atom.example.label.value();
        constraints.push((i, x.iter().map(|v| y * v).collect()));
    }
    if !origin_negatives.is_empty() {
        return Ok(HardSvmOutcome::Infeasible(InfeasibilityReport {
            violated: origin_negatives,
            min_margin: 0.0,
            iterations: 0,
        }));
    }
    if constraints.is_empty() {
        return Ok(HardSvmOutcome::Feasible(SolverReport {
            point: vec![0.0; dim],
            achieved_loss: LossValue::Finite(0.0),
            opt_estimate: LossValue::Finite(0.0),
            tolerance: 0.0,
            iterations: 0,
            certified: true,
            norm_cap: None,
        }));
    }

    // Work with points scaled into the unit ball so the penalty range is scale-free.
    let scale = constraints
        .iter()
        .map(|(_, z)| norm(z))
        .fold(0.0f64, f64::max);
    let z: Vec<Vec<f64>> = constraints
        .iter()
        .map(|(_, v)| v.iter().map(|c| c / scale).collect())
        .collect();
    let q: Vec<f64> = z.iter().map(|v| norm_sq(v)).collect();
    let m = z.len();

    let mut alpha = vec![0.0; m];
    let mut w = vec![0.0; dim];
    let mut sweeps = 0;
    for log_c in 0..=MAX_LOG_PENALTY {
        let upper = 0.5 * f64::from(1u32 << log_c);
        for _ in 0..MAX_SWEEPS {
            sweeps += 1;
            let mut worst: f64 = 0.0;
            for i in 0..m {
                let grad = dot(&w, &z[i]) - 1.0;
                let pg = if alpha[i] <= 0.0 {
                    grad.min(0.0)
                } else if alpha[i] >= upper {
                    grad.max(0.0)
                } else {
                    grad
                };
                worst = worst.max(pg.abs());
                if pg != 0.0 {
                    let new = (alpha[i] - grad / q[i]).clamp(0.0, upper);
                    let delta = new - alpha[i];
                    if delta != 0.0 {
                        for (wj, zj) in w.iter_mut().zip(&z[i]) {
                            *wj += delta * zj;
                        }
                        alpha[i] = new;
                    }
                }
            }
            if worst < KKT_TOLERANCE {
                break;
            }
        }
        if min_margin(&w, &z) >= 1.0 {
            break;
        }
    }

    let margin = min_margin(&w, &z);
    if !(margin > 0.0) {
        let wn = norm(&w);
        let violated = constraints
            .iter()
            .zip(&z)
            .filter(|(_, zi)| dot(&w, zi) <= 0.0)
            .map(|((i, _), _)| *i)
            .collect();
        return Ok(HardSvmOutcome::Infeasible(InfeasibilityReport {
            violated,
            min_margin: if wn > 0.0 { margin / wn } else { 0.0 },
            iterations: sweeps,
        }));
    }

    // Rescale to margin exactly 1 in the original coordinates.
    let point: Vec<f64> = w.iter().map(|v| v / (margin * scale)).collect();
    let achieved = norm_sq(&point);
    let combo: f64 = {
        let mut s = vec![0.0; dim];
        for (a, zi) in alpha.iter().zip(&z) {
            for (sj, zj) in s.iter_mut().zip(zi) {
                *sj += a * zj;
            }
        }
        norm_sq(&s)
    };
    let dual = 2.0 * (alpha.iter().sum::<f64>() - 0.5 * combo) / (scale * scale);
    let lower = dual.clamp(0.0, achieved);
    Ok(HardSvmOutcome::Feasible(SolverReport {
        point,
        achieved_loss: LossValue::finite(achieved)?,
        opt_estimate: LossValue::finite(lower)?,
        tolerance: achieved - lower,
        iterations: sweeps,
        certified: true,
        norm_cap: None,
    }))
}

fn min_margin(w: &[f64], z: &[Vec<f64>]) -> f64 {
    z.iter().map(|zi| dot(w, zi)).fold(f64::INFINITY, f64::min)
}
