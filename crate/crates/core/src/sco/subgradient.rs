use crate::error::{check_dim, Error, Result};
use crate::learning::{FiniteDistribution, LossValue};
use crate::vecops::norm_sq;

use super::{ConvexDomain, ScoTask, SolverConfig, SolverReport, StepRule};

const CHECK_EVERY: usize = 100;

/// Projected subgradient descent with iterate averaging.
///
/// The returned point is the averaged iterate, or the best single iterate when
/// that has strictly smaller loss. `opt_estimate` is `max(0, best - bound)` where
/// `bound` is the averaged-iterate guarantee of the constant step schedule
/// (`(R² + k η² G²) / (2kη)` after `k` steps); with Polyak steps only the
/// nonnegativity bound is used. `certified` means `achieved - opt_estimate <= alpha`.
pub fn solve_subgradient(
    task: &ScoTask,
    dist: &FiniteDistribution,
    config: &SolverConfig,
) -> Result<SolverReport> {
    solve_subgradient_traced(task, dist, config).map(|(r, _)| r)
}

/// As [`solve_subgradient`], also returning the best-so-far loss after every iteration.
pub fn solve_subgradient_traced(
    task: &ScoTask,
    dist: &FiniteDistribution,
    config: &SolverConfig,
) -> Result<(SolverReport, Vec<f64>)> {
    if task.infinity_valued {
        return Err(Error::Unsupported(format!(
            "{} is infinity-valued; use hard_svm",
            task.name
        )));
    }
    if !task.convex {
        return Err(Error::Unsupported(format!(
            "{} is not convex; the subgradient method does not apply",
            task.name
        )));
    }
    if !(config.alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be positive, got {}", config.alpha)));
    }
    let domain = match (&task.domain, config.norm_cap) {
        (ConvexDomain::Full { dim }, Some(cap)) => ConvexDomain::ball(vec![0.0; *dim], cap)?,
        (ConvexDomain::Full { .. }, None) => {
            return Err(Error::Parameter(format!(
                "{} has an unbounded domain; pass a norm cap",
                task.name
            )))
        }
        (d, _) => d.clone(),
    };
    let diameter = domain.diameter().expect("bounded domain");
    let lipschitz = task.lipschitz(dist);
    let horizon = config.max_iters.max(1);

    let mut w = match &config.start {
        Some(s) => {
            check_dim(domain.dim(), s.len())?;
            s.clone()
        }
        None => domain.anchor(),
    };
    domain.project(&mut w);

    let eval = |w: &[f64]| -> Result<f64> {
        match task.loss_value(dist, w)? {
            LossValue::Finite(v) => Ok(v),
            LossValue::Infinite => Err(Error::Domain("loss became infinite".into())),
        }
    };

    let mut best = (eval(&w)?, w.clone());
    let mut trace = Vec::with_capacity(horizon.min(1 << 20));
    let mut avg = vec![0.0; w.len()];
    let mut observed_g: f64 = 0.0;
    let mut iterations = 0;
    let mut stationary = false;
    let mut last_bound = f64::INFINITY;
    let polyak_target = match config.step {
        StepRule::Auto => config.known_opt,
        StepRule::Constant => None,
    };

    for k in 1..=horizon {
        iterations = k;
        let f = eval(&w)?;
        if f < best.0 {
            best = (f, w.clone());
        }
        let g = task.subgradient(dist, &w)?;
        let gn2 = norm_sq(&g);
        observed_g = observed_g.max(gn2.sqrt());
        for (a, x) in avg.iter_mut().zip(&w) {
            *a += (x - *a) / k as f64;
        }
        if gn2 == 0.0 {
            stationary = true;
            trace.push(best.0);
            break;
        }
        let g_bound = lipschitz.unwrap_or(observed_g).max(f64::MIN_POSITIVE);
        let eta_const = diameter / (g_bound * (horizon as f64).sqrt());
        let eta = match polyak_target {
            Some(target) if f > target => (f - target) / gn2,
            Some(_) => {
                // at or below the known optimum
                stationary = true;
                trace.push(best.0);
                break;
            }
            None => eta_const,
        };
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= eta * gi;
        }
        domain.project(&mut w);

        if polyak_target.is_none() {
            if let Some(l) = lipschitz {
                let kf = k as f64;
                last_bound = (diameter * diameter + kf * eta_const * eta_const * l * l) / (2.0 * kf * eta_const);
            }
        }
        if k % CHECK_EVERY == 0 {
            let fa = eval(&avg)?;
            if fa < best.0 {
                best = (fa, avg.clone());
            }
            let lower = (best.0 - last_bound).max(0.0);
            if best.0 - lower <= config.alpha {
                trace.push(best.0);
                break;
            }
        }
        trace.push(best.0);
    }

    let fa = eval(&avg)?;
    let (achieved, point) = if stationary {
        best.clone()
    } else if fa <= best.0 {
        (fa, avg)
    } else {
        best.clone()
    };
    let lower = if stationary && polyak_target.is_none() {
        // zero subgradient certifies optimality of the current iterate
        achieved
    } else {
        let lb = (best.0.min(achieved) - last_bound).max(0.0);
        match polyak_target {
            Some(t) if stationary => lb.max(t.min(achieved)),
            _ => lb,
        }
    };
    let tolerance = (achieved - lower).max(0.0);
    Ok((
        SolverReport {
            point,
            achieved_loss: LossValue::finite(achieved)?,
            opt_estimate: LossValue::finite(lower)?,
            tolerance,
            iterations,
            certified: tolerance <= config.alpha,
            norm_cap: config.norm_cap,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::{Label, LabeledExample};

    fn trivial_dist(p_plus: f64) -> FiniteDistribution {
        FiniteDistribution::new(vec![
            (LabeledExample::new(vec![], Label::Pos), p_plus),
            (LabeledExample::new(vec![], Label::Neg), 1.0 - p_plus),
        ])
        .unwrap()
    }

    #[test]
    fn half_absolute_reaches_min_label_mass() {
        let task = ScoTask::half_absolute();
        let report = solve_subgradient(&task, &trivial_dist(0.7), &SolverConfig::with_alpha(0.01)).unwrap();
        assert!(report.certified, "{report:?}");
        assert!(report.achieved_loss.as_f64() <= 0.31);
        assert!(report.achieved_loss.as_f64() >= 0.3 - 1e-12);
        assert!(report.opt_estimate.as_f64() <= 0.3 + 1e-12);
    }

    #[test]
    fn constant_loss_is_returned_exactly() {
        let task = ScoTask::constant(0.42, ConvexDomain::ball(vec![0.0, 0.0], 1.0).unwrap()).unwrap();
        let d = FiniteDistribution::point_mass(LabeledExample::new(vec![1.0], Label::Pos));
        let report = solve_subgradient(&task, &d, &SolverConfig::default()).unwrap();
        assert_eq!(report.achieved_loss, LossValue::Finite(0.42));
        assert!(report.certified);
        assert_eq!(report.tolerance, 0.0);
    }

    #[test]
    fn hinge_point_mass_with_cap() {
        let task = ScoTask::hinge(2);
        let d = FiniteDistribution::point_mass(LabeledExample::new(vec![0.5, -0.2], Label::Neg));
        for alpha in [0.1, 1e-3] {
            let cfg = SolverConfig {
                alpha,
                norm_cap: Some(4.0),
                known_opt: Some(0.0),
                ..SolverConfig::default()
            };
            let r = solve_subgradient(&task, &d, &cfg).unwrap();
            assert!(r.achieved_loss.as_f64() <= alpha, "{r:?}");
        }
    }

    #[test]
    fn best_so_far_is_monotone() {
        let task = ScoTask::hinge(1);
        let d = FiniteDistribution::uniform(vec![
            LabeledExample::new(vec![1.0], Label::Pos),
            LabeledExample::new(vec![-0.5], Label::Neg),
            LabeledExample::new(vec![0.2], Label::Pos),
        ])
        .unwrap();
        let cfg = SolverConfig {
            alpha: 1e-6,
            norm_cap: Some(3.0),
            max_iters: 5000,
            ..SolverConfig::default()
        };
        let (_, trace) = solve_subgradient_traced(&task, &d, &cfg).unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn refuses_unsupported_tasks() {
        let d = FiniteDistribution::point_mass(LabeledExample::new(vec![1.0], Label::Pos));
        let err = solve_subgradient(&ScoTask::linear_programming(1), &d, &SolverConfig::default());
        assert!(matches!(err, Err(Error::Unsupported(_))));
        let err = solve_subgradient(&ScoTask::hinge(1), &d, &SolverConfig::default());
        assert!(matches!(err, Err(Error::Parameter(_))));
    }
}
