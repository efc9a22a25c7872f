use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::{FiniteDistribution, Label};
use crate::rng;
use crate::sco::hard_svm;
use crate::vecops::{dot, normalized};

/// Controls for [`best_halfspace_fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Exact search is used only when the support has at most this many atoms ...
    pub max_exact_atoms: usize,
    /// ... and the points at most this many coordinates.
    pub max_exact_dim: usize,
    /// Fall back to a heuristic upper bound beyond the exact limits instead of failing.
    pub allow_heuristic: bool,
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_exact_atoms: 12,
            max_exact_dim: 3,
            allow_heuristic: true,
            restarts: 16,
            iterations: 400,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// 0/1 loss of `w`.
    pub loss: f64,
    pub w: Vec<f64>,
    /// `true` when `loss` is the minimum over all homogeneous half-spaces.
    pub exact: bool,
}

/// 0/1 loss of `x -> sign(<w, x>)` (with `sign(0) = +1`; `w = 0` labels everything `+1`).
pub fn homogeneous_zero_one(dist: &FiniteDistribution, w: &[f64]) -> f64 {
    dist.atoms()
        .iter()
        .filter(|a| Label::from_sign(dot(w, &a.example.point)) != a.example.label)
        .map(|a| a.weight)
        .sum()
}

/// Minimum 0/1 loss over homogeneous half-spaces `sign(<w, x>)`, `w = 0` included.
///
/// Exact mode enumerates candidate error sets in increasing mass and decides
/// each by Fourier–Motzkin elimination of the remaining sign constraints,
/// which handles points on the decision boundary correctly. Beyond the exact
/// limits the result is the best of hard-SVM and multi-start hinge descent,
/// an upper bound flagged `exact = false`.
pub fn best_halfspace_fit(dist: &FiniteDistribution, opts: &FitOptions) -> Result<FitResult> {
    let dim = dist
        .dim()
        .ok_or_else(|| Error::Domain("points must share one dimension".into()))?;
    if dist.len() <= opts.max_exact_atoms && dim <= opts.max_exact_dim {
        return Ok(exact_fit(dist, dim));
    }
    if !opts.allow_heuristic {
        return Err(Error::Resource(format!(
            "exact fit limited to {} atoms in dimension {}; got {} atoms in dimension {dim}",
            opts.max_exact_atoms,
            opts.max_exact_dim,
            dist.len()
        )));
    }
    heuristic_fit(dist, dim, opts)
}

fn exact_fit(dist: &FiniteDistribution, dim: usize) -> FitResult {
    let atoms = dist.atoms();
    let m = atoms.len();
    let units: Vec<Option<Vec<f64>>> = atoms.iter().map(|a| normalized(&a.example.point)).collect();
    let mut masks: Vec<(f64, u32)> = (0..1u32 << m)
        .map(|mask| {
            let mass = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| atoms[i].weight).sum();
            (mass, mask)
        })
        .collect();
    masks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.count_ones().cmp(&b.1.count_ones())).then(a.1.cmp(&b.1)));

    for (mass, mask) in masks {
        let mut system = Vec::with_capacity(m);
        let mut impossible = false;
        for (i, atom) in atoms.iter().enumerate() {
            if mask >> i & 1 == 1 {
                continue;
            }
            match (&units[i], atom.example.label) {
                (None, Label::Pos) => {}
                (None, Label::Neg) => impossible = true,
                (Some(u), Label::Pos) => system.push(Ineq { c: u.clone(), r: 0.0 }),
                // <w, u> < 0, scaled to -<w, u> >= 1
                (Some(u), Label::Neg) => system.push(Ineq {
                    c: u.iter().map(|v| -v).collect(),
                    r: 1.0,
                }),
            }
        }
        if impossible {
            continue;
        }
        if let Some(w) = fourier_motzkin(system, dim) {
            let loss = homogeneous_zero_one(dist, &w);
            if loss <= mass + 1e-12 {
                return FitResult { loss, w, exact: true };
            }
        }
    }
    // The all-errors mask is always feasible; reaching here means rounding trouble.
    FitResult {
        loss: homogeneous_zero_one(dist, &vec![0.0; dim]),
        w: vec![0.0; dim],
        exact: false,
    }
}

const FM_TOL: f64 = 1e-9;
const COEF_EPS: f64 = 1e-12;

/// `c . w >= r`.
#[derive(Debug, Clone)]
struct Ineq {
    c: Vec<f64>,
    r: f64,
}

enum Normalized {
    Keep(Ineq),
    Trivial,
    Contradiction,
}

fn normalize(mut q: Ineq) -> Normalized {
    let s = q.c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if s == 0.0 {
        return if q.r > FM_TOL {
            Normalized::Contradiction
        } else {
            Normalized::Trivial
        };
    }
    for v in &mut q.c {
        *v /= s;
    }
    q.r /= s;
    Normalized::Keep(q)
}

/// Feasibility of `{c_i . w >= r_i}` by Fourier–Motzkin elimination, with a
/// witness recovered by back-substitution.
fn fourier_motzkin(system: Vec<Ineq>, dim: usize) -> Option<Vec<f64>> {
    let mut current = Vec::with_capacity(system.len());
    for q in system {
        match normalize(q) {
            Normalized::Keep(q) => current.push(q),
            Normalized::Trivial => {}
            Normalized::Contradiction => return None,
        }
    }
    let mut stages: Vec<Vec<Ineq>> = Vec::with_capacity(dim);
    for v in (0..dim).rev() {
        let (mut pos, mut neg, mut next) = (Vec::new(), Vec::new(), Vec::new());
        for q in &current {
            if q.c[v] > 0.0 {
                pos.push(q);
            } else if q.c[v] < 0.0 {
                neg.push(q);
            } else {
                next.push(q.clone());
            }
        }
        for p in &pos {
            for n in &neg {
                let (a, b) = (1.0 / p.c[v], -1.0 / n.c[v]);
                let mut c: Vec<f64> = p.c.iter().zip(&n.c).map(|(x, y)| a * x + b * y).collect();
                c[v] = 0.0;
                for x in &mut c {
                    if x.abs() < COEF_EPS {
                        *x = 0.0;
                    }
                }
                match normalize(Ineq { c, r: a * p.r + b * n.r }) {
                    Normalized::Keep(q) => next.push(q),
                    Normalized::Trivial => {}
                    Normalized::Contradiction => return None,
                }
            }
        }
        stages.push(std::mem::replace(&mut current, dedup(next)));
    }
    if current.iter().any(|q| q.r > FM_TOL) {
        return None;
    }

    let mut w = vec![0.0; dim];
    for (k, stage) in stages.iter().enumerate().rev() {
        let v = dim - 1 - k;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for q in stage {
            let rest: f64 = (0..v).map(|j| q.c[j] * w[j]).sum();
            let bound = (q.r - rest) / q.c[v];
            if q.c[v] > 0.0 {
                lo = lo.max(bound);
            } else if q.c[v] < 0.0 {
                hi = hi.min(bound);
            }
        }
        w[v] = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo.max(0.0) + 1.0,
            (false, true) => hi.min(0.0) - 1.0,
            (false, false) => 0.0,
        };
    }
    Some(w)
}

fn dedup(rows: Vec<Ineq>) -> Vec<Ineq> {
    let mut best: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut out: Vec<Ineq> = Vec::with_capacity(rows.len());
    for q in rows {
        let key: Vec<u64> = q.c.iter().map(|v| if *v == 0.0 { 0 } else { v.to_bits() }).collect();
        match best.get(&key) {
            Some(&i) => out[i].r = out[i].r.max(q.r),
            None => {
                best.insert(key, out.len());
                out.push(q);
            }
        }
    }
    out
}

fn heuristic_fit(dist: &FiniteDistribution, dim: usize, opts: &FitOptions) -> Result<FitResult> {
    let mut best = (homogeneous_zero_one(dist, &vec![0.0; dim]), vec![0.0; dim]);
    if let Some(report) = hard_svm(dist, true)?.report() {
        return Ok(FitResult {
            loss: homogeneous_zero_one(dist, &report.point),
            w: report.point.clone(),
            exact: true,
        });
    }
    let pts: Vec<(Vec<f64>, f64, f64)> = dist
        .atoms()
        .iter()
        .filter_map(|a| normalized(&a.example.point).map(|u| (u, a.example.label.value(), a.weight)))
        .collect();
    for restart in 0..opts.restarts {
        let mut r = rng::derived(opts.seed, restart as u64);
        let mut w = rng::gaussian_vec(&mut r, dim);
        for t in 1..=opts.iterations {
            let mut g = vec![0.0; dim];
            for (u, y, p) in &pts {
                if y * dot(&w, u) < 1.0 {
                    for (gi, ui) in g.iter_mut().zip(u) {
                        *gi -= p * y * ui;
                    }
                }
            }
            let eta = 1.0 / (t as f64).sqrt();
            for (wi, gi) in w.iter_mut().zip(&g) {
                *wi -= eta * gi;
            }
            if t % 10 == 0 || t == opts.iterations {
                let loss = homogeneous_zero_one(dist, &w);
                if loss < best.0 {
                    best = (loss, w.clone());
                }
            }
        }
    }
    Ok(FitResult {
        loss: best.0,
        w: best.1,
        exact: best.0 == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::LabeledExample;
    use rand::Rng as _;

    fn ex(p: &[f64], y: Label) -> LabeledExample {
        LabeledExample::new(p.to_vec(), y)
    }

    fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
        vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    }

    // Candidate directions covering every face of the central arrangement:
    // signed rays (perpendiculars in 2-D, pairwise cross products in 3-D),
    // sums of up to three of them, plus random directions for full cells.
    fn arrangement_oracle(dist: &FiniteDistribution, dim: usize, seed: u64) -> f64 {
        let pts: Vec<&Vec<f64>> = dist.atoms().iter().map(|a| &a.example.point).collect();
        let mut rays: Vec<Vec<f64>> = Vec::new();
        match dim {
            1 => rays.extend([vec![1.0], vec![-1.0]]),
            2 => {
                for p in &pts {
                    rays.push(vec![-p[1], p[0]]);
                    rays.push(vec![p[1], -p[0]]);
                }
            }
            3 => {
                for p in &pts {
                    // two directions spanning the plane orthogonal to p
                    let k = (0..3).min_by(|a, b| p[*a].abs().total_cmp(&p[*b].abs())).unwrap();
                    let mut e = vec![0.0; 3];
                    e[k] = 1.0;
                    let b1 = cross(p, &e);
                    let b2 = cross(p, &b1);
                    for b in [b1, b2] {
                        rays.push(b.iter().map(|v| -v).collect());
                        rays.push(b);
                    }
                }
                for i in 0..pts.len() {
                    for j in i + 1..pts.len() {
                        let c = cross(pts[i], pts[j]);
                        rays.push(c.iter().map(|v| -v).collect());
                        rays.push(c);
                    }
                }
            }
            _ => unreachable!(),
        }
        let mut cands = vec![vec![0.0; dim]];
        cands.extend(rays.iter().cloned());
        for i in 0..rays.len() {
            for j in i + 1..rays.len() {
                let s: Vec<f64> = rays[i].iter().zip(&rays[j]).map(|(a, b)| a + b).collect();
                if dim == 3 {
                    for k in j + 1..rays.len() {
                        cands.push(s.iter().zip(&rays[k]).map(|(a, b)| a + b).collect());
                    }
                }
                cands.push(s);
            }
        }
        let mut r = rng::seeded(seed);
        for _ in 0..5000 {
            cands.push(rng::gaussian_vec(&mut r, dim));
        }
        cands
            .iter()
            .map(|w| homogeneous_zero_one(dist, w))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn separable_data_fits_exactly() {
        let d = FiniteDistribution::uniform(vec![
            ex(&[1.0, 0.2], Label::Pos),
            ex(&[0.5, 1.0], Label::Pos),
            ex(&[-1.0, 0.1], Label::Neg),
        ])
        .unwrap();
        let f = best_halfspace_fit(&d, &FitOptions::default()).unwrap();
        assert_eq!(f.loss, 0.0);
        assert!(f.exact);
    }

    #[test]
    fn contradictory_labels_give_half() {
        let d = FiniteDistribution::uniform(vec![ex(&[0.3, -0.7], Label::Pos), ex(&[0.3, -0.7], Label::Neg)]).unwrap();
        let f = best_halfspace_fit(&d, &FitOptions::default()).unwrap();
        assert_eq!(f.loss, 0.5);
    }

    #[test]
    fn xor_gives_quarter() {
        let d = FiniteDistribution::uniform(vec![
            ex(&[1.0, 1.0], Label::Pos),
            ex(&[-1.0, -1.0], Label::Pos),
            ex(&[1.0, -1.0], Label::Neg),
            ex(&[-1.0, 1.0], Label::Neg),
        ])
        .unwrap();
        let f = best_halfspace_fit(&d, &FitOptions::default()).unwrap();
        assert!((f.loss - 0.25).abs() < 1e-15);
        assert!(f.exact);
        assert!((homogeneous_zero_one(&d, &f.w) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn matches_arrangement_oracle() {
        let mut r = rng::seeded(77);
        for trial in 0..120 {
            let dim = 1 + trial % 3;
            let m = r.gen_range(1..=8);
            let mut examples = Vec::new();
            for _ in 0..m {
                // Integer grid points make boundary cases common.
                let p: Vec<f64> = (0..dim).map(|_| r.gen_range(-2i32..=2) as f64).collect();
                let y = if r.gen::<bool>() { Label::Pos } else { Label::Neg };
                examples.push((ex(&p, y), r.gen_range(0.1..1.0)));
            }
            let total: f64 = examples.iter().map(|e| e.1).sum();
            let examples = examples.into_iter().map(|(e, w)| (e, w / total)).collect();
            let d = FiniteDistribution::new(examples).unwrap();
            let f = best_halfspace_fit(&d, &FitOptions::default()).unwrap();
            let oracle = arrangement_oracle(&d, dim, trial as u64);
            assert!(f.exact);
            assert!((f.loss - oracle).abs() < 1e-12, "trial {trial}: fit {} oracle {oracle} on {d:?}", f.loss);
        }
    }

    #[test]
    fn heuristic_mode_is_an_upper_bound() {
        let mut r = rng::seeded(3);
        let w = rng::unit_vector(&mut r, 5);
        let mut examples = Vec::new();
        for i in 0..30 {
            let x = rng::gaussian_vec(&mut r, 5);
            let mut y = Label::from_sign(dot(&w, &x));
            if i < 3 {
                y = y.flipped();
            }
            examples.push(ex(&x, y));
        }
        let d = FiniteDistribution::uniform(examples).unwrap();
        let f = best_halfspace_fit(&d, &FitOptions::default()).unwrap();
        assert!(!f.exact);
        assert!((homogeneous_zero_one(&d, &f.w) - f.loss).abs() < 1e-15);
        assert!(f.loss <= 0.5);
        let strict = FitOptions {
            allow_heuristic: false,
            ..FitOptions::default()
        };
        assert!(matches!(best_halfspace_fit(&d, &strict), Err(Error::Resource(_))));
    }
}
