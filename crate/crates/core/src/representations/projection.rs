use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::Label;
use crate::rng;
use crate::vecops::{dot, norm_sq, normalized};

use super::Representation;

/// Random linear maps `R^{n+1} -> R^d` with independent standard normal entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaussianProjection {
    pub n: usize,
    pub d: usize,
}

impl GaussianProjection {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Parameter(format!("need n, d >= 1 (got n = {n}, d = {d})")));
        }
        Ok(GaussianProjection { n, d })
    }

    pub fn target_dim(&self) -> usize {
        self.d
    }

    /// The `d x (n+1)` matrix drawn from `seed`, row by row.
    pub fn matrix(&self, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::seeded(seed);
        (0..self.d).map(|_| rng::gaussian_vec(&mut r, self.n + 1)).collect()
    }

    pub fn sample(&self, seed: u64) -> Representation {
        Representation::Linear {
            matrix: self.matrix(seed),
        }
    }
}

/// `ceil(10 / gamma² · ln(1 / (alpha·delta)))`, at least 1.
pub fn required_dimension(alpha: f64, delta: f64, gamma: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    let d = (10.0 / (gamma * gamma) * (1.0 / (alpha * delta)).ln()).ceil();
    Ok((d as usize).max(1))
}

/// `4 exp(-d gamma² / 8)`.
pub fn flip_bound(d: usize, gamma: f64) -> f64 {
    4.0 * (-(d as f64) * gamma * gamma / 8.0).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipMode {
    /// Samples only the two image vectors a trial needs; same law as `Full`.
    Reduced,
    /// Draws the whole `d x (n+1)` matrix every trial.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipRateConfig {
    pub n: usize,
    pub d: usize,
    pub gamma: f64,
    pub trials: u64,
    pub seed: u64,
    pub mode: FlipMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipRate {
    pub n: usize,
    pub d: usize,
    pub gamma: f64,
    pub trials: u64,
    pub seed: u64,
    pub flips: u64,
    pub empirical_rate: f64,
    pub bound: f64,
}

/// Monte Carlo estimate of `Pr[sign<Rw, Rx> != sign<w, x>]` over a fresh
/// projection per trial, for unit `w` and `x` uniform on `S^n` outside the
/// margin band `|<w, x>| < gamma`.
pub fn sign_flip_rate(n: usize, d: usize, gamma: f64, trials: u64, seed: u64) -> Result<FlipRate> {
    sign_flip_rate_with(&FlipRateConfig {
        n,
        d,
        gamma,
        trials,
        seed,
        mode: FlipMode::Reduced,
    })
}

pub fn sign_flip_rate_with(cfg: &FlipRateConfig) -> Result<FlipRate> {
    let proj = GaussianProjection::new(cfg.n, cfg.d)?;
    if cfg.trials == 0 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    if !(cfg.gamma >= 0.0 && cfg.gamma < 1.0) {
        return Err(Error::Parameter(format!("gamma must lie in [0, 1), got {}", cfg.gamma)));
    }
    let flips: u64 = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::derived(cfg.seed, i);
            let flipped = match cfg.mode {
                FlipMode::Reduced => reduced_trial(&mut r, cfg.n, cfg.d, cfg.gamma),
                FlipMode::Full => full_trial(&mut r, &proj, cfg.gamma),
            };
            u64::from(flipped)
        })
        .sum();
    Ok(FlipRate {
        n: cfg.n,
        d: cfg.d,
        gamma: cfg.gamma,
        trials: cfg.trials,
        seed: cfg.seed,
        flips,
        empirical_rate: flips as f64 / cfg.trials as f64,
        bound: flip_bound(cfg.d, cfg.gamma),
    })
}

/// `<w, x>` for `x` uniform on `S^n` conditioned on `|<w, x>| >= gamma`.
///
/// The inner product has density proportional to `(1 - t²)^{(n-2)/2}`; for
/// `n >= 2` that is nonincreasing in `|t|`, so uniform proposals on
/// `[gamma, 1]` with ratio acceptance are exact.
fn margin_inner_product(r: &mut rng::Rng, n: usize, gamma: f64) -> f64 {
    if n == 1 {
        loop {
            let t = (r.gen::<f64>() * std::f64::consts::TAU).cos();
            if t.abs() >= gamma {
                return t;
            }
        }
    }
    let exponent = (n as f64 - 2.0) / 2.0;
    let base = 1.0 - gamma * gamma;
    let t = loop {
        let t = r.gen_range(gamma..=1.0);
        let accept = ((1.0 - t * t) / base).powf(exponent);
        if r.gen::<f64>() < accept {
            break t;
        }
    };
    if r.gen::<bool>() {
        t
    } else {
        -t
    }
}

// By rotation invariance of the Gaussian matrix, (Rw, Rx) has the law of
// (g1, t g1 + s g2) with g1, g2 independent standard normal vectors.
fn reduced_trial(r: &mut rng::Rng, n: usize, d: usize, gamma: f64) -> bool {
    let t = margin_inner_product(r, n, gamma);
    let s = (1.0 - t * t).max(0.0).sqrt();
    let g1 = rng::gaussian_vec(r, d);
    let g2 = rng::gaussian_vec(r, d);
    let projected = t * norm_sq(&g1) + s * dot(&g1, &g2);
    Label::from_sign(projected) != Label::from_sign(t)
}

fn full_trial(r: &mut rng::Rng, proj: &GaussianProjection, gamma: f64) -> bool {
    let dim = proj.n + 1;
    let w = rng::unit_vector(r, dim);
    let t = margin_inner_product(r, proj.n, gamma);
    let u = loop {
        let mut g = rng::gaussian_vec(r, dim);
        let c = dot(&g, &w);
        for (gi, wi) in g.iter_mut().zip(&w) {
            *gi -= c * wi;
        }
        if let Some(u) = normalized(&g) {
            break u;
        }
    };
    let s = (1.0 - t * t).max(0.0).sqrt();
    let x: Vec<f64> = w.iter().zip(&u).map(|(a, b)| t * a + s * b).collect();
    let rep = proj.sample(r.gen());
    let rw = rep.apply(&w).expect("dimension checked");
    let rx = rep.apply(&x).expect("dimension checked");
    Label::from_sign(dot(&rw, &rx)) != Label::from_sign(dot(&w, &x))
}
