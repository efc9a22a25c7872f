//! Half-space representations: maps from a domain into `R^D` under which a
//! concept class becomes (approximately) a class of homogeneous half-spaces.

mod fit;
mod helly;
mod majority;
mod projection;
mod signrank;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::learning::{point_key, FiniteDistribution, LabeledExample};

pub use fit::{best_halfspace_fit, homogeneous_zero_one, FitOptions, FitResult};
pub use helly::{helly_certify, HellyFailure, HellyReport};
pub use majority::{
    majority3_identity_check, planted_majority3_instance, random_majority3_suite, Majority3Record,
    Majority3Report,
};
pub use projection::{
    flip_bound, required_dimension, sign_flip_rate, sign_flip_rate_with, FlipMode, FlipRate,
    FlipRateConfig, GaussianProjection,
};
pub use signrank::{extract_signrank_witness, SignRankWitness};

/// A deterministic map `r: X -> R^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Representation {
    Identity { dim: usize },
    /// `x -> M x` with `M` stored row-major as `D` rows.
    Linear { matrix: Vec<Vec<f64>> },
    /// Lookup table on a finite domain.
    Tabulated { points: Vec<Vec<f64>>, images: Vec<Vec<f64>> },
}

impl Representation {
    pub fn linear(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let cols = matrix.first().map_or(0, Vec::len);
        if matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::Parameter("matrix rows have different lengths".into()));
        }
        Ok(Representation::Linear { matrix })
    }

    pub fn tabulated(points: Vec<Vec<f64>>, images: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(points.len(), images.len())?;
        let d = images.first().map_or(0, Vec::len);
        if images.iter().any(|v| v.len() != d) {
            return Err(Error::Parameter("tabulated images have different dimensions".into()));
        }
        Ok(Representation::Tabulated { points, images })
    }

    pub fn target_dim(&self) -> usize {
        match self {
            Representation::Identity { dim } => *dim,
            Representation::Linear { matrix } => matrix.len(),
            Representation::Tabulated { images, .. } => images.first().map_or(0, Vec::len),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Representation::Identity { dim } => {
                check_dim(*dim, x.len())?;
                Ok(x.to_vec())
            }
            Representation::Linear { matrix } => {
                if let Some(row) = matrix.first() {
                    check_dim(row.len(), x.len())?;
                }
                Ok(matrix.iter().map(|row| crate::vecops::dot(row, x)).collect())
            }
            Representation::Tabulated { points, images } => {
                let key = point_key(x);
                points
                    .iter()
                    .position(|p| point_key(p) == key)
                    .map(|i| images[i].clone())
                    .ok_or_else(|| Error::Domain(format!("{x:?} is not in the tabulated domain")))
            }
        }
    }

    /// `(x, y) -> (r(x), y)`.
    pub fn apply_example(&self, z: &LabeledExample) -> Result<LabeledExample> {
        Ok(LabeledExample::new(self.apply(&z.point)?, z.label))
    }

    pub fn pushforward(&self, dist: &FiniteDistribution) -> Result<FiniteDistribution> {
        dist.map_examples(|z| self.apply_example(z))
    }
}
