use crate::error::{check_dim, Error, Result};
use crate::learning::{LabeledExample, LossValue};
use crate::vecops::{dot, norm_sq, sign};

use super::{ExampleLoss, LossKind};

/// `max(0, 1 - y(<w, x> + a))`.
pub fn hinge_loss(example: &LabeledExample, w: &[f64], a: f64) -> Result<f64> {
    check_dim(example.point.len(), w.len())?;
    Ok((1.0 - example.label.value() * (dot(w, &example.point) + a)).max(0.0))
}

/// `‖w‖²` when `sign(<x, w>) = y` (with `sign(0) = +1`), `∞` otherwise.
pub fn lp_loss(example: &LabeledExample, w: &[f64]) -> Result<LossValue> {
    check_dim(example.point.len(), w.len())?;
    if sign(dot(&example.point, w)) == example.label.value() {
        Ok(LossValue::Finite(norm_sq(w)))
    } else {
        Ok(LossValue::Infinite)
    }
}

/// Hinge loss on the stacked parameter vector `(w, a)`.
#[derive(Debug, Clone, Copy)]
pub struct HingeLoss;

fn split_offset<'a>(z: &LabeledExample, param: &'a [f64]) -> Result<(&'a [f64], f64)> {
    check_dim(z.point.len() + 1, param.len())?;
    let (w, a) = param.split_at(z.point.len());
    Ok((w, a[0]))
}

impl ExampleLoss for HingeLoss {
    fn kind(&self) -> LossKind {
        LossKind::Hinge
    }

    fn value(&self, z: &LabeledExample, param: &[f64]) -> Result<LossValue> {
        let (w, a) = split_offset(z, param)?;
        LossValue::finite(hinge_loss(z, w, a)?)
    }

    fn subgradient(&self, z: &LabeledExample, param: &[f64]) -> Result<Vec<f64>> {
        let (w, a) = split_offset(z, param)?;
        let y = z.label.value();
        if y * (dot(w, &z.point) + a) < 1.0 {
            let mut g: Vec<f64> = z.point.iter().map(|x| -y * x).collect();
            g.push(-y);
            Ok(g)
        } else {
            Ok(vec![0.0; param.len()])
        }
    }

    fn lipschitz(&self, z: &LabeledExample) -> Option<f64> {
        Some((norm_sq(&z.point) + 1.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LpLoss;

impl ExampleLoss for LpLoss {
    fn kind(&self) -> LossKind {
        LossKind::LinearProgramming
    }

    fn value(&self, z: &LabeledExample, w: &[f64]) -> Result<LossValue> {
        lp_loss(z, w)
    }

    fn subgradient(&self, z: &LabeledExample, w: &[f64]) -> Result<Vec<f64>> {
        if lp_loss(z, w)?.is_finite() {
            Ok(w.iter().map(|v| 2.0 * v).collect())
        } else {
            Err(Error::Domain(format!(
                "linear-programming loss is infinite at {w:?} for {:?}",
                z.point
            )))
        }
    }

    fn lipschitz(&self, _z: &LabeledExample) -> Option<f64> {
        None
    }
}

/// `|y - w| / 2` on `W = [-1, 1]`; the example's point is ignored.
#[derive(Debug, Clone, Copy)]
pub struct HalfAbsoluteLoss;

impl ExampleLoss for HalfAbsoluteLoss {
    fn kind(&self) -> LossKind {
        LossKind::HalfAbsolute
    }

    fn value(&self, z: &LabeledExample, w: &[f64]) -> Result<LossValue> {
        check_dim(1, w.len())?;
        LossValue::finite(0.5 * (z.label.value() - w[0]).abs())
    }

    fn subgradient(&self, z: &LabeledExample, w: &[f64]) -> Result<Vec<f64>> {
        check_dim(1, w.len())?;
        let d = w[0] - z.label.value();
        Ok(vec![if d > 0.0 {
            0.5
        } else if d < 0.0 {
            -0.5
        } else {
            0.0
        }])
    }

    fn lipschitz(&self, _z: &LabeledExample) -> Option<f64> {
        Some(0.5)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantLoss(pub f64);

impl ExampleLoss for ConstantLoss {
    fn kind(&self) -> LossKind {
        LossKind::Constant
    }

    fn value(&self, _z: &LabeledExample, _w: &[f64]) -> Result<LossValue> {
        LossValue::finite(self.0)
    }

    fn subgradient(&self, _z: &LabeledExample, w: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; w.len()])
    }

    fn lipschitz(&self, _z: &LabeledExample) -> Option<f64> {
        Some(0.0)
    }
}
