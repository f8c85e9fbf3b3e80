use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::TailOutputs;
use crate::numerics::Scalar;

/// Per-head reconstruction loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// Mean absolute error, used for signed distance fields.
    L1Sdf,
    /// Mean squared error over all pixels and channels.
    L2Image,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::L1Sdf => "l1_sdf",
            LossKind::L2Image => "l2_image",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1_sdf" => Ok(LossKind::L1Sdf),
            "l2_image" => Ok(LossKind::L2Image),
            _ => Err(Error::InvalidConfig(format!("unknown loss kind '{s}'"))),
        }
    }
}

/// Weight `λ_i` of the cumulative output of every hidden layer `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossWeights(Vec<f64>);

impl LossWeights {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "loss weights must be finite and non-negative: {lambda:?}"
            )));
        }
        if !lambda.iter().any(|&l| l > 0.0) {
            return Err(Error::InvalidConfig(
                "at least one loss weight must be positive".into(),
            ));
        }
        Ok(LossWeights(lambda))
    }

    /// Equal unit weight on all `k` layers.
    pub fn uniform(k: usize) -> Self {
        LossWeights(vec![1.0; k])
    }

    /// `(0, 0.5, 0.5, 0.5, 2.5)`, the five-layer signed-distance weighting.
    pub fn sdf_default() -> Self {
        LossWeights(vec![0.0, 0.5, 0.5, 0.5, 2.5])
    }

    /// `(0, 0, 1, 1, 1)`, the five-layer image weighting.
    pub fn image_default() -> Self {
        LossWeights(vec![0.0, 0.0, 1.0, 1.0, 1.0])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Weight of the output on hidden layer `level` (1-based).
    pub fn at(&self, level: usize) -> f64 {
        self.0[level - 1]
    }
}

/// Loss value and its gradient with respect to every head output.
#[derive(Clone, Debug)]
pub struct LossEval<T> {
    pub total: f64,
    /// Unweighted loss of each head output, in head order.
    pub per_head: Vec<f64>,
    /// `λ_i ∂L/∂y_i` per head, zero where `λ_i = 0`.
    pub grads: Vec<Vec<T>>,
}

/// Weighted multi-head objective `Σ_i λ_i L(y_i)`.
///
/// `gt` is the row-major target batch. Sums are accumulated in binary64 in
/// sample order.
pub fn total_loss<T: Scalar>(
    tails: &TailOutputs<T>,
    gt: &[T],
    weights: &LossWeights,
    kind: LossKind,
) -> Result<LossEval<T>> {
    let k = tails.levels().last().copied().unwrap_or(0);
    if weights.len() != k {
        return Err(Error::shape(
            "total_loss",
            format!("{} loss weights", weights.len()),
            format!("{k} hidden layers"),
        ));
    }
    let count = tails.batch_size() * tails.output_dim();
    if gt.len() != count {
        return Err(Error::shape(
            "total_loss",
            format!("outputs[{count}]"),
            format!("targets[{}]", gt.len()),
        ));
    }
    let mut total = 0.0;
    let mut per_head = Vec::with_capacity(tails.len());
    let mut grads = Vec::with_capacity(tails.len());
    for (j, &level) in tails.levels().iter().enumerate() {
        let lambda = weights.at(level);
        let (loss, g) = head_loss(tails.y(j), gt, kind, lambda);
        total += lambda * loss;
        per_head.push(loss);
        grads.push(g);
    }
    Ok(LossEval {
        total,
        per_head,
        grads,
    })
}

/// Unweighted loss of one output batch against `gt`, and `weight * dL/dy`.
pub fn head_loss<T: Scalar>(y: &[T], gt: &[T], kind: LossKind, weight: f64) -> (f64, Vec<T>) {
    debug_assert_eq!(y.len(), gt.len());
    let inv = 1.0 / y.len().max(1) as f64;
    let loss = match kind {
        LossKind::L1Sdf => y
            .iter()
            .zip(gt)
            .map(|(&a, &b)| (a.as_f64() - b.as_f64()).abs())
            .sum::<f64>(),
        LossKind::L2Image => y
            .iter()
            .zip(gt)
            .map(|(&a, &b)| {
                let d = a.as_f64() - b.as_f64();
                d * d
            })
            .sum::<f64>(),
    } * inv;
    if weight == 0.0 {
        return (loss, vec![T::zero(); y.len()]);
    }
    let scale = T::from_f64(weight * inv);
    let grad = match kind {
        LossKind::L1Sdf => y
            .iter()
            .zip(gt)
            .map(|(&a, &b)| {
                if a > b {
                    scale
                } else if a < b {
                    -scale
                } else {
                    T::zero()
                }
            })
            .collect(),
        LossKind::L2Image => {
            let two = T::from_f64(2.0 * weight * inv);
            y.iter().zip(gt).map(|(&a, &b)| two * (a - b)).collect()
        }
    };
    (loss, grad)
}
