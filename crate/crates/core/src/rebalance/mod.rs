//! Class weighting and losses for chroma classification.
//!
//! Rebalanced weights follow
//!
//! ```text
//! w_c = max(N) / (N_c * upsilon + max(N) * phi)
//! ```
//!
//! where `N_c` is the number of pixels of true class `c` in the batch. The
//! most frequent class gets `1 / (upsilon + phi)` and an absent class gets
//! `1 / phi`. The class-balanced cross-entropy multiplies each pixel's
//! `-log p[true]` term by the weight of its true class.

mod demo;

pub use demo::{demo_rebalance, ArmReport, DemoConfig, DemoReport};

use serde::Serialize;

use crate::colorspace::AbPlane;
use crate::error::{Error, Result};
use crate::quantizer::ClassMap;

pub const DEFAULT_UPSILON: f64 = 0.5;

/// Pixel counts per dense class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCounts {
    counts: Vec<u64>,
}

impl ClassCounts {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParameter(
                "class counts need at least one class".into(),
            ));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// Counts true classes over every pixel of every map in the batch.
pub fn count_batch_classes(maps: &[ClassMap], n_classes: usize) -> Result<ClassCounts> {
    let mut counts = vec![0u64; n_classes];
    for m in maps {
        for &c in m.data() {
            let c = usize::from(c);
            if c >= n_classes {
                return Err(Error::ClassOutOfRange {
                    index: c,
                    n_classes,
                });
            }
            counts[c] += 1;
        }
    }
    ClassCounts::new(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum WeightMode {
    Uniform,
    Rebalanced { upsilon: f64, phi: f64 },
    Custom,
}

/// Positive per-class loss weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    mode: WeightMode,
}

impl WeightVector {
    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("weight vector is empty".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "weights must be positive and finite, got {w}"
            )));
        }
        Ok(Self {
            weights,
            mode: WeightMode::Custom,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `1 / n_classes` for every class.
pub fn uniform_weights(n_classes: usize) -> Result<WeightVector> {
    if n_classes == 0 {
        return Err(Error::InvalidParameter("need at least one class".into()));
    }
    Ok(WeightVector {
        weights: vec![1.0 / n_classes as f64; n_classes],
        mode: WeightMode::Uniform,
    })
}

/// The default trade-off factor `phi = 1 / n_classes`.
pub fn default_phi(n_classes: usize) -> f64 {
    1.0 / n_classes as f64
}

/// Trade-off weights from per-batch class counts.
pub fn rebalanced_weights(c: &ClassCounts, upsilon: f64, phi: f64) -> Result<WeightVector> {
    if !(upsilon > 0.0 && upsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "upsilon must be in (0, 1], got {upsilon}"
        )));
    }
    if !(phi.is_finite() && phi > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "phi must be positive, got {phi}"
        )));
    }
    let max = c.max();
    if max == 0 {
        return Err(Error::InvalidParameter("all class counts are zero".into()));
    }
    let max = max as f64;
    let weights = c
        .counts()
        .iter()
        // max / (n*upsilon + max*phi), divided through by max so that absent
        // classes get exactly 1/phi and the most frequent exactly 1/(upsilon+phi)
        .map(|&n| 1.0 / (n as f64 / max * upsilon + phi))
        .collect();
    Ok(WeightVector {
        weights,
        mode: WeightMode::Rebalanced { upsilon, phi },
    })
}

/// A `batch x height x width x classes` tensor, class axis innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTensor {
    batch: usize,
    height: usize,
    width: usize,
    classes: usize,
    data: Vec<f64>,
}

impl ClassTensor {
    pub fn new(
        batch: usize,
        height: usize,
        width: usize,
        classes: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if classes == 0 {
            return Err(Error::InvalidParameter(
                "tensor needs at least one class channel".into(),
            ));
        }
        let expected = batch * height * width * classes;
        if data.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "tensor of shape {batch}x{height}x{width}x{classes} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            batch,
            height,
            width,
            classes,
            data,
        })
    }

    pub fn zeros(batch: usize, height: usize, width: usize, classes: usize) -> Self {
        Self {
            batch,
            height,
            width,
            classes,
            data: vec![0.0; batch * height * width * classes],
        }
    }

    /// `(batch, height, width, classes)`
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.batch, self.height, self.width, self.classes)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Class vector of one pixel.
    pub fn pixel(&self, b: usize, y: usize, x: usize) -> &[f64] {
        let start = ((b * self.height + y) * self.width + x) * self.classes;
        &self.data[start..start + self.classes]
    }

    fn pixels(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.classes)
    }
}

/// Max-subtracted softmax over the class axis.
pub fn softmax(logits: &ClassTensor) -> ClassTensor {
    let mut out = logits.clone();
    for px in out.data.chunks_exact_mut(logits.classes) {
        let max = px.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in px.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in px.iter_mut() {
            *v /= sum;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Sum over batch and pixels.
    #[default]
    Sum,
    /// Sum divided by `batch * height * width`.
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub loss: f64,
    /// Gradient of `loss` with respect to the logits.
    pub grad: ClassTensor,
}

/// Class-weighted cross-entropy of `logits` against one-hot `targets`.
///
/// Terms are accumulated in batch-major, row-major order in `f64`, so
/// results are bit-stable across runs.
pub fn cbce_loss(
    logits: &ClassTensor,
    targets: &[ClassMap],
    w: &WeightVector,
    reduction: Reduction,
) -> Result<LossResult> {
    let (batch, height, width, classes) = logits.shape();
    if targets.len() != batch {
        return Err(Error::InvalidParameter(format!(
            "{} target maps for a batch of {batch}",
            targets.len()
        )));
    }
    if w.len() != classes {
        return Err(Error::InvalidParameter(format!(
            "{} weights for {classes} classes",
            w.len()
        )));
    }
    for t in targets {
        if t.dims() != (width, height) {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: t.dims(),
            });
        }
    }

    let scale = match reduction {
        Reduction::Sum => 1.0,
        Reduction::Mean => 1.0 / (batch * height * width).max(1) as f64,
    };
    let mut loss = 0.0;
    let mut grad = ClassTensor::zeros(batch, height, width, classes);
    let truths = targets.iter().flat_map(|t| t.data().iter());
    for ((z, g), &truth) in logits
        .pixels()
        .zip(grad.data.chunks_exact_mut(classes))
        .zip(truths)
    {
        let truth = usize::from(truth);
        if truth >= classes {
            return Err(Error::ClassOutOfRange {
                index: truth,
                n_classes: classes,
            });
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
        let log_sum = max + sum.ln();
        let weight = w.weights[truth];
        loss += weight * (log_sum - z[truth]);
        for (k, (gk, zk)) in g.iter_mut().zip(z).enumerate() {
            let p = (zk - log_sum).exp();
            let onehot = if k == truth { 1.0 } else { 0.0 };
            *gk = scale * weight * (p - onehot);
        }
    }
    Ok(LossResult {
        loss: loss * scale,
        grad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressionLoss {
    L1,
    L2,
    Huber { delta: f64 },
    LogCosh,
}

/// `ln(cosh(x))` without overflow for large `|x|`.
fn log_cosh(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
}

/// Mean regression loss over every a* and b* sample.
pub fn regression_loss(pred: &AbPlane, truth: &AbPlane, kind: RegressionLoss) -> Result<f64> {
    if pred.dims() != truth.dims() {
        return Err(Error::DimensionMismatch {
            expected: truth.dims(),
            actual: pred.dims(),
        });
    }
    if let RegressionLoss::Huber { delta } = kind {
        if delta.is_nan() || delta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "huber delta must be positive, got {delta}"
            )));
        }
    }
    if pred.is_empty() {
        return Err(Error::Empty("chroma planes"));
    }
    let term = |e: f64| match kind {
        RegressionLoss::L1 => e.abs(),
        RegressionLoss::L2 => e * e,
        RegressionLoss::Huber { delta } => {
            if e.abs() < delta {
                0.5 * e * e
            } else {
                delta * (e.abs() - 0.5 * delta)
            }
        }
        RegressionLoss::LogCosh => log_cosh(e),
    };
    let pairs = truth
        .a()
        .iter()
        .zip(pred.a())
        .chain(truth.b().iter().zip(pred.b()));
    let sum: f64 = pairs.map(|(t, p)| term(t - p)).sum();
    Ok(sum / (2 * pred.len()) as f64)
}
