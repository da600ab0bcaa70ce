//! Toy demonstration of class rebalancing on an imbalanced 2-D problem.
//!
//! Two Gaussian blobs, a majority and a minority class, are fitted by a
//! linear softmax classifier with full-batch gradient descent on the
//! class-weighted cross-entropy, once with uniform weights and once with
//! count-rebalanced weights.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::{
    cbce_loss, count_batch_classes, default_phi, rebalanced_weights, uniform_weights, ClassTensor,
    Reduction, WeightVector,
};
use crate::error::{Error, Result};
use crate::quantizer::ClassMap;

const N_CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoConfig {
    pub seed: u64,
    pub majority: usize,
    pub minority: usize,
    /// Distance between the two blob centers, in units of the blob std.
    pub separation: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub upsilon: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            majority: 990,
            minority: 10,
            separation: 5.0,
            iterations: 500,
            learning_rate: 0.1,
            upsilon: super::DEFAULT_UPSILON,
        }
    }
}

impl DemoConfig {
    /// Equal class sizes with otherwise default settings.
    pub fn balanced(seed: u64) -> Self {
        Self {
            seed,
            majority: 500,
            minority: 500,
            ..Self::default()
        }
    }

    /// A 99:1 split with otherwise default settings.
    pub fn imbalanced(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmReport {
    pub weights: Vec<f64>,
    /// Training-set recall for class 0 (majority) and class 1 (minority).
    pub recall: Vec<f64>,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub config: DemoConfig,
    pub uniform: ArmReport,
    pub rebalanced: ArmReport,
}

struct Dataset {
    points: Vec<[f64; 2]>,
    labels: ClassMap,
}

fn make_dataset(cfg: &DemoConfig) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let half = cfg.separation / 2.0;
    let mut points = Vec::with_capacity(cfg.majority + cfg.minority);
    let mut labels = Vec::with_capacity(cfg.majority + cfg.minority);
    for (class, n, cx) in [(0u16, cfg.majority, -half), (1, cfg.minority, half)] {
        for _ in 0..n {
            points.push([cx + noise.sample(&mut rng), noise.sample(&mut rng)]);
            labels.push(class);
        }
    }
    let n = points.len();
    Ok(Dataset {
        points,
        labels: ClassMap::new(n, 1, N_CLASSES, labels)?,
    })
}

/// Linear softmax model: `logits = W x + b`, `W` is 2x2.
#[derive(Default)]
struct Linear {
    w: [[f64; 2]; N_CLASSES],
    b: [f64; N_CLASSES],
}

impl Linear {
    fn logits(&self, points: &[[f64; 2]]) -> ClassTensor {
        let data = points
            .iter()
            .flat_map(|p| {
                (0..N_CLASSES).map(move |k| self.w[k][0] * p[0] + self.w[k][1] * p[1] + self.b[k])
            })
            .collect();
        ClassTensor::new(1, 1, points.len(), N_CLASSES, data).expect("shape")
    }
}

fn train(data: &Dataset, weights: &WeightVector, cfg: &DemoConfig) -> Result<ArmReport> {
    let mut model = Linear::default();
    let targets = std::slice::from_ref(&data.labels);
    for _ in 0..cfg.iterations {
        let r = cbce_loss(
            &model.logits(&data.points),
            targets,
            weights,
            Reduction::Mean,
        )?;
        let mut gw = [[0.0; 2]; N_CLASSES];
        let mut gb = [0.0; N_CLASSES];
        for (p, g) in data
            .points
            .iter()
            .zip(r.grad.data().chunks_exact(N_CLASSES))
        {
            for k in 0..N_CLASSES {
                gw[k][0] += g[k] * p[0];
                gw[k][1] += g[k] * p[1];
                gb[k] += g[k];
            }
        }
        for k in 0..N_CLASSES {
            model.w[k][0] -= cfg.learning_rate * gw[k][0];
            model.w[k][1] -= cfg.learning_rate * gw[k][1];
            model.b[k] -= cfg.learning_rate * gb[k];
        }
    }

    let logits = model.logits(&data.points);
    let final_loss = cbce_loss(&logits, targets, weights, Reduction::Mean)?.loss;
    let mut hits = [0usize; N_CLASSES];
    let mut totals = [0usize; N_CLASSES];
    for (z, &truth) in logits
        .data()
        .chunks_exact(N_CLASSES)
        .zip(data.labels.data())
    {
        let predicted = if z[1] > z[0] { 1 } else { 0 };
        let truth = usize::from(truth);
        totals[truth] += 1;
        if predicted == truth {
            hits[truth] += 1;
        }
    }
    let recall = hits
        .iter()
        .zip(&totals)
        .map(|(&h, &t)| if t == 0 { 0.0 } else { h as f64 / t as f64 })
        .collect();
    Ok(ArmReport {
        weights: weights.weights().to_vec(),
        recall,
        final_loss,
    })
}

/// Trains the uniform and the rebalanced arm on the same seeded dataset.
pub fn demo_rebalance(cfg: &DemoConfig) -> Result<DemoReport> {
    if cfg.majority == 0 || cfg.minority == 0 {
        return Err(Error::InvalidParameter(
            "both classes need at least one sample".into(),
        ));
    }
    if !(cfg.learning_rate > 0.0 && cfg.separation.is_finite()) {
        return Err(Error::InvalidParameter(
            "learning rate must be positive".into(),
        ));
    }
    let data = make_dataset(cfg)?;
    let uniform = uniform_weights(N_CLASSES)?;
    let counts = count_batch_classes(std::slice::from_ref(&data.labels), N_CLASSES)?;
    let rebalanced = rebalanced_weights(&counts, cfg.upsilon, default_phi(N_CLASSES))?;
    Ok(DemoReport {
        config: cfg.clone(),
        uniform: train(&data, &uniform, cfg)?,
        rebalanced: train(&data, &rebalanced, cfg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_data_gets_flat_weights_and_high_recall() {
        let r = demo_rebalance(&DemoConfig::balanced(1)).unwrap();
        for arm in [&r.uniform, &r.rebalanced] {
            assert_eq!(arm.weights[0], arm.weights[1]);
            assert!(arm.recall[1] > 0.95, "{arm:?}");
        }
    }

    #[test]
    fn imbalanced_minority_recall_does_not_drop() {
        let r = demo_rebalance(&DemoConfig::imbalanced(7)).unwrap();
        assert!(r.rebalanced.weights[1] > r.rebalanced.weights[0]);
        assert!(r.rebalanced.recall[1] >= r.uniform.recall[1], "{r:?}");
    }

    #[test]
    fn same_seed_same_report() {
        let cfg = DemoConfig {
            iterations: 50,
            ..DemoConfig::imbalanced(3)
        };
        assert_eq!(demo_rebalance(&cfg).unwrap(), demo_rebalance(&cfg).unwrap());
    }
}
