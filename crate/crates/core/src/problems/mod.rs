//! Desk-scale optimization problems with per-sample gradients.

mod logistic;
mod mlp;
mod mnist;
mod quadratic;

use thiserror::Error;

pub use logistic::{logistic_gradient, logistic_loss, LogisticKind, LogisticRegression};
pub use mlp::{mlp_forward_backward, Mlp, MlpShape};
pub use mnist::{load_mnist_dir, load_mnist_idx, MnistDataset, MnistError, DATA_DIR_ENV};
pub use quadratic::{QuadraticProblem, QuadraticSpec};

use crate::rng::{Stream, StreamRng};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("non-finite activations in the {layer} layer")]
    NonFinite { layer: &'static str },
    #[error("parameter vector has length {actual}, problem expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid problem specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Mnist(#[from] MnistError),
}

/// Population loss `F(x) = mean_ξ f(x; ξ)` over a finite set of examples.
pub trait Problem: Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn num_examples(&self) -> usize;

    fn initial_point(&self) -> Vec<f64>;

    fn loss(&self, x: &[f64], example: usize) -> Result<f64, ProblemError>;

    /// Writes `∇f(x; ξ_example)` into `out`, overwriting it.
    fn gradient(&self, x: &[f64], example: usize, out: &mut [f64]) -> Result<(), ProblemError>;

    /// `∇F(x)`, when cheaply available in closed form.
    fn exact_gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// `F(x)`, when cheaply available in closed form.
    fn exact_loss(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Held-out classification accuracy in `[0, 1]`.
    fn test_accuracy(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Smoothness constant `L` when known by construction.
    fn smoothness(&self) -> Option<f64> {
        None
    }
}

/// Dense labeled examples, row-major `n × p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub num_features: usize,
    pub classes: usize,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        num_features: usize,
        classes: usize,
    ) -> Result<Self, ProblemError> {
        if num_features == 0 || features.len() != labels.len() * num_features {
            return Err(ProblemError::InvalidSpec(format!(
                "{} feature values for {} labels of width {num_features}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(ProblemError::InvalidSpec(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        Ok(Self {
            features,
            labels,
            num_features,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn example(&self, i: usize) -> (&[f64], usize) {
        let p = self.num_features;
        (&self.features[i * p..(i + 1) * p], self.labels[i])
    }

    /// A seeded shuffle truncated to `n` examples; same seed, same order.
    pub fn seeded_subset(&self, n: usize, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        let mut rng = StreamRng::new(seed, Stream::Init);
        for i in (1..order.len()).rev() {
            let j = rng.below(i + 1);
            order.swap(i, j);
        }
        order.truncate(n.min(self.len()));
        self.select(&order)
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let p = self.num_features;
        let mut features = Vec::with_capacity(indices.len() * p);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            let (f, l) = self.example(i);
            features.extend_from_slice(f);
            labels.push(l);
        }
        Self {
            features,
            labels,
            num_features: p,
            classes: self.classes,
        }
    }

    /// Splits off the last `test` examples.
    pub fn split(mut self, test: usize) -> (Self, Self) {
        let keep = self.len().saturating_sub(test);
        let p = self.num_features;
        let test_set = Self {
            features: self.features.split_off(keep * p),
            labels: self.labels.split_off(keep),
            num_features: p,
            classes: self.classes,
        };
        (self, test_set)
    }

    /// Gaussian class blobs: class `c` is centred on a random unit-scale mean.
    pub fn synthetic_blobs(n: usize, num_features: usize, classes: usize, spread: f64, seed: u64) -> Self {
        let mut rng = StreamRng::new(seed, Stream::Init);
        let means: Vec<Vec<f64>> = (0..classes)
            .map(|_| rng.gaussian_vec(num_features, 1.0 / (num_features as f64).sqrt()))
            .collect();
        let noise = spread / (num_features as f64).sqrt();
        let mut features = Vec::with_capacity(n * num_features);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % classes;
            features.extend(means[c].iter().map(|m| m + noise * rng.gaussian()));
            labels.push(c);
        }
        Self {
            features,
            labels,
            num_features,
            classes,
        }
    }
}

pub(crate) fn check_dim(x: &[f64], expected: usize) -> Result<(), ProblemError> {
    if x.len() != expected {
        return Err(ProblemError::DimensionMismatch {
            expected,
            actual: x.len(),
        });
    }
    Ok(())
}

/// Index of the largest entry.
pub(crate) fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) },
        )
        .0
}

/// Log-softmax in place; returns `ln Σ exp(z)`.
pub(crate) fn log_softmax(z: &mut [f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    for v in z.iter_mut() {
        *v -= lse;
    }
    lse
}
