use super::{argmax, check_dim, log_softmax, Dataset, Problem, ProblemError};
use crate::rng::{Stream, StreamRng};

/// One-hidden-layer tanh network with a softmax output.
///
/// Flat parameter layout: `W1` (hidden × input, row-major), `b1`,
/// `W2` (classes × hidden, row-major), `b2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpShape {
    pub input: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl MlpShape {
    /// 784 → 64 → 10, `d = 50 890`.
    pub const MNIST: MlpShape = MlpShape {
        input: 784,
        hidden: 64,
        classes: 10,
    };

    pub fn dim(&self) -> usize {
        self.hidden * self.input + self.hidden + self.classes * self.hidden + self.classes
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.input;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.classes * self.hidden;
        (b1, w2, b2)
    }
}

struct Forward {
    hidden: Vec<f64>,
    log_probs: Vec<f64>,
}

fn forward(shape: &MlpShape, params: &[f64], features: &[f64]) -> Result<Forward, ProblemError> {
    let (b1, w2, b2) = shape.offsets();
    let hidden: Vec<f64> = (0..shape.hidden)
        .map(|j| {
            let row = &params[j * shape.input..(j + 1) * shape.input];
            (params[b1 + j] + row.iter().zip(features).map(|(w, x)| w * x).sum::<f64>()).tanh()
        })
        .collect();
    if hidden.iter().any(|h| !h.is_finite()) {
        return Err(ProblemError::NonFinite { layer: "hidden" });
    }
    let mut log_probs: Vec<f64> = (0..shape.classes)
        .map(|c| {
            let row = &params[w2 + c * shape.hidden..w2 + (c + 1) * shape.hidden];
            params[b2 + c] + row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>()
        })
        .collect();
    let lse = log_softmax(&mut log_probs);
    if !lse.is_finite() || log_probs.iter().any(|v| !v.is_finite()) {
        return Err(ProblemError::NonFinite { layer: "output" });
    }
    Ok(Forward { hidden, log_probs })
}

/// Per-example loss and flattened gradient.
pub fn mlp_forward_backward(
    shape: &MlpShape,
    params: &[f64],
    features: &[f64],
    label: usize,
    grad: &mut [f64],
) -> Result<f64, ProblemError> {
    let (b1, w2, b2) = shape.offsets();
    let fwd = forward(shape, params, features)?;
    let loss = -fwd.log_probs[label];

    let mut delta_hidden = vec![0.0; shape.hidden];
    for c in 0..shape.classes {
        let residual = fwd.log_probs[c].exp() - if c == label { 1.0 } else { 0.0 };
        grad[b2 + c] = residual;
        let w_row = &params[w2 + c * shape.hidden..w2 + (c + 1) * shape.hidden];
        let g_row = &mut grad[w2 + c * shape.hidden..w2 + (c + 1) * shape.hidden];
        for j in 0..shape.hidden {
            g_row[j] = residual * fwd.hidden[j];
            delta_hidden[j] += residual * w_row[j];
        }
    }
    for j in 0..shape.hidden {
        let dz = delta_hidden[j] * (1.0 - fwd.hidden[j] * fwd.hidden[j]);
        grad[b1 + j] = dz;
        for (g, x) in grad[j * shape.input..(j + 1) * shape.input].iter_mut().zip(features) {
            *g = dz * x;
        }
    }
    Ok(loss)
}

/// Classification problem backed by an [`MlpShape`] network.
#[derive(Debug, Clone)]
pub struct Mlp {
    shape: MlpShape,
    train: Dataset,
    test: Option<Dataset>,
    init_seed: u64,
}

impl Mlp {
    pub fn new(shape: MlpShape, train: Dataset, test: Option<Dataset>, init_seed: u64) -> Result<Self, ProblemError> {
        if train.num_features != shape.input || train.classes != shape.classes {
            return Err(ProblemError::InvalidSpec(format!(
                "dataset is {} features × {} classes, network expects {} × {}",
                train.num_features, train.classes, shape.input, shape.classes
            )));
        }
        if train.is_empty() {
            return Err(ProblemError::InvalidSpec("empty training set".into()));
        }
        Ok(Self {
            shape,
            train,
            test,
            init_seed,
        })
    }

    pub fn shape(&self) -> MlpShape {
        self.shape
    }
}

impl Problem for Mlp {
    fn name(&self) -> &str {
        "mlp"
    }

    fn dim(&self) -> usize {
        self.shape.dim()
    }

    fn num_examples(&self) -> usize {
        self.train.len()
    }

    /// Glorot-scaled Gaussian weights, zero biases.
    fn initial_point(&self) -> Vec<f64> {
        let s = self.shape;
        let (b1, w2, b2) = s.offsets();
        let mut rng = StreamRng::new(self.init_seed, Stream::Init);
        let mut x = vec![0.0; s.dim()];
        let scale1 = (2.0 / (s.input + s.hidden) as f64).sqrt();
        let scale2 = (2.0 / (s.hidden + s.classes) as f64).sqrt();
        x[..b1].iter_mut().for_each(|v| *v = scale1 * rng.gaussian());
        x[w2..b2].iter_mut().for_each(|v| *v = scale2 * rng.gaussian());
        x
    }

    fn loss(&self, x: &[f64], example: usize) -> Result<f64, ProblemError> {
        check_dim(x, self.dim())?;
        let (f, y) = self.train.example(example);
        Ok(-forward(&self.shape, x, f)?.log_probs[y])
    }

    fn gradient(&self, x: &[f64], example: usize, out: &mut [f64]) -> Result<(), ProblemError> {
        check_dim(x, self.dim())?;
        let (f, y) = self.train.example(example);
        mlp_forward_backward(&self.shape, x, f, y, out).map(|_| ())
    }

    fn test_accuracy(&self, x: &[f64]) -> Option<f64> {
        let test = self.test.as_ref()?;
        if test.is_empty() {
            return None;
        }
        let correct = (0..test.len())
            .filter(|&i| {
                let (f, y) = test.example(i);
                forward(&self.shape, x, f)
                    .map(|o| argmax(&o.log_probs) == y)
                    .unwrap_or(false)
            })
            .count();
        Some(correct as f64 / test.len() as f64)
    }
}
