use super::{argmax, check_dim, log_softmax, Dataset, Problem, ProblemError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogisticKind {
    /// Sigmoid model `σ(wᵀx + b)` on labels `{0, 1}`; parameters `[w; b]`.
    Binary,
    /// Softmax model `softmax(Wx + b)`; parameters are `W` row-major then `b`.
    Multinomial,
}

impl LogisticKind {
    pub fn dim(self, num_features: usize, classes: usize) -> usize {
        match self {
            LogisticKind::Binary => num_features + 1,
            LogisticKind::Multinomial => classes * (num_features + 1),
        }
    }
}

fn logits(params: &[f64], features: &[f64], classes: usize) -> Vec<f64> {
    let p = features.len();
    let bias = &params[classes * p..];
    (0..classes)
        .map(|c| {
            let row = &params[c * p..(c + 1) * p];
            bias[c] + row.iter().zip(features).map(|(w, x)| w * x).sum::<f64>()
        })
        .collect()
}

/// Per-example cross-entropy.
pub fn logistic_loss(kind: LogisticKind, params: &[f64], features: &[f64], label: usize, classes: usize) -> f64 {
    match kind {
        LogisticKind::Binary => {
            let p = features.len();
            let z = params[p] + params[..p].iter().zip(features).map(|(w, x)| w * x).sum::<f64>();
            // softplus(z) - y z, written to stay finite for large |z|
            let softplus = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            softplus - label as f64 * z
        }
        LogisticKind::Multinomial => {
            let mut z = logits(params, features, classes);
            log_softmax(&mut z);
            -z[label]
        }
    }
}

/// Per-example cross-entropy gradient, written into `out`.
pub fn logistic_gradient(
    kind: LogisticKind,
    params: &[f64],
    features: &[f64],
    label: usize,
    classes: usize,
    out: &mut [f64],
) {
    let p = features.len();
    match kind {
        LogisticKind::Binary => {
            let z = params[p] + params[..p].iter().zip(features).map(|(w, x)| w * x).sum::<f64>();
            let residual = 1.0 / (1.0 + (-z).exp()) - label as f64;
            for (o, x) in out[..p].iter_mut().zip(features) {
                *o = residual * x;
            }
            out[p] = residual;
        }
        LogisticKind::Multinomial => {
            let mut z = logits(params, features, classes);
            log_softmax(&mut z);
            for c in 0..classes {
                let residual = z[c].exp() - if c == label { 1.0 } else { 0.0 };
                for (o, x) in out[c * p..(c + 1) * p].iter_mut().zip(features) {
                    *o = residual * x;
                }
                out[classes * p + c] = residual;
            }
        }
    }
}

/// Linear classifier trained with cross-entropy.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    kind: LogisticKind,
    train: Dataset,
    test: Option<Dataset>,
}

impl LogisticRegression {
    pub fn new(kind: LogisticKind, train: Dataset, test: Option<Dataset>) -> Result<Self, ProblemError> {
        if kind == LogisticKind::Binary && train.classes != 2 {
            return Err(ProblemError::InvalidSpec(format!(
                "binary logistic regression needs 2 classes, dataset has {}",
                train.classes
            )));
        }
        if train.is_empty() {
            return Err(ProblemError::InvalidSpec("empty training set".into()));
        }
        if let Some(t) = &test {
            if t.num_features != train.num_features {
                return Err(ProblemError::InvalidSpec(
                    "test features do not match training features".into(),
                ));
            }
        }
        Ok(Self { kind, train, test })
    }

    pub fn kind(&self) -> LogisticKind {
        self.kind
    }

    pub fn train_set(&self) -> &Dataset {
        &self.train
    }

    fn predict(&self, params: &[f64], features: &[f64]) -> usize {
        match self.kind {
            LogisticKind::Binary => {
                let p = features.len();
                let z = params[p] + params[..p].iter().zip(features).map(|(w, x)| w * x).sum::<f64>();
                usize::from(z > 0.0)
            }
            LogisticKind::Multinomial => argmax(&logits(params, features, self.train.classes)),
        }
    }
}

impl Problem for LogisticRegression {
    fn name(&self) -> &str {
        match self.kind {
            LogisticKind::Binary => "logistic-binary",
            LogisticKind::Multinomial => "logistic",
        }
    }

    fn dim(&self) -> usize {
        self.kind.dim(self.train.num_features, self.train.classes)
    }

    fn num_examples(&self) -> usize {
        self.train.len()
    }

    fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn loss(&self, x: &[f64], example: usize) -> Result<f64, ProblemError> {
        check_dim(x, self.dim())?;
        let (f, y) = self.train.example(example);
        Ok(logistic_loss(self.kind, x, f, y, self.train.classes))
    }

    fn gradient(&self, x: &[f64], example: usize, out: &mut [f64]) -> Result<(), ProblemError> {
        check_dim(x, self.dim())?;
        let (f, y) = self.train.example(example);
        logistic_gradient(self.kind, x, f, y, self.train.classes, out);
        Ok(())
    }

    fn test_accuracy(&self, x: &[f64]) -> Option<f64> {
        let test = self.test.as_ref()?;
        if test.is_empty() {
            return None;
        }
        let correct = (0..test.len())
            .filter(|&i| {
                let (f, y) = test.example(i);
                self.predict(x, f) == y
            })
            .count();
        Some(correct as f64 / test.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::gradcheck::directional_check;
    use crate::rng::{Stream, StreamRng};

    #[test]
    fn uniform_softmax_gradient_is_p_minus_y() {
        let (p, k) = (3, 4);
        let params = vec![0.0; k * (p + 1)];
        let x = [1.0, -2.0, 0.5];
        let mut g = vec![0.0; params.len()];
        logistic_gradient(LogisticKind::Multinomial, &params, &x, 2, k, &mut g);
        for c in 0..k {
            let expected = 0.25 - if c == 2 { 1.0 } else { 0.0 };
            assert!((g[k * p + c] - expected).abs() < 1e-15);
            assert!((g[c * p + 1] - expected * -2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_weight_binary_gradient_norm() {
        let x = [0.6, -0.8, 2.0];
        let params = vec![0.0; 4];
        let mut g = vec![0.0; 4];
        logistic_gradient(LogisticKind::Binary, &params, &x, 1, 2, &mut g);
        // Augmented feature [x; 1] times |p - y| = 0.5.
        let feature_norm = (0.36f64 + 0.64 + 4.0 + 1.0).sqrt();
        assert!((crate::norm(&g) - 0.5 * feature_norm).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_central_differences() {
        let ds = Dataset::synthetic_blobs(40, 6, 3, 0.8, 2);
        let multi = LogisticRegression::new(LogisticKind::Multinomial, ds, None).unwrap();
        let x = StreamRng::new(3, Stream::Analysis).gaussian_vec(multi.dim(), 0.5);
        let err = directional_check(&multi, &x, &(0..20).collect::<Vec<_>>(), 1e-5, 5);
        assert!(err < 1e-5, "multinomial {err}");

        let ds = Dataset::synthetic_blobs(40, 6, 2, 0.8, 4);
        let bin = LogisticRegression::new(LogisticKind::Binary, ds, None).unwrap();
        let x = StreamRng::new(6, Stream::Analysis).gaussian_vec(bin.dim(), 0.5);
        let err = directional_check(&bin, &x, &(0..20).collect::<Vec<_>>(), 1e-5, 7);
        assert!(err < 1e-5, "binary {err}");
    }

    #[test]
    fn accuracy_on_separable_blobs() {
        let ds = Dataset::synthetic_blobs(200, 4, 2, 0.01, 8);
        let test = ds.clone();
        let model = LogisticRegression::new(LogisticKind::Multinomial, ds, Some(test)).unwrap();
        assert!(model.test_accuracy(&model.initial_point()).unwrap() <= 0.5 + 1e-12);
    }
}
