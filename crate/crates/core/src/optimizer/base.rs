/// First-order update rule applied to the filtered gradient estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseKind {
    Sgd,
    /// Heavy-ball: `v ← βv + g`, `x ← x - ηv`.
    Momentum {
        beta: f64,
    },
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl BaseKind {
    pub fn adam() -> Self {
        BaseKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseKind::Sgd => "sgd",
            BaseKind::Momentum { .. } => "momentum",
            BaseKind::Adam { .. } => "adam",
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let in_unit = |v: f64| (0.0..1.0).contains(&v);
        match *self {
            BaseKind::Sgd => Ok(()),
            BaseKind::Momentum { beta } if in_unit(beta) => Ok(()),
            BaseKind::Momentum { beta } => Err(format!("momentum beta = {beta} must lie in [0, 1)")),
            BaseKind::Adam { beta1, beta2, epsilon } => {
                if !in_unit(beta1) || !in_unit(beta2) {
                    Err(format!("adam betas ({beta1}, {beta2}) must lie in [0, 1)"))
                } else if !(epsilon > 0.0) {
                    Err(format!("adam epsilon = {epsilon} must be positive"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// `Opt(x, η, g̃)` with its internal moment vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseOptimizer {
    kind: BaseKind,
    learning_rate: f64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    steps: u64,
}

impl BaseOptimizer {
    pub fn new(kind: BaseKind, learning_rate: f64, dim: usize) -> Self {
        let second = if matches!(kind, BaseKind::Adam { .. }) { dim } else { 0 };
        let first = if matches!(kind, BaseKind::Sgd) { 0 } else { dim };
        Self {
            kind,
            learning_rate,
            first_moment: vec![0.0; first],
            second_moment: vec![0.0; second],
            steps: 0,
        }
    }

    pub fn kind(&self) -> BaseKind {
        self.kind
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    pub fn step(&mut self, x: &mut [f64], g: &[f64]) {
        self.steps += 1;
        let lr = self.learning_rate;
        match self.kind {
            BaseKind::Sgd => {
                for (xi, gi) in x.iter_mut().zip(g) {
                    *xi -= lr * gi;
                }
            }
            BaseKind::Momentum { beta } => {
                for ((xi, vi), gi) in x.iter_mut().zip(self.first_moment.iter_mut()).zip(g) {
                    *vi = beta * *vi + gi;
                    *xi -= lr * *vi;
                }
            }
            BaseKind::Adam { beta1, beta2, epsilon } => {
                let t = self.steps as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((xi, mi), vi), gi) in x
                    .iter_mut()
                    .zip(self.first_moment.iter_mut())
                    .zip(self.second_moment.iter_mut())
                    .zip(g)
                {
                    *mi = beta1 * *mi + (1.0 - beta1) * gi;
                    *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                    let m_hat = *mi / c1;
                    let v_hat = *vi / c2;
                    *xi -= lr * m_hat / (v_hat.sqrt() + epsilon);
                }
            }
        }
    }
}
