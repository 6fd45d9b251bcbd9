//! CSV persistence. Headers and column order are fixed; numbers are written
//! with `.` as the decimal point and no grouping, NaN as `NaN`.

use std::fmt::Write as _;

use crate::optimizer::StepRecord;

pub const CELL_HEADER: &str = "arm,seed,step,train_loss,grad_error,test_acc,epsilon,wall_ms,raw_grad_error";

pub const SUMMARY_HEADER: &str = "arm,method,seeds,steps,noise_multiplier,epsilon,\
train_loss_mean,train_loss_stderr,grad_error_mean,grad_error_stderr,\
test_acc_mean,test_acc_stderr,mean_grad_error,mean_raw_grad_error";

pub const CURVE_HEADER: &str = "arm,step,train_loss_mean,train_loss_stderr,grad_error_mean,test_acc_mean,epsilon";

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-4, 1e15)`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e15) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Per-step rows of one (arm, seed) cell.
#[derive(Debug, Clone)]
pub struct MetricsLog {
    pub arm: String,
    pub seed: u64,
    pub records: Vec<StepRecord>,
}

impl MetricsLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.records.len() + 1));
        s.push_str(CELL_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                self.arm,
                self.seed,
                r.step,
                fmt_num(r.train_loss),
                fmt_num(r.grad_error),
                fmt_num(r.test_acc),
                fmt_num(r.epsilon),
                fmt_num(r.wall_ms),
                fmt_num(r.raw_grad_error)
            );
        }
        s
    }

    /// Mean of a finite metric over all steps; NaN if none is finite.
    pub fn mean_over_steps(&self, f: impl Fn(&StepRecord) -> f64) -> f64 {
        let (sum, n) = self
            .records
            .iter()
            .map(&f)
            .filter(|v| v.is_finite())
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            f64::NAN
        } else {
            sum / n as f64
        }
    }

    pub fn final_record(&self) -> Option<&StepRecord> {
        self.records.last()
    }
}

/// Sample mean and standard error; NaN entries are skipped.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    match v.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (v[0], f64::NAN),
        n => {
            let mean = v.iter().sum::<f64>() / n as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (mean, (var / n as f64).sqrt())
        }
    }
}

/// Final-metric statistics of one arm across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub arm: String,
    pub method: String,
    pub seeds: usize,
    pub steps: u64,
    pub noise_multiplier: f64,
    /// Largest spent epsilon across seeds (all equal unless seeds differ in T).
    pub epsilon: f64,
    pub train_loss: (f64, f64),
    pub grad_error: (f64, f64),
    pub test_acc: (f64, f64),
    /// Gradient-estimate errors averaged over steps, then seeds.
    pub mean_grad_error: f64,
    pub mean_raw_grad_error: f64,
}

impl ArmSummary {
    pub fn from_logs(arm: &str, method: &str, noise_multiplier: f64, logs: &[&MetricsLog]) -> Self {
        let finals: Vec<StepRecord> = logs.iter().filter_map(|l| l.final_record().copied()).collect();
        let pick = |f: fn(&StepRecord) -> f64| finals.iter().map(f).collect::<Vec<_>>();
        let avg = |v: Vec<f64>| mean_stderr(&v).0;
        Self {
            arm: arm.to_string(),
            method: method.to_string(),
            seeds: logs.len(),
            steps: finals.iter().map(|r| r.step).max().unwrap_or(0),
            noise_multiplier,
            epsilon: finals.iter().map(|r| r.epsilon).fold(0.0, f64::max),
            train_loss: mean_stderr(&pick(|r| r.train_loss)),
            grad_error: mean_stderr(&pick(|r| r.grad_error)),
            test_acc: mean_stderr(&pick(|r| r.test_acc)),
            mean_grad_error: avg(logs.iter().map(|l| l.mean_over_steps(|r| r.grad_error)).collect()),
            mean_raw_grad_error: avg(logs.iter().map(|l| l.mean_over_steps(|r| r.raw_grad_error)).collect()),
        }
    }

    pub fn csv_row(&self) -> String {
        [
            self.arm.clone(),
            self.method.clone(),
            self.seeds.to_string(),
            self.steps.to_string(),
            fmt_num(self.noise_multiplier),
            fmt_num(self.epsilon),
            fmt_num(self.train_loss.0),
            fmt_num(self.train_loss.1),
            fmt_num(self.grad_error.0),
            fmt_num(self.grad_error.1),
            fmt_num(self.test_acc.0),
            fmt_num(self.test_acc.1),
            fmt_num(self.mean_grad_error),
            fmt_num(self.mean_raw_grad_error),
        ]
        .join(",")
    }
}

pub fn summary_csv(rows: &[ArmSummary]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Across-seed mean curves of one arm, one row per logged step.
pub fn curve_rows(arm: &str, logs: &[&MetricsLog]) -> String {
    let mut s = String::new();
    let steps = logs.iter().map(|l| l.records.len()).min().unwrap_or(0);
    for i in 0..steps {
        let col = |f: fn(&StepRecord) -> f64| mean_stderr(&logs.iter().map(|l| f(&l.records[i])).collect::<Vec<_>>());
        let loss = col(|r| r.train_loss);
        let _ = writeln!(
            s,
            "{arm},{},{},{},{},{},{}",
            logs[0].records[i].step,
            fmt_num(loss.0),
            fmt_num(loss.1),
            fmt_num(col(|r| r.grad_error).0),
            fmt_num(col(|r| r.test_acc).0),
            fmt_num(col(|r| r.epsilon).0)
        );
    }
    s
}
