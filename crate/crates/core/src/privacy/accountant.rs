//! Rényi-DP accounting for the Poisson-subsampled Gaussian mechanism.
//!
//! Per-order costs use the exact series for `A_α = E_{z∼μ₀}[(μ(z)/μ₀(z))^α]`
//! with `μ₀ = N(0, σ²)` and `μ = (1-q) μ₀ + q N(1, σ²)`: a finite binomial sum
//! for integer orders and the erfc-weighted two-sided series for fractional
//! ones. Conversion to `(ε, δ)` uses `ε = min_α RDP(α) + ln(1/δ)/(α - 1)`.

use super::PrivacyError;

const LOG_TERM_CUTOFF: f64 = -30.0;
const MAX_FRACTIONAL_TERMS: usize = 10_000;
const SIGMA_SEARCH_MAX: f64 = 1e4;

/// The fixed order grid `{1.25, 1.5, 2, 3, …, 64}`.
pub fn rdp_orders() -> Vec<f64> {
    let mut orders = vec![1.25, 1.5];
    orders.extend((2..=64).map(f64::from));
    orders
}

/// Composed privacy loss of a training run so far.
#[derive(Debug, Clone, PartialEq)]
pub struct AccountantState {
    steps_taken: u64,
    releases_per_step: u32,
    orders: Vec<f64>,
    accumulated_rdp: Vec<f64>,
}

impl AccountantState {
    pub fn new(releases_per_step: u32) -> Self {
        assert!(releases_per_step >= 1, "releases_per_step must be positive");
        let orders = rdp_orders();
        let accumulated_rdp = vec![0.0; orders.len()];
        Self {
            steps_taken: 0,
            releases_per_step,
            orders,
            accumulated_rdp,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn releases_per_step(&self) -> u32 {
        self.releases_per_step
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn accumulated_rdp(&self) -> &[f64] {
        &self.accumulated_rdp
    }

    /// Adds one step whose single-release cost per order is `per_release`
    /// (as returned by [`rdp_per_release`]).
    pub fn advance(&mut self, per_release: &[f64]) {
        assert_eq!(per_release.len(), self.orders.len());
        let r = f64::from(self.releases_per_step);
        for (acc, c) in self.accumulated_rdp.iter_mut().zip(per_release) {
            *acc += r * c;
        }
        self.steps_taken += 1;
    }

    pub fn epsilon(&self, delta: f64) -> f64 {
        epsilon_at_delta(self, delta)
    }
}

/// Returns `state` advanced by one subsampled-Gaussian step with sampling
/// rate `q` and noise multiplier `sigma_over_c`.
pub fn account_step(state: &AccountantState, q: f64, sigma_over_c: f64) -> AccountantState {
    let cost = rdp_per_release(q, sigma_over_c, &state.orders);
    let mut next = state.clone();
    next.advance(&cost);
    next
}

/// Single-release RDP at every order.
pub fn rdp_per_release(q: f64, sigma: f64, orders: &[f64]) -> Vec<f64> {
    orders.iter().map(|&a| rdp_subsampled_gaussian(q, sigma, a)).collect()
}

/// RDP of one Poisson-subsampled Gaussian release at order `alpha > 1`.
///
/// `q = 0` costs nothing; `sigma = 0` with `q > 0` costs infinity.
pub fn rdp_subsampled_gaussian(q: f64, sigma: f64, alpha: f64) -> f64 {
    assert!(alpha > 1.0, "RDP order must exceed 1");
    if q == 0.0 {
        return 0.0;
    }
    if sigma == 0.0 {
        return f64::INFINITY;
    }
    if q == 1.0 {
        return alpha / (2.0 * sigma * sigma);
    }
    let log_a = if alpha.fract() == 0.0 {
        log_a_integer(q, sigma, alpha as u64)
    } else {
        log_a_fractional(q, sigma, alpha)
    };
    log_a / (alpha - 1.0)
}

/// `ε = min_α RDP(α) + ln(1/δ)/(α - 1)`; zero before any step.
pub fn epsilon_at_delta(state: &AccountantState, delta: f64) -> f64 {
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    if state.steps_taken == 0 {
        return 0.0;
    }
    let log_inv_delta = (1.0 / delta).ln();
    state
        .orders
        .iter()
        .zip(&state.accumulated_rdp)
        .map(|(&a, &rdp)| rdp + log_inv_delta / (a - 1.0))
        .fold(f64::INFINITY, f64::min)
}

fn epsilon_for(q: f64, sigma: f64, steps: u64, releases: u32, delta: f64) -> f64 {
    // Same arithmetic path as a training run, so re-accounting is bit-identical.
    let mut state = AccountantState::new(releases);
    let cost = rdp_per_release(q, sigma, &state.orders);
    for _ in 0..steps {
        state.advance(&cost);
    }
    epsilon_at_delta(&state, delta)
}

/// Smallest noise multiplier whose `T`-step composition stays within
/// `target_epsilon` at `target_delta`.
///
/// Bisection brackets the root to a relative width of `1e-10`, so
/// re-accounting with the result gives an epsilon in `[0.99 ε, ε]`.
pub fn calibrate_sigma(
    target_epsilon: f64,
    target_delta: f64,
    q: f64,
    steps: u64,
    releases_per_step: u32,
) -> Result<f64, PrivacyError> {
    if !(target_epsilon > 0.0) {
        return Err(PrivacyError::InvalidParameter {
            name: "target_epsilon",
            value: target_epsilon,
            reason: "must be positive",
        });
    }
    if !(target_delta > 0.0 && target_delta < 1.0) {
        return Err(PrivacyError::InvalidParameter {
            name: "target_delta",
            value: target_delta,
            reason: "must lie in (0, 1)",
        });
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(PrivacyError::InvalidParameter {
            name: "sampling_rate",
            value: q,
            reason: "must lie in (0, 1]",
        });
    }
    if steps == 0 {
        return Ok(0.0);
    }
    let eps = |s: f64| epsilon_for(q, s, steps, releases_per_step, target_delta);

    let mut hi = 1.0;
    while eps(hi) > target_epsilon {
        hi *= 2.0;
        if hi > SIGMA_SEARCH_MAX {
            return Err(PrivacyError::Infeasible {
                target: target_epsilon,
                q,
                steps,
                sigma_max: SIGMA_SEARCH_MAX,
                best: eps(SIGMA_SEARCH_MAX),
            });
        }
    }
    let mut lo = hi / 2.0;
    while eps(lo) <= target_epsilon {
        hi = lo;
        lo /= 2.0;
        if lo < 1e-6 {
            return Ok(hi);
        }
    }
    while (hi - lo) > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if eps(mid) <= target_epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn log_sub(a: f64, b: f64) -> f64 {
    // Callers guarantee a ≥ b; rounding can make them meet.
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp()).ln_1p()
}

fn log_binomial(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `ln erfc(x)`, switching to the asymptotic series once erfc underflows.
fn log_erfc(x: f64) -> f64 {
    let r = libm::erfc(x);
    if r > 0.0 {
        return r.ln();
    }
    let x2 = x * x;
    -0.5 * std::f64::consts::PI.ln() - x.ln() - x2 - 0.5 / x2 + 0.625 / (x2 * x2) - 37.0 / 24.0 / (x2 * x2 * x2)
        + 353.0 / 64.0 / (x2 * x2 * x2 * x2)
}

fn log_a_integer(q: f64, sigma: f64, alpha: u64) -> f64 {
    let two_s2 = 2.0 * sigma * sigma;
    let (lq, l1q) = (q.ln(), (-q).ln_1p());
    (0..=alpha).fold(f64::NEG_INFINITY, |acc, k| {
        let kf = k as f64;
        let term = log_binomial(alpha, k) + kf * lq + (alpha - k) as f64 * l1q + (kf * kf - kf) / two_s2;
        log_add(acc, term)
    })
}

fn log_a_fractional(q: f64, sigma: f64, alpha: f64) -> f64 {
    let s2 = sigma * sigma;
    let sqrt2_sigma = std::f64::consts::SQRT_2 * sigma;
    let z0 = s2 * (1.0 / q - 1.0).ln() + 0.5;
    let (lq, l1q) = (q.ln(), (-q).ln_1p());
    let ln_half = 0.5f64.ln();

    let mut log_a0 = f64::NEG_INFINITY;
    let mut log_a1 = f64::NEG_INFINITY;
    // Generalized binomial coefficient C(α, i), tracked as ln|C| and its sign.
    let mut log_coef = 0.0;
    let mut positive = true;
    for i in 0..MAX_FRACTIONAL_TERMS {
        if i > 0 {
            let factor = (alpha - (i - 1) as f64) / i as f64;
            log_coef += factor.abs().ln();
            if factor < 0.0 {
                positive = !positive;
            }
        }
        let fi = i as f64;
        let j = alpha - fi;
        let log_t0 = log_coef + fi * lq + j * l1q;
        let log_t1 = log_coef + j * lq + fi * l1q;
        let log_e0 = ln_half + log_erfc((fi - z0) / sqrt2_sigma);
        let log_e1 = ln_half + log_erfc((z0 - j) / sqrt2_sigma);
        let log_s0 = log_t0 + (fi * fi - fi) / (2.0 * s2) + log_e0;
        let log_s1 = log_t1 + (j * j - j) / (2.0 * s2) + log_e1;
        if positive {
            log_a0 = log_add(log_a0, log_s0);
            log_a1 = log_add(log_a1, log_s1);
        } else {
            log_a0 = log_sub(log_a0, log_s0);
            log_a1 = log_sub(log_a1, log_s1);
        }
        if log_s0.max(log_s1) < LOG_TERM_CUTOFF {
            break;
        }
    }
    log_add(log_a0, log_a1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_composition_is_free() {
        let s = AccountantState::new(1);
        assert_eq!(epsilon_at_delta(&s, 1e-5), 0.0);
        assert_eq!(epsilon_at_delta(&s, 0.5), 0.0);
    }

    #[test]
    fn full_batch_is_plain_gaussian() {
        let (sigma, t, r) = (1.7, 12u64, 2u32);
        let mut s = AccountantState::new(r);
        for _ in 0..t {
            s = account_step(&s, 1.0, sigma);
        }
        for (&a, &rdp) in s.orders().iter().zip(s.accumulated_rdp()) {
            let expected = t as f64 * f64::from(r) * a / (2.0 * sigma * sigma);
            assert!((rdp - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn integer_series_at_q1_limit_agrees() {
        // Just below q = 1 the binomial sum must approach α/(2σ²).
        let rdp = rdp_subsampled_gaussian(1.0 - 1e-12, 1.0, 5.0);
        assert!((rdp - 2.5).abs() < 1e-6, "{rdp}");
    }

    #[test]
    fn fractional_orders_interpolate_neighbours() {
        let (q, sigma) = (0.01, 1.0);
        let r2 = rdp_subsampled_gaussian(q, sigma, 2.0);
        let r15 = rdp_subsampled_gaussian(q, sigma, 1.5);
        let r125 = rdp_subsampled_gaussian(q, sigma, 1.25);
        assert!(r125 > 0.0 && r125 <= r15 && r15 <= r2, "{r125} {r15} {r2}");
    }

    #[test]
    fn zero_noise_is_infinite() {
        let s = account_step(&AccountantState::new(1), 0.1, 0.0);
        assert!(epsilon_at_delta(&s, 1e-5).is_infinite());
    }

    #[test]
    fn monotone_in_delta_and_additive_in_steps() {
        let mut s = AccountantState::new(1);
        for _ in 0..10 {
            s = account_step(&s, 0.05, 1.1);
        }
        assert!(epsilon_at_delta(&s, 1e-5) >= epsilon_at_delta(&s, 1e-3));
        let mut doubled = s.clone();
        for _ in 0..10 {
            doubled = account_step(&doubled, 0.05, 1.1);
        }
        for (a, b) in s.accumulated_rdp().iter().zip(doubled.accumulated_rdp()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn deterministic_bits() {
        let run = || {
            let mut s = AccountantState::new(2);
            for _ in 0..50 {
                s = account_step(&s, 0.02, 0.9);
            }
            epsilon_at_delta(&s, 1e-5).to_bits()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn calibration_round_trip() {
        let (eps, delta, q, t) = (2.0, 1e-5, 0.01, 1000);
        let sigma = calibrate_sigma(eps, delta, q, t, 1).unwrap();
        let mut s = AccountantState::new(1);
        let cost = rdp_per_release(q, sigma, s.orders());
        for _ in 0..t {
            s.advance(&cost);
        }
        let got = s.epsilon(delta);
        assert!(got <= eps && got >= 0.99 * eps, "sigma {sigma} eps {got}");
    }

    #[test]
    fn longer_runs_need_more_noise() {
        let a = calibrate_sigma(4.0, 1e-5, 0.01, 500, 1).unwrap();
        let b = calibrate_sigma(4.0, 1e-5, 0.01, 5000, 1).unwrap();
        assert!(b > a);
        let two = calibrate_sigma(4.0, 1e-5, 0.01, 500, 2).unwrap();
        assert!(two > a);
    }

    #[test]
    fn unreachable_target_is_reported() {
        // ln(1/δ)/63 ≈ 0.18 is the floor imposed by the largest order.
        assert!(matches!(
            calibrate_sigma(0.1, 1e-5, 0.01, 100, 1),
            Err(PrivacyError::Infeasible { .. })
        ));
    }
}
