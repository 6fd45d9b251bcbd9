use super::SpectralError;

/// Diagonal attenuation profile `Φ = diag(φ_0, …, φ_{d-1})`.
///
/// Frequencies are grouped by magnitude `m(k) = min(k, d - k)` so that bins
/// `k` and `d - k` always share a factor. This keeps `F⁻¹ Φ F` real and
/// symmetric, with eigenvalues equal to the mask entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMask {
    phi: Vec<f64>,
    k0: usize,
    rho: f64,
    alpha: f64,
    lambda: f64,
}

impl SpectralMask {
    /// The all-ones mask; filtering with it is the identity.
    pub fn identity(d: usize) -> Self {
        Self {
            phi: vec![1.0; d],
            k0: d,
            rho: 0.0,
            alpha: 0.0,
            lambda: 1.0,
        }
    }

    /// Mask from raw factors, bypassing every invariant. Only the
    /// fault-injection path of the verification suite uses this.
    pub(crate) fn from_raw(phi: Vec<f64>, k0: usize, rho: f64, alpha: f64, lambda: f64) -> Self {
        Self {
            phi,
            k0,
            rho,
            alpha,
            lambda,
        }
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Number of preserved bins.
    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_step(&self) -> bool {
        self.alpha == 0.0
    }

    pub fn is_identity(&self) -> bool {
        self.phi.iter().all(|&p| p == 1.0)
    }

    pub fn max_factor(&self) -> f64 {
        self.phi.iter().fold(0.0, |m, p| m.max(p.abs()))
    }

    /// Entrywise square, i.e. the mask of the filter applied twice.
    pub fn squared(&self) -> Self {
        Self {
            phi: self.phi.iter().map(|p| p * p).collect(),
            ..self.clone()
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let d = self.phi.len();
        (0..d).all(|k| self.phi[k] == self.phi[(d - k) % d])
    }
}

/// Builds the high-frequency shaping mask.
///
/// `k0 = ⌊λd⌋` bins are preserved and the rest are scaled by
/// `1 - ρ e^{-α r}`, where `r` is the rank of the bin's frequency-magnitude
/// class among the attenuated classes (`α = 0` gives the flat `1 - ρ` step).
///
/// Preserved bins are chosen by magnitude class: the DC bin first, then
/// conjugate pairs `{m, d - m}` in increasing `m`. A pair holds two bins, so
/// when `k0` is even the Nyquist bin `d/2` (the only other self-conjugate
/// bin) is kept as well. That way exactly `k0` factors equal one and the
/// mask stays symmetric.
pub fn build_mask(d: usize, lambda: f64, rho: f64, alpha: f64) -> Result<SpectralMask, SpectralError> {
    if d == 0 || !d.is_power_of_two() {
        return Err(SpectralError::NotPowerOfTwo(d));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(SpectralError::InvalidMaskParameter {
            name: "lambda",
            value: lambda,
            reason: "must lie in (0, 1)",
        });
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(SpectralError::InvalidMaskParameter {
            name: "rho",
            value: rho,
            reason: "must lie in (0, 1)",
        });
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(SpectralError::InvalidMaskParameter {
            name: "alpha",
            value: alpha,
            reason: "must be finite and non-negative",
        });
    }

    let k0 = (lambda * d as f64).floor() as usize;
    let nyquist = d / 2;
    let (keep_nyquist, kept_pairs) = match k0 {
        0 => (false, 0),
        k if k % 2 == 1 => (false, (k - 1) / 2),
        k => (true, (k - 2) / 2),
    };

    let mut phi = vec![0.0; d];
    let mut rank = 0usize;
    let mut attenuate = |bins: &[usize], phi: &mut [f64]| {
        let factor = 1.0 - rho * (-alpha * rank as f64).exp();
        for &k in bins {
            phi[k] = factor;
        }
        rank += 1;
    };

    // Magnitude-ordered classes: {0}, {1, d-1}, …, {d/2}.
    if k0 >= 1 {
        phi[0] = 1.0;
    } else {
        attenuate(&[0], &mut phi);
    }
    if d >= 2 {
        for m in 1..nyquist {
            if m <= kept_pairs {
                phi[m] = 1.0;
                phi[d - m] = 1.0;
            } else {
                attenuate(&[m, d - m], &mut phi);
            }
        }
        if keep_nyquist {
            phi[nyquist] = 1.0;
        } else {
            attenuate(&[nyquist], &mut phi);
        }
    }

    Ok(SpectralMask {
        phi,
        k0,
        rho,
        alpha,
        lambda,
    })
}

/// Eigenvalues of `A = F⁻¹ Φ F`, sorted in decreasing order.
///
/// `A` is diagonalized by the Fourier basis, so these are exactly the mask
/// factors: `1` with multiplicity `k0` and `1 - ρ` with multiplicity `d - k0`
/// for a step mask.
pub fn operator_eigenvalues(m: &SpectralMask) -> Vec<f64> {
    let mut ev = m.phi.clone();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(phi: &[f64], value: f64) -> usize {
        phi.iter().filter(|&&p| p == value).count()
    }

    #[test]
    fn half_pivot_step_mask_d8() {
        let m = build_mask(8, 0.5, 0.5, 0.0).unwrap();
        assert_eq!(m.k0(), 4);
        assert_eq!(count(m.phi(), 1.0), 4);
        assert_eq!(count(m.phi(), 0.5), 4);
        assert!(m.is_symmetric());
    }

    #[test]
    fn quarter_pivot_step_mask_d8() {
        let m = build_mask(8, 0.25, 0.3, 0.0).unwrap();
        assert_eq!(m.k0(), 2);
        assert_eq!(count(m.phi(), 1.0), 2);
        assert_eq!(count(m.phi(), 1.0 - 0.3), 6);
        assert!(m.is_symmetric());
    }

    #[test]
    fn largest_pivot_keeps_all_but_nyquist() {
        let d = 16;
        let m = build_mask(d, (d as f64 - 1.0) / d as f64, 0.4, 0.0).unwrap();
        assert_eq!(m.k0(), d - 1);
        assert_eq!(count(m.phi(), 1.0), d - 1);
        assert_eq!(m.phi()[d / 2], 1.0 - 0.4);
    }

    #[test]
    fn exactly_k0_ones_for_every_pivot() {
        for d in [1usize, 2, 4, 8, 16, 64] {
            for num in 1..d.max(2) {
                let lambda = num as f64 / d as f64;
                if lambda >= 1.0 {
                    continue;
                }
                let m = build_mask(d, lambda, 0.7, 0.0).unwrap();
                assert_eq!(count(m.phi(), 1.0), m.k0(), "d={d} lambda={lambda}");
                assert!(m.is_symmetric());
            }
        }
    }

    #[test]
    fn smooth_mask_decays_by_magnitude_rank() {
        let m = build_mask(16, 0.25, 0.5, 0.5).unwrap();
        // k0 = 4: DC, Nyquist and the pair {1, 15} are kept.
        assert_eq!(m.phi()[0], 1.0);
        assert_eq!(m.phi()[1], 1.0);
        assert_eq!(m.phi()[8], 1.0);
        assert_eq!(m.phi()[2], 0.5);
        assert!((m.phi()[3] - (1.0 - 0.5 * (-0.5f64).exp())).abs() < 1e-15);
        assert!(m.is_symmetric());
        assert!(m.phi().iter().all(|&p| (0.5..=1.0).contains(&p)));
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(build_mask(6, 0.5, 0.5, 0.0).is_err());
        assert!(build_mask(8, 0.0, 0.5, 0.0).is_err());
        assert!(build_mask(8, 1.0, 0.5, 0.0).is_err());
        assert!(build_mask(8, 0.5, 1.0, 0.0).is_err());
        assert!(build_mask(8, 0.5, 0.5, -1.0).is_err());
    }

    #[test]
    fn eigenvalue_multisets() {
        let ev = operator_eigenvalues(&build_mask(8, 0.5, 0.5, 0.0).unwrap());
        assert_eq!(ev, vec![1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5]);
        assert_eq!(operator_eigenvalues(&SpectralMask::identity(5)), vec![1.0; 5]);
        let ev = operator_eigenvalues(&build_mask(4, 0.25, 0.9, 0.0).unwrap());
        assert_eq!(ev.len(), 4);
        assert_eq!(ev[0], 1.0);
        assert!(ev[1..].iter().all(|&e| (e - 0.1).abs() < 1e-15));
    }
}
