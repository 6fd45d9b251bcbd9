use std::cell::RefCell;

use num_complex::Complex64;

use super::{real_part_checked, FftPlan, SpectralError, SpectralMask};
use crate::ParamVector;

thread_local! {
    static SCRATCH: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

/// Reusable `F⁻¹ Φ F` operator for vectors of a fixed dimension.
///
/// The mask lives at the padded length `dim.next_power_of_two()`; inputs are
/// zero-padded before the forward transform and truncated after the inverse.
/// An all-ones mask short-circuits to a copy without touching the FFT.
/// Symmetric masks keep the spectrum Hermitian, so they run the half-length
/// real transforms; any other mask takes the full complex path and
/// the result must pass the imaginary-residue check.
#[derive(Debug, Clone)]
pub struct SpectralFilter {
    dim: usize,
    mask: SpectralMask,
    plan: Option<FftPlan>,
    real_path: bool,
}

impl SpectralFilter {
    pub fn new(dim: usize, mask: SpectralMask) -> Result<Self, SpectralError> {
        if mask.len() != dim.next_power_of_two() {
            return Err(SpectralError::LengthMismatch {
                mask: mask.len(),
                vector: dim,
            });
        }
        let plan = if mask.is_identity() {
            None
        } else {
            Some(FftPlan::new(mask.len())?)
        };
        let real_path = mask.len() >= 2 && mask.is_symmetric();
        Ok(Self {
            dim,
            mask,
            plan,
            real_path,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            mask: SpectralMask::identity(dim.next_power_of_two()),
            plan: None,
            real_path: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mask(&self) -> &SpectralMask {
        &self.mask
    }

    pub fn is_identity(&self) -> bool {
        self.plan.is_none()
    }

    /// Number of FFTs one call to [`apply`](Self::apply) performs.
    pub fn transforms_per_apply(&self) -> u64 {
        if self.is_identity() {
            0
        } else {
            2
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, SpectralError> {
        let mut out = Vec::new();
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// [`apply`](Self::apply) writing into `out`, so repeated calls reuse one
    /// allocation.
    pub fn apply_into(&self, v: &[f64], out: &mut Vec<f64>) -> Result<(), SpectralError> {
        if v.len() != self.dim {
            return Err(SpectralError::LengthMismatch {
                mask: self.mask.len(),
                vector: v.len(),
            });
        }
        let Some(plan) = &self.plan else {
            out.clear();
            out.extend_from_slice(v);
            return Ok(());
        };
        if self.real_path {
            SCRATCH.with_borrow_mut(|half| {
                plan.forward_real(v, half);
                for (b, &p) in half.iter_mut().zip(self.mask.phi()) {
                    *b *= p;
                }
                plan.inverse_real(half, out);
            });
            out.truncate(self.dim);
            return Ok(());
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); plan.len()];
        for (b, &x) in buf.iter_mut().zip(v) {
            b.re = x;
        }
        plan.forward(&mut buf);
        // Conjugating here lets the inverse run as a plain forward pass.
        for (b, &p) in buf.iter_mut().zip(self.mask.phi()) {
            *b = b.conj() * p;
        }
        plan.inverse_of_conj_unscaled(&mut buf);
        *out = real_part_checked(&buf)?;
        out.truncate(self.dim);
        let scale = 1.0 / plan.len() as f64;
        for x in out.iter_mut() {
            *x *= scale;
        }
        Ok(())
    }
}

/// `F⁻¹(Φ ⊙ F(v))`.
///
/// The mask length must equal `v.dim()` or, for non-power-of-two vectors,
/// the padded length `v.dim().next_power_of_two()`.
pub fn apply_filter(v: &ParamVector, m: &SpectralMask) -> Result<ParamVector, SpectralError> {
    let filter = SpectralFilter::new(v.dim(), m.clone())?;
    Ok(ParamVector::from_vec_unchecked(filter.apply(v)?))
}
