//! Discrete Fourier transform, spectral masks and the filter `G_Φ = F⁻¹ Φ F`.
//!
//! Conventions: the forward transform is unnormalized,
//! `ẑ_k = Σ_n z_n e^{-2πikn/d}`, and the inverse carries the `1/d` factor,
//! so `‖z‖² = ‖ẑ‖² / d`. The fast transforms are radix-2 only; vectors of
//! other lengths go through [`SpectralFilter`], which zero-pads to the next
//! power of two and truncates afterwards.

mod fft;
mod filter;
mod mask;

use num_complex::Complex64;
use thiserror::Error;

pub use fft::{dft_forward, dft_inverse, fft_invocations, naive_dft, FftPlan};
pub use filter::{apply_filter, SpectralFilter};
pub use mask::{build_mask, operator_eigenvalues, SpectralMask};

use crate::VectorError;

/// Relative imaginary residue above which an inverse transform is rejected.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("transform length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("imaginary residue {residue:.3e} exceeds {tolerance:e} relative (non-Hermitian spectrum)")]
    ImaginaryResidue { residue: f64, tolerance: f64 },
    #[error("invalid mask parameter {name} = {value}: {reason}")]
    InvalidMaskParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("mask of length {mask} cannot filter a vector of length {vector}")]
    LengthMismatch { mask: usize, vector: usize },
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// The DFT image of a [`ParamVector`](crate::ParamVector).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum(Vec<Complex64>);

impl Spectrum {
    pub fn new(data: Vec<Complex64>) -> Self {
        Self(data)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// Largest `|ẑ_k - conj(ẑ_{(d-k) mod d})|`, relative to the largest `|ẑ_k|`.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.0.len();
        let scale = self.0.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        (0..d)
            .map(|k| (self.0[k] - self.0[(d - k) % d].conj()).norm())
            .fold(0.0, f64::max)
            / scale
    }
}

impl std::ops::Index<usize> for Spectrum {
    type Output = Complex64;

    fn index(&self, k: usize) -> &Complex64 {
        &self.0[k]
    }
}

/// Drops the imaginary part after an inverse transform, failing loudly when it
/// is not negligible.
pub(crate) fn real_part_checked(buf: &[Complex64]) -> Result<Vec<f64>, SpectralError> {
    let mut out = Vec::with_capacity(buf.len());
    let (mut scale_sq, mut residue) = (0.0f64, 0.0f64);
    for z in buf {
        scale_sq = scale_sq.max(z.norm_sqr());
        residue = residue.max(z.im.abs());
        out.push(z.re);
    }
    let scale = scale_sq.sqrt();
    if scale > 0.0 && residue > IMAGINARY_TOLERANCE * scale {
        return Err(SpectralError::ImaginaryResidue {
            residue: residue / scale,
            tolerance: IMAGINARY_TOLERANCE,
        });
    }
    Ok(out)
}
