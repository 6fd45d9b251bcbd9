use std::cell::Cell;
use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{real_part_checked, SpectralError, Spectrum};
use crate::ParamVector;

thread_local! {
    static FFT_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of fast transforms (forward or inverse) run on the current thread.
pub fn fft_invocations() -> u64 {
    FFT_CALLS.with(|c| c.get())
}

fn count_invocation() {
    FFT_CALLS.with(|c| c.set(c.get() + 1));
}

// Complex elements per cache block in the early stages (16 KiB).
const BLOCK: usize = 1 << 10;

/// Precomputed twiddles for one radix-2 length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    // Stage with butterfly span h stores e^{-iπk/h}, k < h, at [h-1, 2h-1).
    // Each entry is evaluated directly rather than by recurrence.
    twiddles: Vec<Complex64>,
}

impl FftPlan {
    pub fn new(len: usize) -> Result<Self, SpectralError> {
        if len == 0 || !len.is_power_of_two() {
            return Err(SpectralError::NotPowerOfTwo(len));
        }
        let mut twiddles = Vec::with_capacity(len.saturating_sub(1));
        let mut half = 1;
        while half < len {
            twiddles.extend((0..half).map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / (2 * half) as f64)));
            half *= 2;
        }
        Ok(Self { len, twiddles })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place unnormalized forward transform.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf);
    }

    /// In-place inverse transform including the `1/len` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for z in buf.iter_mut() {
            *z = z.conj();
        }
        self.transform(buf);
        let scale = 1.0 / self.len as f64;
        for z in buf.iter_mut() {
            *z = z.conj() * scale;
        }
    }

    /// Forward transform of `conj(buf)` left unconjugated and unscaled, so the
    /// inverse is `conj(result) / len`. Saves callers that only need the real
    /// part two passes over the buffer.
    pub(crate) fn inverse_of_conj_unscaled(&self, buf: &mut [Complex64]) {
        self.transform(buf);
    }

    /// Writes bins `0..=len/2` of the transform of real `x`, zero-padded to
    /// `len`, into `out`. Runs one half-length complex transform on the
    /// even/odd interleaving. Requires `len >= 2`.
    pub(crate) fn forward_real(&self, x: &[f64], out: &mut Vec<Complex64>) {
        let n = self.len;
        let m = n / 2;
        assert!(m >= 1 && x.len() <= n, "real input does not fit plan");
        count_invocation();
        out.clear();
        out.extend(
            x.chunks(2)
                .map(|p| Complex64::new(p[0], p.get(1).copied().unwrap_or(0.0))),
        );
        out.resize(m, Complex64::new(0.0, 0.0));
        self.butterflies(out);
        // The last stage table holds e^{-2πik/len} for k < len/2.
        let tw = &self.twiddles[m - 1..n - 1];
        let w = |k: usize| if k < m { tw[k] } else { Complex64::new(-1.0, 0.0) };
        let split = |a: Complex64, b: Complex64, w: Complex64| {
            let b = b.conj();
            (a + b) * 0.5 + w * (a - b) * Complex64::new(0.0, -0.5)
        };
        let z0 = out[0];
        out.push(z0);
        // Bins k and m - k read the same pair of half-length outputs.
        for k in 0..=m / 2 {
            let j = m - k;
            let (a, b) = (out[k], if k == 0 { z0 } else { out[j] });
            out[k] = split(a, b, w(k));
            out[j] = split(b, a, w(j));
        }
    }

    /// Overwrites `out` with the real signal of length `len` whose Hermitian
    /// spectrum has bins `0..=len/2` in `half`, including the `1/len` factor.
    /// `half` is used as scratch.
    pub(crate) fn inverse_real(&self, half: &mut Vec<Complex64>, out: &mut Vec<f64>) {
        let n = self.len;
        let m = n / 2;
        assert!(m >= 1 && half.len() == m + 1, "half spectrum does not match plan");
        count_invocation();
        let tw = &self.twiddles[m - 1..n - 1];
        // Conjugated so the forward butterflies compute the inverse.
        let merge = |a: Complex64, b: Complex64, w: Complex64| {
            let b = b.conj();
            ((a + b) * 0.5 + Complex64::i() * (a - b) * w.conj() * 0.5).conj()
        };
        for k in 0..=m / 2 {
            let j = m - k;
            let (a, b) = (half[k], half[j]);
            half[k] = merge(a, b, tw[k]);
            if k > 0 && j != k {
                half[j] = merge(b, a, tw[j]);
            }
        }
        half.truncate(m);
        self.butterflies(half);
        let scale = 1.0 / m as f64;
        out.clear();
        out.reserve(n);
        for z in half.iter() {
            out.push(z.re * scale);
            out.push(-z.im * scale);
        }
    }

    fn transform(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        count_invocation();
        self.butterflies(buf);
    }

    /// Bit reversal plus radix-2 stages for any power-of-two prefix length;
    /// stage tables of shorter lengths are prefixes of this plan's table.
    fn butterflies(&self, buf: &mut [Complex64]) {
        let n = buf.len();
        debug_assert!(n.is_power_of_two() && n <= self.len);
        let bits = n.trailing_zeros();
        if bits == 0 {
            return;
        }
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if i < j {
                buf.swap(i, j);
            }
        }
        // Stages with span below BLOCK stay inside aligned blocks, so each
        // block runs them back to back while it is cache resident.
        let block = BLOCK.min(n);
        for chunk in buf.chunks_exact_mut(block) {
            let mut half = 1;
            while half < block {
                self.stage(chunk, half);
                half *= 2;
            }
        }
        let mut half = block;
        while half < n {
            self.stage(buf, half);
            half *= 2;
        }
    }

    fn stage(&self, buf: &mut [Complex64], half: usize) {
        let tw = &self.twiddles[half - 1..2 * half - 1];
        for block in buf.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for ((a, b), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(tw) {
                let t = *b * w;
                *b = *a - t;
                *a += t;
            }
        }
    }
}

/// Forward DFT of a real vector of power-of-two length, in `O(d log d)`.
pub fn dft_forward(v: &ParamVector) -> Result<Spectrum, SpectralError> {
    let plan = FftPlan::new(v.dim())?;
    let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    plan.forward(&mut buf);
    Ok(Spectrum::new(buf))
}

/// Inverse DFT back to a real vector.
///
/// Fails with [`SpectralError::ImaginaryResidue`] when the spectrum is not
/// Hermitian enough for the result to be real.
pub fn dft_inverse(s: &Spectrum) -> Result<ParamVector, SpectralError> {
    let plan = FftPlan::new(s.len())?;
    let mut buf = s.as_slice().to_vec();
    plan.inverse(&mut buf);
    Ok(ParamVector::new(real_part_checked(&buf)?)?)
}

/// Direct `O(d²)` evaluation of the DFT sum, for any length. Test oracle.
pub fn naive_dft(v: &ParamVector) -> Spectrum {
    let d = v.dim();
    // Reducing kn mod d keeps every phase in [0, 2π).
    let roots: Vec<Complex64> = (0..d)
        .map(|m| Complex64::from_polar(1.0, -TAU * m as f64 / d as f64))
        .collect();
    let out = (0..d)
        .map(|k| v.iter().enumerate().map(|(n, &x)| roots[(k * n) % d] * x).sum())
        .collect();
    Spectrum::new(out)
}
