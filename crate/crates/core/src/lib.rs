//! Differentially private optimization with spectral noise shaping.
//!
//! The crate implements three private training methods side by side:
//!
//! - **DP-SGD**: clip per-sample gradients, average, add isotropic Gaussian noise.
//! - **DiSK**: DP-SGD followed by a scalar-gain Kalman filter whose prediction
//!   uses a privatized finite-difference Hessian-vector product.
//! - **FFTKF**: DiSK with an extra frequency-domain filter `F⁻¹ Φ F` applied
//!   to the privatized gradient before the Kalman correction.
//!
//! Supporting modules provide the radix-2 FFT and spectral masks
//! ([`spectral`]), clipping, the Gaussian mechanism and a Rényi-DP
//! accountant ([`privacy`]), the filter itself ([`kalman`]), training loops
//! ([`optimizer`]), desk-scale test problems ([`problems`]), closed-form and
//! Monte-Carlo checks of the noise-shaping statistics ([`analysis`]) and the
//! experiment harness behind the `fftkf` binary ([`harness`]).
//!
//! ```no_run
//! use fftkf::spectral::{apply_filter, build_mask};
//! use fftkf::ParamVector;
//!
//! let mask = build_mask(8, 0.5, 0.5, 0.0).unwrap();
//! let v = ParamVector::new(vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]).unwrap();
//! let filtered = apply_filter(&v, &mask).unwrap();
//! assert!((filtered[0] - 0.5).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod harness;
pub mod kalman;
pub mod optimizer;
pub mod privacy;
pub mod problems;
pub mod rng;
pub mod spectral;
mod vector;

pub use error::{Error, Result};
pub use vector::{norm, ParamVector, VectorError};
