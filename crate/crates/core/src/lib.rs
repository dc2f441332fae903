//! Synthetic linear raw color-constancy datasets and an illumination
//! estimation benchmark.
//!
//! A source sRGB image is quantized to the printable palette, every pixel is
//! replaced by one of the calibration samples recorded for its color under
//! the chosen illuminant, and the result is a 16-bit linear raw image whose
//! ground-truth illumination is exact by construction.
//!
//! The color, estimator and metric math is generic over [`Scalar`]
//! (`f32` or `f64`); the aliases below fix the common `f64` instantiation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calib;
pub mod color;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod genimg;
pub mod illum;
pub mod image;
pub mod metrics;
pub mod scalar;
pub mod spectrum;
pub mod stream;
pub mod transfer;

pub use calib::{CalibrationCell, CalibrationTable};
pub use color::{Chromaticity, KBits, LinearRgb, QuantizedSrgb};
pub use error::{Error, Result};
pub use illum::{IlluminantKind, IlluminantSpec};
pub use image::{ImageBuffer, RawImage, SrgbImage};
pub use metrics::{ErrorKind, ErrorSummary};
pub use scalar::Scalar;
pub use spectrum::{SensorModel, Spectrum, WavelengthGrid};

/// Generator version recorded in manifests and printed by `--version`.
pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Rgb = LinearRgb<f64>;
pub type Rgb32 = LinearRgb<f32>;
pub type Chroma = Chromaticity<f64>;
pub type LinearImage = image::LinearImage<f64>;
pub type LinearImage32 = image::LinearImage<f32>;
pub type Summary = ErrorSummary<f64>;
