//! Invertible display transfer functions.
//!
//! The color-reduction experiment needs a linear → display → linear
//! roundtrip. The sRGB curve is the default; anything implementing
//! [`TransferFunction`] can be substituted.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub trait TransferFunction<T: Scalar>: Send + Sync {
    /// Linear value in `[0, 1]` to display-referred value in `[0, 1]`.
    fn encode(&self, linear: T) -> Result<T>;
    /// Display-referred value in `[0, 1]` back to linear.
    fn decode(&self, display: T) -> Result<T>;

    fn name(&self) -> &'static str;
}

/// Standard sRGB piecewise curve (IEC 61966-2-1).
#[derive(Debug, Clone, Copy, Default)]
pub struct Srgb;

impl<T: Scalar> TransferFunction<T> for Srgb {
    fn encode(&self, linear: T) -> Result<T> {
        linear_to_srgb(linear)
    }

    fn decode(&self, display: T) -> Result<T> {
        srgb_to_linear(display)
    }

    fn name(&self) -> &'static str {
        "srgb"
    }
}

fn check_unit<T: Scalar>(v: T) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(Error::OutOfRange(v.to_f64().unwrap_or(f64::NAN)))
    }
}

/// sRGB EOTF: display-referred value to linear.
pub fn srgb_to_linear<T: Scalar>(v: T) -> Result<T> {
    check_unit(v)?;
    Ok(if v <= T::lit(0.04045) {
        v / T::lit(12.92)
    } else {
        ((v + T::lit(0.055)) / T::lit(1.055)).powf(T::lit(2.4))
    })
}

/// Inverse of [`srgb_to_linear`].
pub fn linear_to_srgb<T: Scalar>(v: T) -> Result<T> {
    check_unit(v)?;
    Ok(if v <= T::lit(0.003_130_8) {
        v * T::lit(12.92)
    } else {
        T::lit(1.055) * v.powf(T::lit(1.0 / 2.4)) - T::lit(0.055)
    })
}

/// Linear value of every 8-bit sRGB code.
pub fn srgb8_lut() -> &'static [f64; 256] {
    static LUT: OnceLock<[f64; 256]> = OnceLock::new();
    LUT.get_or_init(|| {
        let mut lut = [0.0; 256];
        for (i, v) in lut.iter_mut().enumerate() {
            *v = srgb_to_linear(i as f64 / 255.0).expect("code in range");
        }
        lut
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        assert_eq!(srgb_to_linear(0.0_f64).unwrap(), 0.0);
        assert_eq!(srgb_to_linear(1.0_f64).unwrap(), 1.0);
        assert_eq!(linear_to_srgb(0.0_f64).unwrap(), 0.0);
        assert!((linear_to_srgb(1.0_f64).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_decodes_to_oracle() {
        // ((0.5 + 0.055) / 1.055)^2.4 evaluated independently
        let oracle = (0.555_f64 / 1.055).ln() * 2.4;
        let expected = oracle.exp();
        let got = srgb_to_linear(0.5_f64).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.2140).abs() < 5e-5);
    }

    #[test]
    fn roundtrip_dense_grid() {
        let n = 100_000;
        for i in 0..=n {
            let v = i as f64 / n as f64;
            let back = linear_to_srgb(srgb_to_linear(v).unwrap()).unwrap();
            assert!((back - v).abs() < 1e-6, "v={v} back={back}");
            let back = srgb_to_linear(linear_to_srgb(v).unwrap()).unwrap();
            assert!((back - v).abs() < 1e-6, "v={v} back={back}");
        }
        let back = linear_to_srgb(srgb_to_linear(0.73_f64).unwrap()).unwrap();
        assert!((back - 0.73).abs() < 1e-6);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(srgb_to_linear(-0.1_f64).is_err());
        assert!(linear_to_srgb(1.5_f64).is_err());
        assert!(srgb_to_linear(f64::NAN).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let v = srgb_to_linear(0.5_f32).unwrap();
        assert!((v - 0.214_041).abs() < 1e-5);
    }
}
