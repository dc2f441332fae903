//! Color triples, quantization and rb-chromaticity.

use std::ops::{Add, Div, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::scalar::Scalar;

/// Linear camera-space RGB triple.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearRgb<T> {
    pub r: T,
    pub g: T,
    pub b: T,
}

impl<T: Scalar> LinearRgb<T> {
    pub const fn new(r: T, g: T, b: T) -> Self {
        Self { r, g, b }
    }

    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    pub fn from_array([r, g, b]: [T; 3]) -> Self {
        Self::new(r, g, b)
    }

    pub fn to_array(self) -> [T; 3] {
        [self.r, self.g, self.b]
    }

    pub fn dot(self, other: Self) -> T {
        self.r * other.r + self.g * other.g + self.b * other.b
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn sum(self) -> T {
        self.r + self.g + self.b
    }

    pub fn max_component(self) -> T {
        self.r.max(self.g).max(self.b)
    }

    pub fn is_zero(self) -> bool {
        self.r == T::zero() && self.g == T::zero() && self.b == T::zero()
    }

    /// All components finite and nonnegative.
    pub fn is_valid(self) -> bool {
        self.to_array().iter().all(|c| c.is_finite() && *c >= T::zero())
    }

    /// Componentwise product (diagonal / von Kries application).
    pub fn hadamard(self, other: Self) -> Self {
        Self::new(self.r * other.r, self.g * other.g, self.b * other.b)
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Self::new(f(self.r), f(self.g), f(self.b))
    }

    /// Unit-L2 version of this vector.
    pub fn normalized(self) -> Result<Self> {
        let n = self.norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::DegenerateColor);
        }
        Ok(self / n)
    }

    pub fn cast<U: Scalar>(self) -> LinearRgb<U> {
        LinearRgb::new(
            U::lit(self.r.to_f64_lossy()),
            U::lit(self.g.to_f64_lossy()),
            U::lit(self.b.to_f64_lossy()),
        )
    }
}

impl<T: Scalar> Add for LinearRgb<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.r + rhs.r, self.g + rhs.g, self.b + rhs.b)
    }
}

impl<T: Scalar> Mul<T> for LinearRgb<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.map(|c| c * s)
    }
}

impl<T: Scalar> Div<T> for LinearRgb<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        self.map(|c| c / s)
    }
}

/// Intensity-normalized rb coordinates: `rc = R/(R+G+B)`, `bc = B/(R+G+B)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Chromaticity<T> {
    pub rc: T,
    pub bc: T,
}

impl<T: Scalar> Chromaticity<T> {
    pub fn new(rc: T, bc: T) -> Self {
        Self { rc, bc }
    }

    pub fn is_valid(self) -> bool {
        self.rc >= T::zero() && self.bc >= T::zero() && self.rc + self.bc <= T::one()
    }

    /// Euclidean distance in the rb plane.
    pub fn distance(self, other: Self) -> T {
        let dr = self.rc - other.rc;
        let db = self.bc - other.bc;
        (dr * dr + db * db).sqrt()
    }
}

pub fn to_chromaticity<T: Scalar>(c: LinearRgb<T>) -> Result<Chromaticity<T>> {
    let s = c.sum();
    if !(s > T::zero()) {
        return Err(Error::DegenerateColor);
    }
    Ok(Chromaticity::new(c.r / s, c.b / s))
}

/// Number of least significant bits cleared per 8-bit channel, in `0..=7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct KBits(u8);

impl KBits {
    pub const DEFAULT: KBits = KBits(3);

    pub fn new(k: u8) -> Result<Self> {
        if k > 7 {
            return Err(Error::InvalidParameter(format!(
                "k_bits must be in 0..=7, got {k}"
            )));
        }
        Ok(Self(k))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Distinct levels per channel, `2^(8-k)`.
    pub fn levels(self) -> usize {
        1 << (8 - self.0)
    }

    /// Distinct quantized colors, `2^(3(8-k))`.
    pub fn num_colors(self) -> usize {
        self.levels().pow(3)
    }

    pub fn all() -> impl Iterator<Item = KBits> {
        (0..=7).map(KBits)
    }
}

impl Default for KBits {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<u8> for KBits {
    type Error = Error;
    fn try_from(k: u8) -> Result<Self> {
        Self::new(k)
    }
}

impl From<KBits> for u8 {
    fn from(k: KBits) -> u8 {
        k.0
    }
}

/// Clears the `k` least significant bits of `v`.
pub fn quantize_channel(v: u8, k: KBits) -> u8 {
    (v >> k.0) << k.0
}

pub fn quantize_pixel(px: [u8; 3], k: KBits) -> [u8; 3] {
    px.map(|c| quantize_channel(c, k))
}

/// 8-bit display-referred color whose channels have the `k` low bits cleared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantizedSrgb {
    rgb: [u8; 3],
    k: KBits,
}

impl QuantizedSrgb {
    /// Validates that every channel is already a multiple of `2^k`.
    pub fn new(rgb: [u8; 3], k: KBits) -> Result<Self> {
        if quantize_pixel(rgb, k) != rgb {
            return Err(Error::InvalidParameter(format!(
                "{rgb:?} is not quantized to k={}",
                k.get()
            )));
        }
        Ok(Self { rgb, k })
    }

    pub fn from_srgb(rgb: [u8; 3], k: KBits) -> Self {
        Self {
            rgb: quantize_pixel(rgb, k),
            k,
        }
    }

    pub fn rgb(self) -> [u8; 3] {
        self.rgb
    }

    pub fn k(self) -> KBits {
        self.k
    }

    /// Dense index `(r>>k)·L² + (g>>k)·L + (b>>k)` with `L = 2^(8-k)`.
    pub fn index(self) -> usize {
        let l = self.k.levels();
        let [r, g, b] = self.rgb.map(|c| (c >> self.k.0) as usize);
        (r * l + g) * l + b
    }

    pub fn from_index(index: usize, k: KBits) -> Result<Self> {
        let l = k.levels();
        if index >= k.num_colors() {
            return Err(Error::InvalidParameter(format!(
                "color index {index} out of range for k={}",
                k.get()
            )));
        }
        let ch = |v: usize| (v << k.0) as u8;
        Ok(Self {
            rgb: [ch(index / (l * l)), ch((index / l) % l), ch(index % l)],
            k,
        })
    }
}

/// Applies [`quantize_channel`] to every channel of every pixel.
pub fn quantize_image(img: &ImageBuffer<[u8; 3]>, k: KBits) -> ImageBuffer<[u8; 3]> {
    img.map(|px| quantize_pixel(*px, k))
}
