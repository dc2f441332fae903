//! Statistics-based illumination estimators.
//!
//! Every estimator returns a unit-norm, nonnegative RGB direction. Channel
//! reductions run in a fixed order with compensated summation, so results do
//! not depend on how images were produced or on thread count.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::color::LinearRgb;
use crate::error::{Error, Result};
use crate::image::LinearImage;
use crate::scalar::{compensated_sum, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    WhitePatch,
    GrayWorld,
    ShadesOfGray,
    GrayEdge,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::WhitePatch => "white_patch",
            Method::GrayWorld => "gray_world",
            Method::ShadesOfGray => "shades_of_gray",
            Method::GrayEdge => "gray_edge",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "white_patch" => Ok(Method::WhitePatch),
            "gray_world" => Ok(Method::GrayWorld),
            "shades_of_gray" => Ok(Method::ShadesOfGray),
            "gray_edge" => Ok(Method::GrayEdge),
            _ => Err(Error::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    /// Minkowski norm for Shades-of-Gray and Gray-Edge.
    pub p: f64,
    /// Gray-Edge derivative order, 1 or 2.
    pub order: u8,
    /// Gray-Edge smoothing scale in pixels.
    pub sigma: f64,
    /// White-Patch percentile in (0, 100].
    pub percentile: f64,
}

pub const DEFAULT_PERCENTILE: f64 = 100.0;
pub const DEFAULT_EDGE_SIGMA: f64 = 1.0;
pub const DEFAULT_EDGE_P: f64 = 1.0;

impl EstimatorConfig {
    fn base(method: Method) -> Self {
        Self {
            method,
            p: 1.0,
            order: 1,
            sigma: DEFAULT_EDGE_SIGMA,
            percentile: DEFAULT_PERCENTILE,
        }
    }

    pub fn white_patch(percentile: f64) -> Self {
        Self {
            percentile,
            ..Self::base(Method::WhitePatch)
        }
    }

    pub fn gray_world() -> Self {
        Self::base(Method::GrayWorld)
    }

    pub fn shades_of_gray(p: f64) -> Self {
        Self {
            p,
            ..Self::base(Method::ShadesOfGray)
        }
    }

    pub fn gray_edge(p: f64, order: u8, sigma: f64) -> Self {
        Self {
            p,
            order,
            sigma,
            ..Self::base(Method::GrayEdge)
        }
    }

    /// Defaults for `method`.
    pub fn default_for(method: Method) -> Self {
        match method {
            Method::ShadesOfGray => Self::shades_of_gray(2.0),
            Method::GrayEdge => Self::gray_edge(DEFAULT_EDGE_P, 1, DEFAULT_EDGE_SIGMA),
            m => Self::base(m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self.method {
            Method::WhitePatch if !(self.percentile > 0.0 && self.percentile <= 100.0) => {
                bad(format!("percentile must be in (0, 100], got {}", self.percentile))
            }
            Method::ShadesOfGray | Method::GrayEdge if !(self.p >= 1.0) || !self.p.is_finite() => {
                bad(format!("Minkowski p must be finite and >= 1, got {}", self.p))
            }
            Method::GrayEdge if !(self.sigma >= 0.0) || !self.sigma.is_finite() => {
                bad(format!("sigma must be finite and >= 0, got {}", self.sigma))
            }
            Method::GrayEdge if !matches!(self.order, 1 | 2) => {
                bad(format!("derivative order must be 1 or 2, got {}", self.order))
            }
            _ => Ok(()),
        }
    }

    /// Parameters that affect this method, as `key=value` pairs joined by `;`.
    pub fn params(&self) -> String {
        match self.method {
            Method::WhitePatch => format!("percentile={}", self.percentile),
            Method::GrayWorld => String::new(),
            Method::ShadesOfGray => format!("p={}", self.p),
            Method::GrayEdge => format!("p={};order={};sigma={}", self.p, self.order, self.sigma),
        }
    }

    pub fn label(&self) -> String {
        let p = self.params();
        if p.is_empty() {
            self.method.to_string()
        } else {
            format!("{}({p})", self.method)
        }
    }

    pub fn estimate<T: Scalar>(&self, img: &LinearImage<T>) -> Result<LinearRgb<T>> {
        self.validate()?;
        match self.method {
            Method::WhitePatch => white_patch(img, self.percentile),
            Method::GrayWorld => gray_world(img),
            Method::ShadesOfGray => shades_of_gray(img, self.p),
            Method::GrayEdge => gray_edge(img, self.p, self.order, self.sigma),
        }
    }
}

fn check_pixels<T: Scalar>(img: &LinearImage<T>) -> Result<()> {
    if img.pixels().iter().any(|px| !px.is_valid()) {
        return Err(Error::InvalidParameter(
            "image values must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

fn finish<T: Scalar>(v: [T; 3]) -> Result<LinearRgb<T>> {
    let v = LinearRgb::from_array(v);
    if !v.is_valid() || v.is_zero() {
        return Err(Error::DegenerateScene("no usable signal in any channel"));
    }
    v.normalized()
}

fn channel<T: Scalar>(img: &LinearImage<T>, c: usize) -> impl Iterator<Item = T> + Clone + '_ {
    img.pixels().iter().map(move |px| px.to_array()[c])
}

/// Minkowski mean `((1/N) Σ v^p)^(1/p)`; `p = 1` is the plain mean.
fn minkowski_mean<T: Scalar>(values: impl Iterator<Item = T> + Clone, n: usize, p: f64) -> T {
    let nf = T::from_usize_lossy(n);
    if p == 1.0 {
        return compensated_sum(values) / nf;
    }
    // rescale by the maximum so large p neither overflows nor underflows
    let m = values.clone().fold(T::zero(), T::max);
    if m == T::zero() {
        return T::zero();
    }
    let pt = T::lit(p);
    let s = compensated_sum(values.map(|v| (v / m).powf(pt))) / nf;
    s.powf(T::one() / pt) * m
}

/// Per-channel percentile (nearest rank), normalized.
pub fn white_patch<T: Scalar>(img: &LinearImage<T>, percentile: f64) -> Result<LinearRgb<T>> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::InvalidParameter(format!(
            "percentile must be in (0, 100], got {percentile}"
        )));
    }
    check_pixels(img)?;
    let n = img.len();
    let rank = ((percentile * n as f64 / 100.0).ceil() as usize).clamp(1, n);
    let out = std::array::from_fn(|c| {
        if rank == n {
            return channel(img, c).fold(T::zero(), T::max);
        }
        let mut v: Vec<T> = channel(img, c).collect();
        let (_, nth, _) = v.select_nth_unstable_by(rank - 1, |a, b| a.partial_cmp(b).expect("finite"));
        *nth
    });
    finish(out)
}

pub fn gray_world<T: Scalar>(img: &LinearImage<T>) -> Result<LinearRgb<T>> {
    shades_of_gray(img, 1.0)
}

pub fn shades_of_gray<T: Scalar>(img: &LinearImage<T>, p: f64) -> Result<LinearRgb<T>> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Minkowski p must be finite and >= 1, got {p}"
        )));
    }
    check_pixels(img)?;
    let n = img.len();
    finish(std::array::from_fn(|c| minkowski_mean(channel(img, c), n, p)))
}

/// Symmetric boundary: `… b a | a b c … | c b …`.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// Gaussian taps truncated at 3σ and renormalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let r = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

/// One channel as a row-major plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Plane<T> {
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self { width, height, data }
    }

    fn at(&self, x: isize, y: isize) -> T {
        self.data[reflect(y, self.height) * self.width + reflect(x, self.width)]
    }

    /// Separable convolution with a symmetric kernel, reflective borders.
    pub fn smooth(&self, kernel: &[f64]) -> Self {
        if kernel.len() == 1 {
            return self.clone();
        }
        let r = (kernel.len() / 2) as isize;
        let k: Vec<T> = kernel.iter().map(|&t| T::lit(t)).collect();
        let pass = |src: &Plane<T>, horizontal: bool| {
            Plane::from_fn(src.width, src.height, |x, y| {
                let (x, y) = (x as isize, y as isize);
                k.iter().enumerate().fold(T::zero(), |acc, (i, &w)| {
                    let d = i as isize - r;
                    let v = if horizontal {
                        src.at(x + d, y)
                    } else {
                        src.at(x, y + d)
                    };
                    acc + w * v
                })
            })
        };
        pass(&pass(self, true), false)
    }

    /// Central-difference derivative magnitude at every pixel.
    ///
    /// Order 1 gives `√(dx² + dy²)`, order 2 gives `√(dxx² + dyy² + dxy²)`.
    pub fn derivative_magnitude(&self, order: u8) -> Vec<T> {
        let half = T::lit(0.5);
        let quarter = T::lit(0.25);
        let two = T::lit(2.0);
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x as isize, y as isize)))
            .map(|(x, y)| {
                if order == 1 {
                    let dx = (self.at(x + 1, y) - self.at(x - 1, y)) * half;
                    let dy = (self.at(x, y + 1) - self.at(x, y - 1)) * half;
                    (dx * dx + dy * dy).sqrt()
                } else {
                    let c = self.at(x, y);
                    let dxx = self.at(x + 1, y) - two * c + self.at(x - 1, y);
                    let dyy = self.at(x, y + 1) - two * c + self.at(x, y - 1);
                    let dxy = (self.at(x + 1, y + 1) - self.at(x + 1, y - 1) - self.at(x - 1, y + 1)
                        + self.at(x - 1, y - 1))
                        * quarter;
                    (dxx * dxx + dyy * dyy + dxy * dxy).sqrt()
                }
            })
            .collect()
    }

    /// First and second central differences `(dx, dy, dxx, dyy, dxy)` at one pixel.
    pub fn derivatives_at(&self, x: usize, y: usize) -> [T; 5] {
        let (x, y) = (x as isize, y as isize);
        let c = self.at(x, y);
        let two = T::lit(2.0);
        [
            (self.at(x + 1, y) - self.at(x - 1, y)) * T::lit(0.5),
            (self.at(x, y + 1) - self.at(x, y - 1)) * T::lit(0.5),
            self.at(x + 1, y) - two * c + self.at(x - 1, y),
            self.at(x, y + 1) - two * c + self.at(x, y - 1),
            (self.at(x + 1, y + 1) - self.at(x + 1, y - 1) - self.at(x - 1, y + 1) + self.at(x - 1, y - 1))
                * T::lit(0.25),
        ]
    }
}

pub const GRAY_EDGE_MIN_SIZE: usize = 3;

pub fn gray_edge<T: Scalar>(img: &LinearImage<T>, p: f64, order: u8, sigma: f64) -> Result<LinearRgb<T>> {
    EstimatorConfig::gray_edge(p, order, sigma).validate()?;
    let (w, h) = (img.width(), img.height());
    if w < GRAY_EDGE_MIN_SIZE || h < GRAY_EDGE_MIN_SIZE {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: GRAY_EDGE_MIN_SIZE,
        });
    }
    check_pixels(img)?;
    let kernel = gaussian_kernel(sigma);
    let out: [T; 3] = std::array::from_fn(|c| {
        let plane = Plane {
            width: w,
            height: h,
            data: channel(img, c).collect(),
        };
        let mag = plane.smooth(&kernel).derivative_magnitude(order);
        minkowski_mean(mag.iter().copied(), mag.len(), p)
    });
    if out.iter().all(|v| *v == T::zero()) {
        return Err(Error::DegenerateScene("all derivatives are zero"));
    }
    finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ImageBuffer;
    use crate::metrics::recovery_error;

    fn img(px: &[[f64; 3]], w: usize) -> LinearImage<f64> {
        ImageBuffer::new(
            w,
            px.len() / w,
            px.iter().map(|p| LinearRgb::from_array(*p)).collect(),
        )
        .unwrap()
    }

    fn close(a: LinearRgb<f64>, b: LinearRgb<f64>, tol: f64) -> bool {
        (a.r - b.r).abs() < tol && (a.g - b.g).abs() < tol && (a.b - b.b).abs() < tol
    }

    fn unit(r: f64, g: f64, b: f64) -> LinearRgb<f64> {
        LinearRgb::new(r, g, b).normalized().unwrap()
    }

    #[test]
    fn white_patch_examples() {
        let im = img(&[[0.1, 0.2, 0.3], [0.5, 0.1, 0.2]], 2);
        assert!(close(
            white_patch(&im, 100.0).unwrap(),
            unit(0.5, 0.2, 0.3),
            1e-15
        ));
        let u = ImageBuffer::filled(3, 3, LinearRgb::new(0.2, 0.4, 0.1)).unwrap();
        assert!(close(white_patch(&u, 100.0).unwrap(), unit(0.2, 0.4, 0.1), 1e-15));
        assert!(matches!(
            white_patch(&ImageBuffer::filled(2, 2, LinearRgb::splat(0.0)).unwrap(), 100.0),
            Err(Error::DegenerateScene(_))
        ));
    }

    #[test]
    fn white_patch_percentile_drops_outlier() {
        // 999 pixels whose top 1% shares one value, plus a single outlier
        let mut px: Vec<[f64; 3]> = (0..999)
            .map(|i| {
                if i < 20 {
                    [0.6, 0.5, 0.4]
                } else {
                    [0.3 * (i % 7) as f64 / 7.0, 0.2, 0.1]
                }
            })
            .collect();
        let without = img(&px, 999);
        px.push([5.0, 0.1, 0.1]);
        let with = img(&px, 1000);
        let want = white_patch(&without, 100.0).unwrap();
        assert_eq!(white_patch(&with, 99.0).unwrap(), want);
        assert!(recovery_error(white_patch(&with, 100.0).unwrap(), want).unwrap() > 1.0);
    }

    #[test]
    fn gray_world_examples() {
        let im = img(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], 2);
        assert!(close(gray_world(&im).unwrap(), unit(1.0, 1.0, 0.0), 1e-15));
        let u = ImageBuffer::filled(4, 1, LinearRgb::new(0.3, 0.3, 0.9)).unwrap();
        assert!(close(gray_world(&u).unwrap(), unit(0.3, 0.3, 0.9), 1e-15));
    }

    #[test]
    fn shades_of_gray_limits() {
        let im = img(&[[0.9, 0.2, 0.1], [0.1, 0.3, 0.8], [0.05, 0.05, 0.05]], 3);
        assert_eq!(shades_of_gray(&im, 1.0).unwrap(), gray_world(&im).unwrap());
        let e = recovery_error(
            shades_of_gray(&im, 100.0).unwrap(),
            white_patch(&im, 100.0).unwrap(),
        )
        .unwrap();
        assert!(e < 0.5, "{e}");
        let u = ImageBuffer::filled(2, 2, LinearRgb::new(0.5, 0.25, 0.125)).unwrap();
        for p in [1.0, 2.0, 7.5, 100.0] {
            assert!(close(
                shades_of_gray(&u, p).unwrap(),
                unit(0.5, 0.25, 0.125),
                1e-12
            ));
        }
        assert!(shades_of_gray(&u, 0.5).is_err());
    }

    #[test]
    fn gray_edge_step_edge() {
        let c = [0.4, 0.7, 0.2];
        let px: Vec<[f64; 3]> = (0..6 * 5).map(|i| if i % 6 < 3 { [0.0; 3] } else { c }).collect();
        let im = img(&px, 6);
        let e = gray_edge(&im, 1.0, 1, 0.0).unwrap();
        assert!(close(e, unit(c[0], c[1], c[2]), 1e-15));
        for order in [1, 2] {
            for sigma in [0.0, 1.0, 2.5] {
                let e = gray_edge(&im, 2.0, order, sigma).unwrap();
                assert!(recovery_error(e, unit(c[0], c[1], c[2])).unwrap() < 1e-6);
            }
        }
    }

    #[test]
    fn gray_edge_degenerate_and_small() {
        let u = ImageBuffer::filled(5, 5, LinearRgb::new(0.3, 0.2, 0.1)).unwrap();
        assert!(matches!(
            gray_edge(&u, 1.0, 1, 1.0),
            Err(Error::DegenerateScene(_))
        ));
        assert!(matches!(
            gray_edge(&u, 1.0, 2, 0.0),
            Err(Error::DegenerateScene(_))
        ));
        let small = ImageBuffer::filled(2, 5, LinearRgb::new(0.3, 0.2, 0.1)).unwrap();
        assert!(matches!(
            gray_edge(&small, 1.0, 1, 1.0),
            Err(Error::ImageTooSmall { .. })
        ));
        assert!(gray_edge(&u, 1.0, 3, 1.0).is_err());
    }

    #[test]
    fn derivatives_match_analytic_quadratics() {
        let mut h = 0x1234_5678_u64;
        for _ in 0..50 {
            let mut coef = [0.0; 6];
            for c in coef.iter_mut() {
                h = crate::stream::mix64(h);
                *c = (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            }
            let [a, b, cc, d, e, f] = coef;
            let plane = Plane::from_fn(9, 7, |x, y| {
                let (x, y) = (x as f64, y as f64);
                a * x * x + b * y * y + cc * x * y + d * x + e * y + f
            });
            for y in 1..6 {
                for x in 1..8 {
                    let (xf, yf) = (x as f64, y as f64);
                    let want = [
                        2.0 * a * xf + cc * yf + d,
                        2.0 * b * yf + cc * xf + e,
                        2.0 * a,
                        2.0 * b,
                        cc,
                    ];
                    let got = plane.derivatives_at(x, y);
                    for (g, w) in got.iter().zip(want) {
                        assert!((g - w).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn reflect_indexing() {
        let idx: Vec<usize> = (-4..8).map(|i| reflect(i, 4)).collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(reflect(-7, 3), 0);
        assert_eq!(reflect(-5, 3), 1);
    }

    #[test]
    fn kernel_sums_to_one() {
        for s in [0.0, 0.3, 1.0, 2.7] {
            let k = gaussian_kernel(s);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert_eq!(k.len() % 2, 1);
        }
        assert_eq!(gaussian_kernel(1.0).len(), 7);
    }

    #[test]
    fn f32_path_agrees() {
        let px: Vec<[f64; 3]> = (0..25)
            .map(|i| [(i % 5) as f64 / 5.0, 0.3, (i / 5) as f64 / 7.0 + 0.1])
            .collect();
        let im = img(&px, 5);
        let im32: LinearImage<f32> = im.map(|p| p.cast());
        for cfg in [
            EstimatorConfig::white_patch(100.0),
            EstimatorConfig::gray_world(),
            EstimatorConfig::shades_of_gray(2.0),
            EstimatorConfig::gray_edge(1.0, 2, 1.0),
        ] {
            let a = cfg.estimate(&im).unwrap();
            let b: LinearRgb<f64> = cfg.estimate(&im32).unwrap().cast();
            assert!(close(a, b, 1e-5), "{cfg:?}");
        }
    }

    #[test]
    fn params_and_parse() {
        assert_eq!(
            EstimatorConfig::gray_edge(1.0, 2, 1.0).params(),
            "p=1;order=2;sigma=1"
        );
        assert_eq!(EstimatorConfig::gray_world().label(), "gray_world");
        assert_eq!(
            EstimatorConfig::shades_of_gray(2.0).label(),
            "shades_of_gray(p=2)"
        );
        assert_eq!("gray-edge".parse::<Method>().unwrap(), Method::GrayEdge);
        assert!("max_rgb".parse::<Method>().is_err());
    }
}
