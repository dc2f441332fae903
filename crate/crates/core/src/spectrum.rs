//! Sampled spectra, black-body emission and camera sensor models.

use std::sync::Arc;

use crate::color::LinearRgb;
use crate::error::{Error, Result};

/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light (m/s).
pub const LIGHT_SPEED: f64 = 299_792_458.0;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Strictly increasing wavelength samples in nm.
#[derive(Debug, Clone, PartialEq)]
pub struct WavelengthGrid(Arc<[f64]>);

impl WavelengthGrid {
    pub fn new(nm: Vec<f64>) -> Result<Self> {
        if nm.len() < 2 {
            return Err(Error::InvalidParameter(
                "wavelength grid needs at least two samples".into(),
            ));
        }
        if !nm.iter().all(|v| v.is_finite()) || nm.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "wavelength grid must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self(nm.into()))
    }

    /// `start, start+step, ..., end` (inclusive when `end` lands on the lattice).
    pub fn uniform(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(end > start) {
            return Err(Error::InvalidParameter(format!(
                "bad uniform grid {start}..{end} step {step}"
            )));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        Self::new((0..=n).map(|i| start + i as f64 * step).collect())
    }

    /// 380–780 nm in 5 nm steps.
    pub fn visible() -> Self {
        Self::uniform(380.0, 780.0, 5.0).expect("static grid")
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Trapezoidal quadrature weights, so that `∫f ≈ Σ w_i f_i`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let x = &self.0;
        let n = x.len();
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let h = 0.5 * (x[i + 1] - x[i]);
            w[i] += h;
            w[i + 1] += h;
        }
        w
    }
}

/// Relative power (or sensitivity, or reflectance) sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: WavelengthGrid,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: WavelengthGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} wavelengths",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "spectral values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: WavelengthGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.as_slice().iter().map(|&l| f(l)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: WavelengthGrid, v: f64) -> Result<Self> {
        Self::from_fn(grid, |_| v)
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check_grid(&self, other: &WavelengthGrid) -> Result<()> {
        if &self.grid != other {
            return Err(Error::GridMismatch(format!(
                "[{}..{}]/{} vs [{}..{}]/{}",
                self.grid.first(),
                self.grid.last(),
                self.grid.len(),
                other.first(),
                other.last(),
                other.len()
            )));
        }
        Ok(())
    }

    /// Pointwise product on a shared grid.
    pub fn product(&self, other: &Spectrum) -> Result<Spectrum> {
        self.check_grid(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Spectrum {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn integral(&self) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Rescaled so the maximum sample is 1.
    pub fn normalized_peak(&self) -> Result<Spectrum> {
        let peak = self.values.iter().copied().fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Err(Error::InvalidParameter("spectrum is identically zero".into()));
        }
        Ok(Spectrum {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v / peak).collect(),
        })
    }
}

/// Unnormalized black-body spectral radiance at wavelength `nm` and `kelvin`.
pub fn planck_radiance(nm: f64, kelvin: f64) -> f64 {
    let l = nm * 1e-9;
    let a = 2.0 * PLANCK * LIGHT_SPEED * LIGHT_SPEED / l.powi(5);
    a / ((PLANCK * LIGHT_SPEED / (l * BOLTZMANN * kelvin)).exp_m1())
}

/// Black-body spectrum at `kelvin`, peak-normalized to 1 over the grid.
pub fn planck_spd(kelvin: f64, grid: &WavelengthGrid) -> Result<Spectrum> {
    if !(kelvin > 0.0) || !kelvin.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {kelvin}"
        )));
    }
    if grid.first() < 300.0 || grid.last() > 830.0 {
        return Err(Error::InvalidParameter(format!(
            "wavelength grid [{}, {}] outside [300, 830] nm",
            grid.first(),
            grid.last()
        )));
    }
    Spectrum::from_fn(grid.clone(), |nm| planck_radiance(nm, kelvin))?.normalized_peak()
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensorKind {
    /// Linear response `M · diag(gains) · e`.
    Diagonal { matrix: [[f64; 3]; 3], gains: [f64; 3] },
    /// Three sensitivity curves ρ_R, ρ_G, ρ_B on a common grid.
    Spectral {
        grid: WavelengthGrid,
        curves: [Vec<f64>; 3],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub name: String,
    pub kind: SensorKind,
}

pub const IDENTITY3: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

impl SensorModel {
    pub fn diagonal(name: impl Into<String>, matrix: [[f64; 3]; 3], gains: [f64; 3]) -> Result<Self> {
        if !(det3(&matrix).abs() > 1e-12) {
            return Err(Error::InvalidParameter(
                "diagonal sensor response matrix must be invertible".into(),
            ));
        }
        if gains.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidParameter("sensor gains must be positive".into()));
        }
        Ok(Self {
            name: name.into(),
            kind: SensorKind::Diagonal { matrix, gains },
        })
    }

    pub fn identity(name: impl Into<String>) -> Self {
        Self::diagonal(name, IDENTITY3, [1.0; 3]).expect("identity is valid")
    }

    pub fn spectral(name: impl Into<String>, grid: WavelengthGrid, curves: [Vec<f64>; 3]) -> Result<Self> {
        if grid.first() > 400.0 || grid.last() < 700.0 {
            return Err(Error::InvalidParameter(
                "spectral sensor grid must cover 400-700 nm".into(),
            ));
        }
        for c in &curves {
            if c.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "sensitivity curve has {} samples, grid has {}",
                    c.len(),
                    grid.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidParameter(
                    "sensitivities must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(Self {
            name: name.into(),
            kind: SensorKind::Spectral { grid, curves },
        })
    }

    /// Gaussian sensitivities centred at `centers` (R, G, B order) with common `sigma`.
    pub fn gaussian(
        name: impl Into<String>,
        grid: WavelengthGrid,
        centers: [f64; 3],
        sigma: f64,
    ) -> Result<Self> {
        let curve = |mu: f64| {
            grid.as_slice()
                .iter()
                .map(|&l| (-0.5 * ((l - mu) / sigma).powi(2)).exp())
                .collect::<Vec<_>>()
        };
        let curves = [curve(centers[0]), curve(centers[1]), curve(centers[2])];
        Self::spectral(name, grid, curves)
    }

    /// Default synthetic spectral camera: Gaussians at 610/540/450 nm, σ = 30 nm.
    pub fn default_spectral() -> Self {
        Self::gaussian(
            "gauss-610-540-450",
            WavelengthGrid::visible(),
            [610.0, 540.0, 450.0],
            30.0,
        )
        .expect("static sensor")
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self.kind, SensorKind::Spectral { .. })
    }

    /// Raw (unnormalized) response `Σ_λ S(λ) ρ_c(λ) Δλ` to a stimulus spectrum.
    pub fn response(&self, stimulus: &Spectrum) -> Result<LinearRgb<f64>> {
        let SensorKind::Spectral { grid, curves } = &self.kind else {
            return Err(Error::InvalidParameter(format!(
                "sensor {} is not spectral",
                self.name
            )));
        };
        stimulus.check_grid(grid)?;
        let w = grid.trapezoid_weights();
        let channel = |c: &[f64]| -> f64 {
            w.iter()
                .zip(stimulus.values())
                .zip(c)
                .map(|((w, s), r)| w * s * r)
                .sum()
        };
        Ok(LinearRgb::new(
            channel(&curves[0]),
            channel(&curves[1]),
            channel(&curves[2]),
        ))
    }
}

/// Camera response to a light source, L2-normalized.
pub fn illuminant_rgb(spd: &Spectrum, sensor: &SensorModel) -> Result<LinearRgb<f64>> {
    sensor.response(spd)?.normalized()
}
