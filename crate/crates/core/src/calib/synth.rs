//! Synthetic stand-ins for photographing the printed color pattern.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::reflectance::ReflectanceModel;
use super::{CalibrationTable, DEFAULT_SAMPLES};
use crate::color::{KBits, LinearRgb, QuantizedSrgb};
use crate::error::{Error, Result};
use crate::illum::IlluminantSpec;
use crate::image::RAW_MAX;
use crate::spectrum::{SensorKind, SensorModel, IDENTITY3};
use crate::stream;
use crate::transfer::srgb8_lut;

/// Noiseless bases are scaled so the brightest lands at this fraction of the encoding max.
pub const EXPOSURE_HEADROOM: f64 = 0.9;
/// Noisy samples are clamped to this fraction of the encoding max.
pub const NOISE_CEILING: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exposure {
    /// Largest scale keeping every noiseless base at or below the headroom.
    Auto,
    /// Caller-chosen scale; rejected if it would push a base past the headroom.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Relative standard deviation of the multiplicative Gaussian noise.
    pub noise_sigma: f64,
    pub samples_per_cell: usize,
    pub k: KBits,
    pub seed: u64,
    pub exposure: Exposure,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            noise_sigma: 0.0,
            samples_per_cell: DEFAULT_SAMPLES,
            k: KBits::DEFAULT,
            seed: 0,
            exposure: Exposure::Auto,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        if self.samples_per_cell == 0 {
            return Err(Error::InvalidParameter(
                "samples per cell must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn linear_color(q: QuantizedSrgb) -> [f64; 3] {
    let lut = srgb8_lut();
    q.rgb().map(|c| lut[c as usize])
}

/// Shared driver: `base(illum, color)` yields the unscaled noiseless response.
fn synthesize<F>(
    sensor_name: &str,
    illuminants: &[IlluminantSpec],
    config: &SynthConfig,
    base: F,
) -> Result<CalibrationTable>
where
    F: Fn(usize, usize) -> [f64; 3] + Sync,
{
    config.validate()?;
    if illuminants.is_empty() {
        return Err(Error::Empty("illuminant list"));
    }
    let colors = config.k.num_colors();
    let max_base = (0..illuminants.len())
        .into_par_iter()
        .map(|i| (0..colors).flat_map(|q| base(i, q)).fold(0.0_f64, f64::max))
        .reduce(|| 0.0, f64::max);
    if !max_base.is_finite() {
        return Err(Error::ExposureInfeasible("non-finite sensor response".into()));
    }
    let limit = EXPOSURE_HEADROOM * RAW_MAX as f64;
    let exposure = match config.exposure {
        Exposure::Auto if max_base > 0.0 => limit / max_base,
        Exposure::Auto => 1.0,
        Exposure::Fixed(e) => {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "exposure must be positive, got {e}"
                )));
            }
            if e * max_base > limit {
                return Err(Error::ExposureInfeasible(format!(
                    "exposure {e} puts the brightest base at {:.1}, above {limit:.1}",
                    e * max_base
                )));
            }
            e
        }
    };
    let ceiling = NOISE_CEILING * RAW_MAX as f64;
    let sigma = config.noise_sigma;
    let s = config.samples_per_cell;
    let chunks = (0..illuminants.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = stream::chacha(config.seed, &[i as u64]);
            let normal = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
            let mut chunk = Vec::with_capacity(colors * s * 3);
            for q in 0..colors {
                let b = base(i, q).map(|v| v.max(0.0) * exposure);
                for _ in 0..s {
                    for v in b {
                        let noisy = if sigma > 0.0 {
                            v * (1.0 + normal.sample(&mut rng))
                        } else {
                            v
                        };
                        chunk.push(noisy.clamp(0.0, ceiling).round() as u16);
                    }
                }
            }
            chunk
        })
        .collect();
    CalibrationTable::from_parts(
        Some(sensor_name.to_string()),
        config.k,
        s,
        illuminants.to_vec(),
        chunks,
    )
}

/// Diagonal (von Kries) oracle: `base = exposure · M · (gains ∘ e ∘ lin(q))`.
pub fn synth_table_diagonal(
    illuminants: &[IlluminantSpec],
    sensor: &SensorModel,
    config: &SynthConfig,
) -> Result<CalibrationTable> {
    let SensorKind::Diagonal { matrix, gains } = &sensor.kind else {
        return Err(Error::InvalidParameter(format!(
            "sensor {} is not a diagonal sensor",
            sensor.name
        )));
    };
    let raw: Vec<[f64; 3]> = illuminants
        .iter()
        .map(|il| {
            let e = il.camera_rgb.to_array();
            [gains[0] * e[0], gains[1] * e[1], gains[2] * e[2]]
        })
        .collect();
    // the recorded ground truth is the sensor's response to a white print
    let plain = *matrix == IDENTITY3 && *gains == [1.0; 3];
    let recorded: Vec<IlluminantSpec> = if plain {
        illuminants.to_vec()
    } else {
        illuminants
            .iter()
            .zip(&raw)
            .map(|(il, e)| {
                let white = LinearRgb::from_array(std::array::from_fn(|c| {
                    matrix[c][0] * e[0] + matrix[c][1] * e[1] + matrix[c][2] * e[2]
                }));
                IlluminantSpec::from_rgb(
                    il.id.clone(),
                    il.kind,
                    white,
                    il.temperature_kelvin,
                    il.spd.clone(),
                )
            })
            .collect::<Result<_>>()?
    };
    let linear: Vec<[f64; 3]> = (0..config.k.num_colors())
        .map(|q| QuantizedSrgb::from_index(q, config.k).map(linear_color))
        .collect::<Result<_>>()?;
    synthesize(&sensor.name, &recorded, config, |i, q| {
        let e = raw[i];
        let l = linear[q];
        let v = [e[0] * l[0], e[1] * l[1], e[2] * l[2]];
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate() {
            *o = matrix[c][0] * v[0] + matrix[c][1] * v[1] + matrix[c][2] * v[2];
        }
        out
    })
}

/// Spectral oracle: `base_c = Σ_λ I(λ) R(λ) ρ_c(λ) Δλ`.
pub fn synth_table_spectral(
    illuminants: &[IlluminantSpec],
    sensor: &SensorModel,
    reflectance: &dyn ReflectanceModel,
    config: &SynthConfig,
) -> Result<CalibrationTable> {
    let SensorKind::Spectral { grid, curves } = &sensor.kind else {
        return Err(Error::InvalidParameter(format!(
            "sensor {} is not a spectral sensor",
            sensor.name
        )));
    };
    let w = grid.trapezoid_weights();
    // per illuminant and channel: w(λ)·I(λ)·ρ_c(λ)
    let kernels: Vec<[Vec<f64>; 3]> = illuminants
        .iter()
        .map(|il| {
            let spd = il.spd.as_ref().ok_or_else(|| Error::MissingSpd(il.id.clone()))?;
            if spd.grid() != grid {
                return Err(Error::GridMismatch(format!(
                    "illuminant {} spectrum is not on the sensor grid",
                    il.id
                )));
            }
            Ok(std::array::from_fn(|c| {
                w.iter()
                    .zip(spd.values())
                    .zip(&curves[c])
                    .map(|((w, i), r)| w * i * r)
                    .collect()
            }))
        })
        .collect::<Result<_>>()?;
    let reflectances: Vec<Vec<f64>> = (0..config.k.num_colors())
        .into_par_iter()
        .map(|q| reflectance.reflectance(QuantizedSrgb::from_index(q, config.k)?, grid))
        .collect::<Result<_>>()?;
    if let Some(bad) = reflectances
        .iter()
        .find(|r| r.len() != grid.len() || r.iter().any(|v| !(0.0..=1.0).contains(v)))
    {
        return Err(Error::InvalidParameter(format!(
            "reflectance curve must have {} samples in [0, 1], got {} samples",
            grid.len(),
            bad.len()
        )));
    }
    synthesize(&sensor.name, illuminants, config, |i, q| {
        let r = &reflectances[q];
        std::array::from_fn(|c| kernels[i][c].iter().zip(r).map(|(k, r)| k * r).sum())
    })
}
