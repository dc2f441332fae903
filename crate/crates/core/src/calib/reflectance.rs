//! Reflectance models mapping printed colors to smooth spectral curves.

use crate::color::QuantizedSrgb;
use crate::error::{Error, Result};
use crate::spectrum::{SensorKind, SensorModel, WavelengthGrid};
use crate::transfer::srgb8_lut;

pub trait ReflectanceModel: Sync {
    /// Reflectance in `[0, 1]` sampled on `grid`.
    fn reflectance(&self, q: QuantizedSrgb, grid: &WavelengthGrid) -> Result<Vec<f64>>;
}

impl<F> ReflectanceModel for F
where
    F: Fn(QuantizedSrgb, &WavelengthGrid) -> Vec<f64> + Sync,
{
    fn reflectance(&self, q: QuantizedSrgb, grid: &WavelengthGrid) -> Result<Vec<f64>> {
        Ok(self(q, grid))
    }
}

/// The same reflectance at every wavelength for every color.
#[derive(Debug, Clone, Copy)]
pub struct ConstantReflectance(pub f64);

impl ReflectanceModel for ConstantReflectance {
    fn reflectance(&self, _q: QuantizedSrgb, grid: &WavelengthGrid) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&self.0) {
            return Err(Error::OutOfRange(self.0));
        }
        Ok(vec![self.0; grid.len()])
    }
}

/// Raised cosine `½(1 + cos(π(λ−c)/w))` on `|λ−c| < w`, zero elsewhere.
pub fn raised_cosine(nm: f64, center: f64, half_width: f64) -> f64 {
    let d = (nm - center) / half_width;
    if d.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * d).cos())
    }
}

/// Three raised-cosine basis functions (R, G, B order) whose weights are
/// fitted so that, under a flat illuminant, the sensor's normalized
/// response to the curve reproduces the color's linear sRGB value.
#[derive(Debug, Clone)]
pub struct SmoothBasis {
    grid: WavelengthGrid,
    basis: [Vec<f64>; 3],
    /// Inverse of the 3×3 map from basis weights to normalized responses.
    inverse: [[f64; 3]; 3],
}

pub const BASIS_CENTERS: [f64; 3] = [610.0, 540.0, 450.0];
pub const BASIS_HALF_WIDTH: f64 = 90.0;

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-12 {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            *v = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
        }
    }
    Some(inv)
}

impl SmoothBasis {
    pub fn fit(sensor: &SensorModel) -> Result<Self> {
        Self::with_basis(sensor, BASIS_CENTERS, BASIS_HALF_WIDTH)
    }

    pub fn with_basis(sensor: &SensorModel, centers: [f64; 3], half_width: f64) -> Result<Self> {
        let SensorKind::Spectral { grid, curves } = &sensor.kind else {
            return Err(Error::InvalidParameter(
                "reflectance basis fitting needs a spectral sensor".into(),
            ));
        };
        let w = grid.trapezoid_weights();
        let basis = centers.map(|c| {
            grid.as_slice()
                .iter()
                .map(|&l| raised_cosine(l, c, half_width))
                .collect::<Vec<_>>()
        });
        let mut a = [[0.0; 3]; 3];
        for (c, curve) in curves.iter().enumerate() {
            let white: f64 = w.iter().zip(curve).map(|(w, r)| w * r).sum();
            for (i, b) in basis.iter().enumerate() {
                a[c][i] = w
                    .iter()
                    .zip(curve)
                    .zip(b)
                    .map(|((w, r), b)| w * r * b)
                    .sum::<f64>()
                    / white;
            }
        }
        let inverse = invert3(&a).ok_or_else(|| {
            Error::InvalidParameter("reflectance basis is degenerate for this sensor".into())
        })?;
        Ok(Self {
            grid: grid.clone(),
            basis,
            inverse,
        })
    }

    /// Clamped basis weights for a linear RGB target.
    pub fn weights(&self, linear: [f64; 3]) -> [f64; 3] {
        let mut a = [0.0; 3];
        for (i, ai) in a.iter_mut().enumerate() {
            *ai = (0..3)
                .map(|c| self.inverse[i][c] * linear[c])
                .sum::<f64>()
                .max(0.0);
        }
        a
    }

    pub fn curve(&self, weights: [f64; 3]) -> Vec<f64> {
        let mut r: Vec<f64> = (0..self.grid.len())
            .map(|j| (0..3).map(|i| weights[i] * self.basis[i][j]).sum())
            .collect();
        let peak = r.iter().copied().fold(0.0, f64::max);
        if peak > 1.0 {
            r.iter_mut().for_each(|v| *v /= peak);
        }
        r.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        r
    }
}

impl ReflectanceModel for SmoothBasis {
    fn reflectance(&self, q: QuantizedSrgb, grid: &WavelengthGrid) -> Result<Vec<f64>> {
        if grid != &self.grid {
            return Err(Error::GridMismatch(
                "reflectance basis fitted on a different grid".into(),
            ));
        }
        let lut = srgb8_lut();
        let linear = q.rgb().map(|c| lut[c as usize]);
        Ok(self.curve(self.weights(linear)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::KBits;
    use crate::spectrum::Spectrum;

    #[test]
    fn fitted_curves_reproduce_linear_color() {
        let sensor = SensorModel::default_spectral();
        let basis = SmoothBasis::fit(&sensor).unwrap();
        let SensorKind::Spectral { grid, .. } = &sensor.kind else {
            unreachable!()
        };
        let flat = Spectrum::constant(grid.clone(), 1.0).unwrap();
        let white = sensor.response(&flat).unwrap();
        let q = QuantizedSrgb::new([96, 160, 64], KBits::DEFAULT).unwrap();
        let r = basis.reflectance(q, grid).unwrap();
        assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
        let resp = sensor.response(&Spectrum::new(grid.clone(), r).unwrap()).unwrap();
        let lut = srgb8_lut();
        let want = [lut[96], lut[160], lut[64]];
        let got = [resp.r / white.r, resp.g / white.g, resp.b / white.b];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn black_maps_to_zero_and_all_curves_bounded() {
        let sensor = SensorModel::default_spectral();
        let basis = SmoothBasis::fit(&sensor).unwrap();
        let SensorKind::Spectral { grid, .. } = &sensor.kind else {
            unreachable!()
        };
        let k = KBits::new(5).unwrap();
        for i in 0..k.num_colors() {
            let q = QuantizedSrgb::from_index(i, k).unwrap();
            let r = basis.reflectance(q, grid).unwrap();
            assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
            if i == 0 {
                assert!(r.iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn diagonal_sensor_rejected() {
        assert!(SmoothBasis::fit(&SensorModel::identity("d")).is_err());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn inverse_is_inverse() {
        let m = [[2.0, 1.0, 0.0], [0.5, 3.0, 1.0], [0.0, 0.2, 1.5]];
        let inv = invert3(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
