//! Calibration table: the appearance of every quantized printable color
//! under every illuminant, stored as `S` raw 16-bit samples per cell.

mod format;
mod reflectance;
mod synth;

pub use format::{read_table, table_checksum, write_table, TableFile, TABLE_MAGIC, TABLE_VERSION};
pub use reflectance::{raised_cosine, ConstantReflectance, ReflectanceModel, SmoothBasis};
pub use synth::{synth_table_diagonal, synth_table_spectral, Exposure, SynthConfig};

use crate::color::{KBits, LinearRgb, QuantizedSrgb};
use crate::error::{Error, Result};
use crate::illum::IlluminantSpec;
use crate::image::RAW_MAX;

/// Default samples per cell (one 5×5 patch).
pub const DEFAULT_SAMPLES: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    /// Not part of the binary format; `None` after reading from disk.
    pub sensor_name: Option<String>,
    k: KBits,
    samples_per_cell: usize,
    illuminants: Vec<IlluminantSpec>,
    /// One dense chunk per illuminant: `[color][sample][channel]`.
    chunks: Vec<Vec<u16>>,
}

/// The `S` observations of one (color, illuminant) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationCell<'a> {
    samples: &'a [u16],
}

impl<'a> CalibrationCell<'a> {
    pub fn len(&self) -> usize {
        self.samples.len() / 3
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> [u16; 3] {
        let s = &self.samples[3 * i..3 * i + 3];
        [s[0], s[1], s[2]]
    }

    pub fn iter(&self) -> impl Iterator<Item = [u16; 3]> + 'a {
        self.samples.chunks_exact(3).map(|s| [s[0], s[1], s[2]])
    }

    pub fn contains(&self, px: [u16; 3]) -> bool {
        self.iter().any(|s| s == px)
    }

    /// Per-channel mean of the samples.
    pub fn mean(&self) -> LinearRgb<f64> {
        let mut acc = [0u64; 3];
        for s in self.iter() {
            for c in 0..3 {
                acc[c] += s[c] as u64;
            }
        }
        let n = self.len() as f64;
        LinearRgb::new(acc[0] as f64 / n, acc[1] as f64 / n, acc[2] as f64 / n)
    }
}

impl CalibrationTable {
    pub(crate) fn from_parts(
        sensor_name: Option<String>,
        k: KBits,
        samples_per_cell: usize,
        illuminants: Vec<IlluminantSpec>,
        chunks: Vec<Vec<u16>>,
    ) -> Result<Self> {
        if samples_per_cell == 0 {
            return Err(Error::InvalidParameter(
                "samples per cell must be positive".into(),
            ));
        }
        if illuminants.len() != chunks.len() {
            return Err(Error::MalformedTable(format!(
                "{} illuminants but {} sample chunks",
                illuminants.len(),
                chunks.len()
            )));
        }
        let want = k.num_colors() * samples_per_cell * 3;
        if let Some(bad) = chunks.iter().position(|c| c.len() != want) {
            return Err(Error::MalformedTable(format!(
                "illuminant {bad}: chunk has {} values, expected {want}",
                chunks[bad].len()
            )));
        }
        Ok(Self {
            sensor_name,
            k,
            samples_per_cell,
            illuminants,
            chunks,
        })
    }

    pub fn k_bits(&self) -> KBits {
        self.k
    }

    pub fn samples_per_cell(&self) -> usize {
        self.samples_per_cell
    }

    pub fn num_colors(&self) -> usize {
        self.k.num_colors()
    }

    pub fn illuminants(&self) -> &[IlluminantSpec] {
        &self.illuminants
    }

    pub fn illuminant_index(&self, id: &str) -> Result<usize> {
        self.illuminants
            .iter()
            .position(|i| i.id == id)
            .ok_or_else(|| Error::UnknownIlluminant(id.to_string()))
    }

    pub(crate) fn chunk(&self, illum: usize) -> &[u16] {
        &self.chunks[illum]
    }

    /// Cell by dense color index.
    pub fn cell(&self, color_index: usize, illum: usize) -> Result<CalibrationCell<'_>> {
        let chunk = self
            .chunks
            .get(illum)
            .ok_or_else(|| Error::UnknownIlluminant(format!("index {illum}")))?;
        if color_index >= self.num_colors() {
            return Err(Error::InvalidParameter(format!(
                "color index {color_index} out of range"
            )));
        }
        let stride = self.samples_per_cell * 3;
        Ok(CalibrationCell {
            samples: &chunk[color_index * stride..(color_index + 1) * stride],
        })
    }

    /// O(1) cell lookup for a quantized color.
    pub fn lookup(&self, q: QuantizedSrgb, illum: usize) -> Result<CalibrationCell<'_>> {
        if q.k() != self.k {
            return Err(Error::InvalidParameter(format!(
                "color quantized with k={} but table uses k={}",
                q.k().get(),
                self.k.get()
            )));
        }
        self.cell(q.index(), illum)
    }

    /// Largest encoded sample in the table.
    pub fn max_sample(&self) -> u16 {
        self.chunks
            .iter()
            .flat_map(|c| c.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn is_clip_free(&self) -> bool {
        self.max_sample() < RAW_MAX
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::illum::{IlluminantKind, IlluminantSpec};

    fn tiny() -> CalibrationTable {
        let k = KBits::new(7).unwrap();
        let illum =
            IlluminantSpec::from_rgb("e", IlluminantKind::Grid, LinearRgb::splat(1.0), None, None).unwrap();
        let chunk: Vec<u16> = (0..k.num_colors() * 2 * 3).map(|v| v as u16).collect();
        CalibrationTable::from_parts(None, k, 2, vec![illum], vec![chunk]).unwrap()
    }

    #[test]
    fn lookup_addresses_cells() {
        let t = tiny();
        let q = QuantizedSrgb::new([128, 0, 128], t.k_bits()).unwrap();
        assert_eq!(q.index(), 5);
        let cell = t.lookup(q, 0).unwrap();
        assert_eq!(cell.len(), 2);
        assert_eq!(cell.sample(0), [30, 31, 32]);
        assert_eq!(cell.sample(1), [33, 34, 35]);
        assert!(cell.contains([33, 34, 35]));
        assert!(matches!(t.lookup(q, 1), Err(Error::UnknownIlluminant(_))));
        let wrong_k = QuantizedSrgb::new([0, 0, 0], KBits::DEFAULT).unwrap();
        assert!(t.lookup(wrong_k, 0).is_err());
    }

    #[test]
    fn from_parts_checks_shape() {
        let k = KBits::new(7).unwrap();
        let illum =
            IlluminantSpec::from_rgb("e", IlluminantKind::Grid, LinearRgb::splat(1.0), None, None).unwrap();
        assert!(CalibrationTable::from_parts(None, k, 2, vec![illum.clone()], vec![vec![0; 5]]).is_err());
        assert!(CalibrationTable::from_parts(None, k, 2, vec![illum], vec![]).is_err());
    }
}
