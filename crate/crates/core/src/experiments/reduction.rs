use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;

use super::{median, method_error, Corpus};
use crate::color::{quantize_channel, KBits};
use crate::error::{Error, Result};
use crate::estimators::EstimatorConfig;
use crate::image::LinearImage;
use crate::metrics::{csv_quote, ErrorKind};
use crate::transfer::TransferFunction;
use crate::Rgb;

/// Largest number of cleared bits in the sweep.
pub const MAX_K: u8 = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: u8,
    pub method: String,
    /// Median reproduction error in degrees.
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionSweepResult {
    pub corpus_id: String,
    /// `methods × 8` rows, `k` major.
    pub rows: Vec<SweepRow>,
    /// Medians on the untouched images, one per method.
    pub baseline: Vec<(String, f64)>,
    /// Distinct colors per image at each `k`.
    pub distinct_colors: Vec<(String, [usize; 8])>,
    pub config: BTreeMap<String, String>,
}

/// Reduces an image by clearing `k` low bits of its 8-bit display encoding.
///
/// The image is first scaled so its brightest channel value is 1. `k = 0`
/// only round-trips through the transfer function in floating point; every
/// `k ≥ 1` rounds to 8 bits before clearing bits.
pub fn reduce_image(
    img: &LinearImage<f64>,
    k: u8,
    transfer: &dyn TransferFunction<f64>,
) -> Result<LinearImage<f64>> {
    if k > MAX_K {
        return Err(Error::InvalidParameter(format!(
            "k must be at most {MAX_K}, got {k}"
        )));
    }
    let peak = img.pixels().iter().map(|p| p.max_component()).fold(0.0, f64::max);
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::DegenerateScene("image has no positive finite value"));
    }
    let kb = KBits::new(k)?;
    // 8-bit codes decode through a 256-entry table
    let decoded: Vec<f64> = (0..=255u32)
        .map(|c| transfer.decode(c as f64 / 255.0))
        .collect::<Result<_>>()?;
    img.try_map(|p| {
        let v = p.to_array().map(|v| v / peak);
        let mut out = [0.0; 3];
        for (o, v) in out.iter_mut().zip(v) {
            let d = transfer.encode(v)?;
            *o = if k == 0 {
                transfer.decode(d)?
            } else {
                let code = (d * 255.0).round().clamp(0.0, 255.0) as u8;
                decoded[quantize_channel(code, kb) as usize]
            };
        }
        Ok(Rgb::from_array(out))
    })
}

/// Number of distinct pixel values, compared bitwise.
pub fn distinct_colors(img: &LinearImage<f64>) -> usize {
    img.pixels()
        .iter()
        .map(|p| p.to_array().map(f64::to_bits))
        .collect::<HashSet<_>>()
        .len()
}

/// Median reproduction error per method for every `k` in `0..=7`.
pub fn reduction_sweep(
    corpus: &Corpus,
    methods: &[EstimatorConfig],
    transfer: &dyn TransferFunction<f64>,
) -> Result<ReductionSweepResult> {
    if corpus.images.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    if methods.is_empty() {
        return Err(Error::Empty("method list"));
    }
    for m in methods {
        m.validate()?;
    }
    let kind = ErrorKind::Reproduction;
    // per image: baseline errors, then errors and color counts for each k
    type PerImage = (Vec<f64>, Vec<Vec<f64>>, [usize; 8]);
    let per_image: Vec<PerImage> = corpus
        .images
        .par_iter()
        .map(|ci| {
            let errs = |img: &LinearImage<f64>| {
                methods
                    .iter()
                    .map(|m| method_error(m, img, ci.ground_truth, kind))
                    .collect::<Result<Vec<_>>>()
            };
            let base = errs(&ci.image)?;
            let mut by_k = Vec::with_capacity(8);
            let mut counts = [0; 8];
            for k in 0..=MAX_K {
                let reduced = reduce_image(&ci.image, k, transfer)?;
                counts[k as usize] = distinct_colors(&reduced);
                by_k.push(errs(&reduced)?);
            }
            Ok((base, by_k, counts))
        })
        .collect::<Result<_>>()?;
    let column = |f: &dyn Fn(&PerImage) -> f64| per_image.iter().map(f).collect::<Vec<_>>();
    let mut rows = Vec::with_capacity(methods.len() * 8);
    for k in 0..=MAX_K as usize {
        for (mi, m) in methods.iter().enumerate() {
            rows.push(SweepRow {
                k: k as u8,
                method: m.label(),
                median: median(&column(&|p| p.1[k][mi]))?,
            });
        }
    }
    let baseline = methods
        .iter()
        .enumerate()
        .map(|(mi, m)| Ok((m.label(), median(&column(&|p| p.0[mi]))?)))
        .collect::<Result<_>>()?;
    let mut config = BTreeMap::new();
    config.insert("corpus".into(), corpus.id.clone());
    config.insert("images".into(), corpus.images.len().to_string());
    config.insert("transfer".into(), transfer.name().to_string());
    config.insert("error".into(), kind.to_string());
    config.insert(
        "methods".into(),
        methods.iter().map(|m| m.label()).collect::<Vec<_>>().join(" "),
    );
    Ok(ReductionSweepResult {
        corpus_id: corpus.id.clone(),
        rows,
        baseline,
        distinct_colors: corpus
            .images
            .iter()
            .zip(&per_image)
            .map(|(ci, p)| (ci.id.clone(), p.2))
            .collect(),
        config,
    })
}

/// Writes `k,method,median_error`.
pub fn write_fig6_csv(path: impl AsRef<Path>, result: &ReductionSweepResult) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("k,method,median_error\n");
    for r in &result.rows {
        out.push_str(&format!("{},{},{:.6}\n", r.k, csv_quote(&r.method), r.median));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{fine_texture_corpus, patch_corpus};
    use crate::transfer::Srgb;

    #[test]
    fn k7_leaves_at_most_eight_colors() {
        let c = patch_corpus(2, 24, 24, 3).unwrap();
        for ci in &c.images {
            let mut prev = usize::MAX;
            for k in 0..=MAX_K {
                let n = distinct_colors(&reduce_image(&ci.image, k, &Srgb).unwrap());
                assert!(n <= prev);
                prev = n;
            }
            assert!(prev <= 8);
        }
    }

    #[test]
    fn k0_is_a_near_identity() {
        let c = fine_texture_corpus(1, 8, 8, 3).unwrap();
        let img = &c.images[0].image;
        let peak = img.pixels().iter().map(|p| p.max_component()).fold(0.0, f64::max);
        let r = reduce_image(img, 0, &Srgb).unwrap();
        for (a, b) in img.pixels().iter().zip(r.pixels()) {
            for (x, y) in a.to_array().iter().zip(b.to_array()) {
                assert!((x / peak - y).abs() < 1e-12);
            }
        }
        assert!(reduce_image(img, 8, &Srgb).is_err());
    }

    #[test]
    fn sweep_shape() {
        let c = patch_corpus(3, 16, 16, 1).unwrap();
        let methods = [EstimatorConfig::gray_world(), EstimatorConfig::white_patch(100.0)];
        let r = reduction_sweep(&c, &methods, &Srgb).unwrap();
        assert_eq!(r.rows.len(), 16);
        assert_eq!(r.distinct_colors.len(), 3);
        for (b, row) in r.baseline.iter().zip(&r.rows[..2]) {
            assert_eq!(b.0, row.method);
            assert!((b.1 - row.median).abs() < 1e-3);
        }
    }
}
