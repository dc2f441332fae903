use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::genimg::{
    read_ground_truth_csv, resolve, write_ground_truth_csv, DatasetManifest, GT_FILE, MANIFEST_FILE,
};
use crate::image::{read_raw16_png, write_raw16_png, ImageBuffer, LinearImage, RawImage, RAW_MAX};
use crate::metrics::recovery_error;
use crate::stream;
use crate::transfer::srgb8_lut;
use crate::Rgb;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusImage {
    pub id: String,
    pub image: LinearImage<f64>,
    pub ground_truth: Rgb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub id: String,
    pub images: Vec<CorpusImage>,
}

const GT_AGREEMENT_DEG: f64 = 1e-6;

/// Loads a directory holding `gt.csv` and 16-bit PNGs.
///
/// Image paths come from `manifest.json` when present, otherwise `<image>.png`.
/// A manifest also supplies the full-precision ground truth, which must agree
/// with the rounded `gt.csv` row.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    let gt = read_ground_truth_csv(dir.join(GT_FILE))?;
    if gt.is_empty() {
        return Err(Error::Empty("corpus ground truth"));
    }
    let mut seen = HashSet::new();
    if let Some((dup, _)) = gt.iter().find(|(id, _)| !seen.insert(id.as_str())) {
        return Err(Error::CorpusMismatch(format!(
            "image {dup} listed twice in {GT_FILE}"
        )));
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = if manifest_path.exists() {
        Some(DatasetManifest::read(&manifest_path)?)
    } else {
        None
    };
    let scale = manifest.as_ref().map_or(RAW_MAX, |m| m.raw_scale) as f64;
    let images = gt
        .par_iter()
        .map(|(id, e)| {
            let (path, ground_truth) = match &manifest {
                Some(m) => {
                    let entry = m.entries.iter().find(|x| &x.image == id).ok_or_else(|| {
                        Error::CorpusMismatch(format!(
                            "image {id} is in {GT_FILE} but not in {MANIFEST_FILE}"
                        ))
                    })?;
                    let exact = entry.ground_truth();
                    if recovery_error(exact, *e)? > GT_AGREEMENT_DEG {
                        return Err(Error::CorpusMismatch(format!(
                            "image {id}: {GT_FILE} and {MANIFEST_FILE} disagree on the ground truth"
                        )));
                    }
                    (resolve(dir, &entry.image_path), exact)
                }
                None => (dir.join(format!("{id}.png")), e.normalized()?),
            };
            if !path.exists() {
                return Err(Error::CorpusMismatch(format!(
                    "image {id} has ground truth but {} is missing",
                    path.display()
                )));
            }
            Ok(CorpusImage {
                id: id.clone(),
                image: read_raw16_png(&path)?.to_linear(scale),
                ground_truth,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Corpus {
        id: dir.display().to_string(),
        images,
    })
}

/// Writes `<id>.png` per image (peak scaled to the raw maximum) and `gt.csv`.
pub fn write_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    corpus.images.par_iter().try_for_each(|img| {
        let peak = img
            .image
            .pixels()
            .iter()
            .map(|p| p.max_component())
            .fold(0.0, f64::max);
        let s = if peak > 0.0 {
            (RAW_MAX - 1) as f64 / peak
        } else {
            0.0
        };
        let raw: RawImage = img.image.map(|p| p.to_array().map(|v| (v * s).round() as u16));
        write_raw16_png(dir.join(format!("{}.png", img.id)), &raw)
    })?;
    let gt: Vec<_> = corpus
        .images
        .iter()
        .map(|i| (i.id.clone(), i.ground_truth))
        .collect();
    write_ground_truth_csv(dir.join(GT_FILE), &gt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    /// Achromatic pixel-scale texture: all edge information is fine detail.
    FineTexture,
    /// Flat colored blocks with mild texture.
    Patches,
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Random illuminant with every channel in `[0.3, 1]` before normalizing.
fn corpus_illuminant(seed: u64, i: usize) -> Result<Rgb> {
    let c: [f64; 3] =
        std::array::from_fn(|c| 0.3 + 0.7 * unit(stream::derive(seed, &[i as u64, 0, c as u64])));
    Rgb::from_array(c).normalized()
}

pub fn synthetic_corpus(
    kind: CorpusKind,
    n: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<Corpus> {
    if n == 0 {
        return Err(Error::Empty("corpus"));
    }
    let lut = srgb8_lut();
    let images = (0..n)
        .into_par_iter()
        .map(|i| {
            let e = corpus_illuminant(seed, i)?;
            let px = |x: usize, y: usize| {
                let h = stream::derive(seed, &[i as u64, 1, (y * width + x) as u64]);
                let refl = match kind {
                    CorpusKind::FineTexture => Rgb::splat(0.25 + 0.75 * unit(h)),
                    CorpusKind::Patches => {
                        let block = (y / 8) * width.div_ceil(8) + x / 8;
                        let b = stream::derive(seed, &[i as u64, 2, block as u64]);
                        let base = Rgb::new(
                            lut[(b & 0xff) as usize],
                            lut[((b >> 8) & 0xff) as usize],
                            lut[((b >> 16) & 0xff) as usize],
                        );
                        base * (0.95 + 0.1 * unit(h))
                    }
                };
                refl.hadamard(e)
            };
            Ok(CorpusImage {
                id: format!("img_{i:05}"),
                image: ImageBuffer::from_fn(width, height, px)?,
                ground_truth: e,
            })
        })
        .collect::<Result<_>>()?;
    let name = match kind {
        CorpusKind::FineTexture => "fine-texture",
        CorpusKind::Patches => "patches",
    };
    Ok(Corpus {
        id: format!("synthetic-{name}-{seed}"),
        images,
    })
}

/// Corpus whose edges live entirely in pixel-scale achromatic texture.
pub fn fine_texture_corpus(n: usize, width: usize, height: usize, seed: u64) -> Result<Corpus> {
    synthetic_corpus(CorpusKind::FineTexture, n, width, height, seed)
}

/// Corpus of random colored 8×8 blocks.
pub fn patch_corpus(n: usize, width: usize, height: usize, seed: u64) -> Result<Corpus> {
    synthetic_corpus(CorpusKind::Patches, n, width, height, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_corpora_are_deterministic() {
        let a = fine_texture_corpus(3, 8, 6, 1).unwrap();
        assert_eq!(a, fine_texture_corpus(3, 8, 6, 1).unwrap());
        assert_ne!(a, fine_texture_corpus(3, 8, 6, 2).unwrap());
        for img in &a.images {
            assert!((img.ground_truth.norm() - 1.0).abs() < 1e-12);
        }
        assert!(patch_corpus(0, 8, 8, 1).is_err());
    }

    #[test]
    fn corpus_roundtrip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let c = patch_corpus(2, 16, 12, 5).unwrap();
        write_corpus(&c, dir.path()).unwrap();
        let back = load_corpus(dir.path()).unwrap();
        assert_eq!(back.images.len(), 2);
        for (a, b) in c.images.iter().zip(&back.images) {
            assert_eq!(a.id, b.id);
            assert!((a.ground_truth.r - b.ground_truth.r).abs() < 1e-8);
            assert_eq!(a.image.width(), b.image.width());
        }
        std::fs::remove_file(dir.path().join("img_00001.png")).unwrap();
        assert!(matches!(load_corpus(dir.path()), Err(Error::CorpusMismatch(_))));
    }
}
