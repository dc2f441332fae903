//! Image and dataset generation from a calibration table.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calib::{table_checksum, CalibrationTable};
use crate::color::{LinearRgb, QuantizedSrgb};
use crate::error::{Error, Result};
use crate::illum::{nearest_illuminants, sig9};
use crate::image::{read_raw16_png, write_raw16_png, RawImage, SrgbImage, RAW_MAX};
use crate::stream;

/// How an output pixel is picked from the `S` samples of its cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplePolicy {
    /// Uniform choice per pixel from a stream keyed by (seed, pixel index).
    #[default]
    RandomOfS,
    FixedIndex(usize),
    /// Rounded per-channel mean of the cell.
    MeanOfS,
}

impl fmt::Display for SamplePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplePolicy::RandomOfS => f.write_str("random"),
            SamplePolicy::FixedIndex(i) => write!(f, "fixed:{i}"),
            SamplePolicy::MeanOfS => f.write_str("mean"),
        }
    }
}

impl FromStr for SamplePolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SamplePolicy::RandomOfS),
            "mean" => Ok(SamplePolicy::MeanOfS),
            _ => s
                .strip_prefix("fixed:")
                .and_then(|i| i.parse().ok())
                .map(SamplePolicy::FixedIndex)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "sample policy must be random, mean or fixed:<i>, got {s:?}"
                    ))
                }),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub source: &'a SrgbImage,
    /// Id of an illuminant stored in `table`.
    pub illuminant: &'a str,
    pub table: &'a CalibrationTable,
    pub seed: u64,
    pub sample_policy: SamplePolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub image: RawImage,
    pub ground_truth: LinearRgb<f64>,
}

/// Replaces every source pixel by an observation of its quantized color.
pub fn generate_image(req: &GenerationRequest<'_>) -> Result<Generated> {
    let table = req.table;
    let illum = table.illuminant_index(req.illuminant)?;
    let s = table.samples_per_cell();
    if let SamplePolicy::FixedIndex(i) = req.sample_policy {
        if i >= s {
            return Err(Error::InvalidParameter(format!(
                "sample index {i} out of range for {s} samples per cell"
            )));
        }
    }
    let k = table.k_bits();
    let width = req.source.width();
    let pixels: Vec<[u16; 3]> = req
        .source
        .pixels()
        .par_iter()
        .enumerate()
        .map(|(idx, px)| {
            let cell = table.lookup(QuantizedSrgb::from_srgb(*px, k), illum)?;
            Ok(match req.sample_policy {
                SamplePolicy::RandomOfS => {
                    cell.sample(stream::bounded(stream::derive(req.seed, &[idx as u64]), s))
                }
                SamplePolicy::FixedIndex(i) => cell.sample(i),
                SamplePolicy::MeanOfS => cell.mean().to_array().map(|v| v.round() as u16),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Generated {
        image: RawImage::new(width, req.source.height(), pixels)?,
        ground_truth: table.illuminants()[illum].camera_rgb,
    })
}

/// Uniform i.i.d. 8-bit channels; each pixel is addressed by (seed, pixel index).
pub fn random_scene(width: usize, height: usize, seed: u64) -> Result<SrgbImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!(
            "scene dimensions must be positive, got {width}x{height}"
        )));
    }
    let pixels = (0..width * height)
        .into_par_iter()
        .map(|i| {
            let h = stream::derive(seed, &[i as u64]);
            [h as u8, (h >> 8) as u8, (h >> 16) as u8]
        })
        .collect();
    SrgbImage::new(width, height, pixels)
}

/// Flat `block`×`block` tiles of uniform random color.
pub fn block_scene(width: usize, height: usize, block: usize, seed: u64) -> Result<SrgbImage> {
    if block == 0 {
        return Err(Error::InvalidParameter("block size must be positive".into()));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!(
            "scene dimensions must be positive, got {width}x{height}"
        )));
    }
    let across = width.div_ceil(block);
    SrgbImage::from_fn(width, height, |x, y| {
        let h = stream::derive(seed, &[((y / block) * across + x / block) as u64]);
        [h as u8, (h >> 8) as u8, (h >> 16) as u8]
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceImage {
    pub id: String,
    pub image: SrgbImage,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IlluminantPolicy {
    /// One illuminant id per source, in order.
    Paired(Vec<String>),
    /// Each image draws uniformly from the table's illuminants.
    RandomWithReplacement,
    /// Image `i` uses the table illuminant closest to target `i mod n`.
    NearestToTargets(Vec<LinearRgb<f64>>),
}

impl IlluminantPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            IlluminantPolicy::Paired(_) => "paired",
            IlluminantPolicy::RandomWithReplacement => "random",
            IlluminantPolicy::NearestToTargets(_) => "nearest",
        }
    }

    /// Table illuminant ids for `n` images.
    pub fn choose(&self, table: &CalibrationTable, n: usize, seed: u64) -> Result<Vec<String>> {
        let set = table.illuminants();
        match self {
            IlluminantPolicy::Paired(ids) => {
                if ids.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "paired policy needs {n} illuminants, got {}",
                        ids.len()
                    )));
                }
                for id in ids {
                    table.illuminant_index(id)?;
                }
                Ok(ids.clone())
            }
            IlluminantPolicy::RandomWithReplacement => Ok((0..n)
                .map(|i| {
                    let h = stream::derive(seed, &[i as u64, ILLUMINANT_STREAM]);
                    set[stream::bounded(h, set.len())].id.clone()
                })
                .collect()),
            IlluminantPolicy::NearestToTargets(targets) => {
                if targets.is_empty() {
                    return Err(Error::Empty("illuminant targets"));
                }
                let nearest = nearest_illuminants(targets, set)?;
                Ok((0..n).map(|i| nearest[i % nearest.len()].id.clone()).collect())
            }
        }
    }
}

const ILLUMINANT_STREAM: u64 = 0x696c_6c75;

/// Seed of image `index` in a dataset with master seed `seed`.
pub fn image_seed(seed: u64, index: usize) -> u64 {
    stream::derive(seed, &[index as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image: String,
    pub image_path: String,
    pub illuminant_id: String,
    pub ground_truth: [f64; 3],
    pub source_id: String,
    pub seed: u64,
    pub table_checksum: u32,
}

impl ManifestEntry {
    pub fn ground_truth(&self) -> LinearRgb<f64> {
        LinearRgb::from_array(self.ground_truth)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub generator_version: String,
    pub created: String,
    /// Raw value that maps to linear 1.0.
    pub raw_scale: u16,
    pub seed: u64,
    pub sample_policy: String,
    pub illuminant_policy: String,
    /// Run configuration, including defaulted values.
    #[serde(default)]
    pub config: BTreeMap<String, String>,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const GT_FILE: &str = "gt.csv";

impl DatasetManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text)?;
        for e in &m.entries {
            let n = e.ground_truth().norm();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::Parse(format!(
                    "{}: ground truth of {} is not unit norm",
                    path.display(),
                    e.image
                )));
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn ground_truth(&self) -> Vec<(String, LinearRgb<f64>)> {
        self.entries
            .iter()
            .map(|e| (e.image.clone(), e.ground_truth()))
            .collect()
    }

    /// Loads an entry's image; relative paths resolve against `dir`.
    pub fn load_image(&self, dir: impl AsRef<Path>, entry: &ManifestEntry) -> Result<RawImage> {
        read_raw16_png(resolve(dir.as_ref(), &entry.image_path))
    }
}

pub(crate) fn resolve(dir: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

/// Writes `image,eR,eG,eB` with nine significant digits.
pub fn write_ground_truth_csv(path: impl AsRef<Path>, rows: &[(String, LinearRgb<f64>)]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("image,eR,eG,eB\n");
    for (id, e) in rows {
        out.push_str(&format!("{id},{},{},{}\n", sig9(e.r), sig9(e.g), sig9(e.b)));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_ground_truth_csv(path: impl AsRef<Path>) -> Result<Vec<(String, LinearRgb<f64>)>> {
    #[derive(Deserialize)]
    struct Row {
        image: String,
        #[serde(rename = "eR")]
        r: f64,
        #[serde(rename = "eG")]
        g: f64,
        #[serde(rename = "eB")]
        b: f64,
    }
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| crate::metrics::csv_open_err(path, e))?;
    rdr.deserialize::<Row>()
        .map(|r| {
            let r = r?;
            Ok((r.image, LinearRgb::new(r.r, r.g, r.b)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub seed: u64,
    pub sample_policy: SamplePolicy,
    /// Overrides the creation timestamp (RFC 3339); `None` uses the clock.
    pub timestamp: Option<String>,
    pub config: BTreeMap<String, String>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sample_policy: SamplePolicy::RandomOfS,
            timestamp: None,
            config: BTreeMap::new(),
        }
    }
}

/// Generates one image per source, writing PNGs, `manifest.json` and `gt.csv` into `out_dir`.
pub fn generate_dataset(
    sources: &[SourceImage],
    policy: &IlluminantPolicy,
    table: &CalibrationTable,
    config: &DatasetConfig,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    let out_dir = out_dir.as_ref();
    if sources.is_empty() {
        return Err(Error::Empty("source images"));
    }
    let illums = policy.choose(table, sources.len(), config.seed)?;
    let checksum = table_checksum(table)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let entries: Vec<ManifestEntry> = sources
        .par_iter()
        .zip(illums.par_iter())
        .enumerate()
        .map(|(i, (src, illum))| {
            let seed = image_seed(config.seed, i);
            let out = generate_image(&GenerationRequest {
                source: &src.image,
                illuminant: illum,
                table,
                seed,
                sample_policy: config.sample_policy,
            })?;
            let image = format!("img_{i:05}");
            let image_path = format!("{image}.png");
            write_raw16_png(out_dir.join(&image_path), &out.image)?;
            log::debug!("wrote {image_path} ({} under {illum})", src.id);
            Ok(ManifestEntry {
                image,
                image_path,
                illuminant_id: illum.clone(),
                ground_truth: out.ground_truth.to_array(),
                source_id: src.id.clone(),
                seed,
                table_checksum: checksum,
            })
        })
        .collect::<Result<_>>()?;
    let manifest = DatasetManifest {
        generator_version: crate::GENERATOR_VERSION.to_string(),
        created: config
            .timestamp
            .clone()
            .unwrap_or_else(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        raw_scale: RAW_MAX,
        seed: config.seed,
        sample_policy: config.sample_policy.to_string(),
        illuminant_policy: policy.name().to_string(),
        config: config.config.clone(),
        entries,
    };
    manifest.write(out_dir.join(MANIFEST_FILE))?;
    write_ground_truth_csv(out_dir.join(GT_FILE), &manifest.ground_truth())?;
    Ok(manifest)
}
