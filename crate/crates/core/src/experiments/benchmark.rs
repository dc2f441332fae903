use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use super::method_error;
use crate::calib::{synth_table_diagonal, CalibrationTable, SynthConfig, DEFAULT_SAMPLES};
use crate::color::KBits;
use crate::error::{Error, Result};
use crate::estimators::EstimatorConfig;
use crate::genimg::{generate_image, random_scene, GenerationRequest, SamplePolicy, SourceImage};
use crate::illum::{nearest_illuminants, IlluminantSpec};
use crate::image::RAW_MAX;
use crate::metrics::{csv_quote, summarize, ErrorKind, MethodSummary, SUMMARY_COLUMNS};
use crate::spectrum::SensorModel;
use crate::stream;
use crate::Rgb;

#[derive(Debug, Clone, PartialEq)]
pub enum SceneOption {
    /// Fixed source images, used in order and cycled if there are fewer than needed.
    Corpus { name: String, sources: Vec<SourceImage> },
    /// Uniform random scenes.
    RandomScenes { width: usize, height: usize },
}

impl SceneOption {
    pub fn name(&self) -> &str {
        match self {
            SceneOption::Corpus { name, .. } => name,
            SceneOption::RandomScenes { .. } => "random-scenes",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorOption {
    pub sensor: SensorModel,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IllumOption {
    /// Image `i` takes the set member nearest to target `i mod n`.
    NearestToTargets { name: String, targets: Vec<Rgb> },
    /// Uniform draws with replacement from the whole set.
    RandomFromSet,
}

impl IllumOption {
    pub fn name(&self) -> &str {
        match self {
            IllumOption::NearestToTargets { name, .. } => name,
            IllumOption::RandomFromSet => "random-illuminants",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartesianRunSpec {
    pub scenes: [SceneOption; 2],
    pub sensors: [SensorOption; 2],
    pub illuminants: [IllumOption; 2],
    pub illuminant_set: Vec<IlluminantSpec>,
    pub images_per_config: usize,
    pub seed: u64,
    pub k: KBits,
    pub samples_per_cell: usize,
    pub sample_policy: SamplePolicy,
}

impl CartesianRunSpec {
    pub fn new(
        scenes: [SceneOption; 2],
        sensors: [SensorOption; 2],
        illuminants: [IllumOption; 2],
        illuminant_set: Vec<IlluminantSpec>,
    ) -> Self {
        Self {
            scenes,
            sensors,
            illuminants,
            illuminant_set,
            images_per_config: 50,
            seed: 0,
            k: KBits::DEFAULT,
            samples_per_cell: DEFAULT_SAMPLES,
            sample_policy: SamplePolicy::RandomOfS,
        }
    }

    /// Every parameter of the run, defaults included.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("seed".into(), self.seed.to_string());
        m.insert("images_per_config".into(), self.images_per_config.to_string());
        m.insert("k".into(), self.k.get().to_string());
        m.insert("samples_per_cell".into(), self.samples_per_cell.to_string());
        m.insert("sample_policy".into(), self.sample_policy.to_string());
        m.insert(
            "illuminant_set_size".into(),
            self.illuminant_set.len().to_string(),
        );
        for (i, s) in self.sensors.iter().enumerate() {
            m.insert(format!("sensor{i}"), s.sensor.name.clone());
            m.insert(format!("sensor{i}_noise_sigma"), s.noise_sigma.to_string());
        }
        for (i, s) in self.scenes.iter().enumerate() {
            m.insert(format!("scenes{i}"), s.name().to_string());
        }
        for (i, s) in self.illuminants.iter().enumerate() {
            m.insert(format!("illuminants{i}"), s.name().to_string());
        }
        m
    }
}

/// Builds a table for `illuminants` under a sensor option; the seed drives sensor noise.
pub type TableBuilder<'a> =
    dyn Fn(&[IlluminantSpec], &SensorOption, u64) -> Result<CalibrationTable> + Sync + 'a;

/// Table builder using the diagonal oracle.
pub fn diagonal_table_builder(
    k: KBits,
    samples_per_cell: usize,
) -> impl Fn(&[IlluminantSpec], &SensorOption, u64) -> Result<CalibrationTable> + Sync {
    move |illums, opt, seed| {
        synth_table_diagonal(
            illums,
            &opt.sensor,
            &SynthConfig {
                noise_sigma: opt.noise_sigma,
                samples_per_cell,
                k,
                seed,
                ..Default::default()
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigResult {
    /// `scenes/sensor/illuminants`.
    pub name: String,
    pub scenes: String,
    pub sensor: String,
    pub illuminants: String,
    pub summaries: Vec<MethodSummary>,
}

const SCENE_STREAM: u64 = 1;
const ILLUM_STREAM: u64 = 2;
const TABLE_STREAM: u64 = 3;
const PIXEL_STREAM: u64 = 4;

/// Runs all 8 (scenes × sensor × illuminants) configurations.
///
/// Scenes and illuminant choices depend only on their own option, so both
/// sensors see identical inputs. A single-illuminant table is built per
/// distinct illuminant, with noise seeded by (seed, sensor, illuminant).
pub fn cartesian_benchmark(
    spec: &CartesianRunSpec,
    table_builder: &TableBuilder<'_>,
    methods: &[EstimatorConfig],
    kind: ErrorKind,
) -> Result<Vec<ConfigResult>> {
    if spec.images_per_config == 0 {
        return Err(Error::Empty("benchmark images"));
    }
    if spec.illuminant_set.is_empty() {
        return Err(Error::Empty("illuminant set"));
    }
    if methods.is_empty() {
        return Err(Error::Empty("method list"));
    }
    for m in methods {
        m.validate()?;
    }
    let n = spec.images_per_config;
    let scene_sets: Vec<Vec<SourceImage>> = spec
        .scenes
        .iter()
        .enumerate()
        .map(|(si, s)| scenes_for(s, n, stream::derive(spec.seed, &[SCENE_STREAM, si as u64])))
        .collect::<Result<_>>()?;
    let illum_choices: Vec<Vec<usize>> = spec
        .illuminants
        .iter()
        .enumerate()
        .map(|(ii, o)| {
            choose_illuminants(
                o,
                &spec.illuminant_set,
                n,
                stream::derive(spec.seed, &[ILLUM_STREAM, ii as u64]),
            )
        })
        .collect::<Result<_>>()?;
    let configs: Vec<(usize, usize, usize)> = (0..2)
        .flat_map(|s| (0..2).flat_map(move |e| (0..2).map(move |i| (s, e, i))))
        .collect();
    configs
        .par_iter()
        .map(|&(si, ei, ii)| {
            let sensor = &spec.sensors[ei];
            let choice = &illum_choices[ii];
            let mut distinct = choice.clone();
            distinct.sort_unstable();
            distinct.dedup();
            // (image index, error per method), grouped by illuminant
            let per_illum: Vec<Vec<(usize, Vec<f64>)>> = distinct
                .par_iter()
                .map(|&set_idx| {
                    let il = &spec.illuminant_set[set_idx];
                    let table_seed = stream::derive(spec.seed, &[TABLE_STREAM, ei as u64, set_idx as u64]);
                    let table = table_builder(std::slice::from_ref(il), sensor, table_seed)?;
                    let images: Vec<usize> = (0..n).filter(|&j| choice[j] == set_idx).collect();
                    images
                        .par_iter()
                        .map(|&j| {
                            let out = generate_image(&GenerationRequest {
                                source: &scene_sets[si][j].image,
                                illuminant: &table.illuminants()[0].id,
                                table: &table,
                                seed: stream::derive(spec.seed, &[PIXEL_STREAM, si as u64, j as u64]),
                                sample_policy: spec.sample_policy,
                            })?;
                            let lin = out.image.to_linear::<f64>(RAW_MAX as f64);
                            let errs = methods
                                .iter()
                                .map(|m| method_error(m, &lin, out.ground_truth, kind))
                                .collect::<Result<Vec<_>>>()?;
                            Ok((j, errs))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            let mut by_image: Vec<(usize, Vec<f64>)> = per_illum.into_iter().flatten().collect();
            by_image.sort_by_key(|(j, _)| *j);
            let summaries = methods
                .iter()
                .enumerate()
                .map(|(mi, m)| {
                    let errs: Vec<f64> = by_image.iter().map(|(_, e)| e[mi]).collect();
                    Ok(MethodSummary {
                        method: m.label(),
                        count: errs.len(),
                        summary: summarize(&errs)?,
                    })
                })
                .collect::<Result<_>>()?;
            let (scenes, sensor_name, illums) = (
                spec.scenes[si].name().to_string(),
                sensor.sensor.name.clone(),
                spec.illuminants[ii].name().to_string(),
            );
            log::info!("benchmark {scenes}/{sensor_name}/{illums} done");
            Ok(ConfigResult {
                name: format!("{scenes}/{sensor_name}/{illums}"),
                scenes,
                sensor: sensor_name,
                illuminants: illums,
                summaries,
            })
        })
        .collect()
}

fn scenes_for(opt: &SceneOption, n: usize, seed: u64) -> Result<Vec<SourceImage>> {
    match opt {
        SceneOption::Corpus { sources, .. } => {
            if sources.is_empty() {
                return Err(Error::Empty("scene corpus"));
            }
            Ok((0..n).map(|j| sources[j % sources.len()].clone()).collect())
        }
        SceneOption::RandomScenes { width, height } => (0..n)
            .map(|j| {
                Ok(SourceImage {
                    id: format!("random_{j:05}"),
                    image: random_scene(*width, *height, stream::derive(seed, &[j as u64]))?,
                })
            })
            .collect(),
    }
}

fn choose_illuminants(opt: &IllumOption, set: &[IlluminantSpec], n: usize, seed: u64) -> Result<Vec<usize>> {
    match opt {
        IllumOption::RandomFromSet => Ok((0..n)
            .map(|j| stream::bounded(stream::derive(seed, &[j as u64]), set.len()))
            .collect()),
        IllumOption::NearestToTargets { targets, .. } => {
            if targets.is_empty() {
                return Err(Error::Empty("illuminant targets"));
            }
            let nearest = nearest_illuminants(targets, set)?;
            let index: Vec<usize> = nearest
                .iter()
                .map(|s| {
                    set.iter()
                        .position(|x| std::ptr::eq(x, *s))
                        .expect("member of set")
                })
                .collect();
            Ok((0..n).map(|j| index[j % index.len()]).collect())
        }
    }
}

/// Writes one row per (configuration, method) with the six summary statistics.
pub fn write_table1_csv(path: impl AsRef<Path>, results: &[ConfigResult]) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!(
        "configuration,scenes,sensor,illuminants,method,count,{}\n",
        SUMMARY_COLUMNS.join(",")
    );
    for r in results {
        for s in &r.summaries {
            out.push_str(&format!(
                "{},{},{},{},{},{}",
                csv_quote(&r.name),
                csv_quote(&r.scenes),
                csv_quote(&r.sensor),
                csv_quote(&r.illuminants),
                csv_quote(&s.method),
                s.count
            ));
            for v in s.summary.to_array() {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
