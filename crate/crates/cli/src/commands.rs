use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;

use ccgen::calib::{
    read_table, synth_table_diagonal, synth_table_spectral, write_table, Exposure, SmoothBasis, SynthConfig,
};
use ccgen::estimators::{EstimatorConfig, Method};
use ccgen::experiments::{
    cartesian_benchmark, diagonal_table_builder, load_corpus, reduction_sweep, synthetic_corpus,
    write_corpus, write_fig6_csv, write_table1_csv, CartesianRunSpec, CorpusKind, IllumOption, SceneOption,
    SensorOption,
};
use ccgen::genimg::{
    block_scene, generate_dataset, read_ground_truth_csv, DatasetConfig, DatasetManifest, IlluminantPolicy,
    SamplePolicy, SourceImage,
};
use ccgen::illum::{
    build_illuminant_set, linspace, read_illuminant_csv, write_chromaticity_scatter, write_illuminant_csv,
    IllumSetConfig, DEFAULT_GRID_STEP, DEFAULT_PLANCKIAN_COUNT, DEFAULT_TEMPERATURE_RANGE,
};
use ccgen::image::{read_srgb8_png, RAW_MAX};
use ccgen::metrics::{
    read_estimates_csv, score, write_estimates_csv, write_summary_csv, ErrorKind, EstimateRow,
};
use ccgen::transfer::Srgb;
use ccgen::{Error, IlluminantKind, IlluminantSpec, KBits, Rgb, SensorModel};

pub struct Context {
    pub seed: u64,
    pub config_file: Vec<(String, String)>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CmdResult = Result<(), CliError>;

/// Writes `key = value` lines describing the run; thread count is left out
/// since it never changes results.
fn write_echo(
    path: &Path,
    ctx: &Context,
    command: &str,
    settings: &BTreeMap<String, String>,
) -> Result<(), Error> {
    let mut out = format!(
        "generator-version = {}\ncommand = {command}\nseed = {}\n",
        ccgen::GENERATOR_VERSION,
        ctx.seed
    );
    for (k, v) in &ctx.config_file {
        out.push_str(&format!("config.{k} = {v}\n"));
    }
    for (k, v) in settings {
        out.push_str(&format!("{k} = {v}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// `out.csv` → `out.run.txt` next to it.
fn echo_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.run.txt"))
}

fn ensure_parent(path: &Path) -> Result<(), Error> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p).map_err(|e| Error::io(p, e)),
        _ => Ok(()),
    }
}

#[derive(Debug, Args)]
pub struct IllumSetArgs {
    /// rb-chromaticity lattice spacing.
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    /// Use the whole chromaticity simplex instead of the projector gamut.
    #[arg(long)]
    pub full_simplex: bool,
    /// Number of black-body illuminants.
    #[arg(long, default_value_t = DEFAULT_PLANCKIAN_COUNT)]
    pub temperatures: usize,
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE_RANGE.0)]
    pub t_min: f64,
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE_RANGE.1)]
    pub t_max: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write `id,kind,rc,bc` for plotting.
    #[arg(long)]
    pub scatter: Option<PathBuf>,
}

fn illum_config(
    grid_step: f64,
    full_simplex: bool,
    temperatures: usize,
    t_min: f64,
    t_max: f64,
) -> IllumSetConfig {
    let d = IllumSetConfig::default();
    IllumSetConfig {
        grid_step: Some(grid_step),
        gamut: if full_simplex { None } else { d.gamut },
        temperatures: linspace(t_min, t_max, temperatures),
        ..d
    }
}

pub fn illum_set(ctx: &Context, a: &IllumSetArgs) -> CmdResult {
    let cfg = illum_config(a.grid_step, a.full_simplex, a.temperatures, a.t_min, a.t_max);
    let set = build_illuminant_set(&cfg)?;
    ensure_parent(&a.out)?;
    write_illuminant_csv(&a.out, &set)?;
    if let Some(s) = &a.scatter {
        ensure_parent(s)?;
        write_chromaticity_scatter(s, &set)?;
    }
    let grid = set.iter().filter(|s| s.kind == IlluminantKind::Grid).count();
    log::info!(
        "{} illuminants ({grid} lattice, {} black body)",
        set.len(),
        set.len() - grid
    );
    let mut m = BTreeMap::new();
    m.insert("grid-step".into(), a.grid_step.to_string());
    m.insert(
        "gamut".into(),
        if a.full_simplex { "simplex" } else { "projector" }.into(),
    );
    m.insert("temperatures".into(), a.temperatures.to_string());
    m.insert("t-min".into(), a.t_min.to_string());
    m.insert("t-max".into(), a.t_max.to_string());
    m.insert("sensor".into(), cfg.sensor.name.clone());
    m.insert("dedupe-tolerance".into(), cfg.dedupe_tolerance.to_string());
    m.insert("count".into(), set.len().to_string());
    write_echo(&echo_path(&a.out), ctx, "illum-set", &m)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SensorChoice {
    /// Diagonal sensor with identity response.
    Identity,
    /// Diagonal sensor with mild channel crosstalk.
    Crosstalk,
    /// Gaussian spectral sensitivities with smooth reflectances; needs black-body illuminants.
    Spectral,
}

const CROSSTALK: [[f64; 3]; 3] = [[0.90, 0.08, 0.02], [0.05, 0.90, 0.05], [0.02, 0.08, 0.90]];

fn sensor_model(c: SensorChoice) -> Result<SensorModel, Error> {
    match c {
        SensorChoice::Identity => Ok(SensorModel::identity("identity")),
        SensorChoice::Crosstalk => SensorModel::diagonal("crosstalk", CROSSTALK, [1.0; 3]),
        SensorChoice::Spectral => Ok(SensorModel::default_spectral()),
    }
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Illuminant CSV from `illum-set`; the default set is built when omitted.
    #[arg(long)]
    pub illuminants: Option<PathBuf>,
    /// Keep only these illuminant ids.
    #[arg(long, value_delimiter = ',')]
    pub ids: Vec<String>,
    /// Keep this many evenly spaced illuminants.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum, default_value_t = SensorChoice::Identity)]
    pub sensor: SensorChoice,
    /// Relative standard deviation of multiplicative sensor noise.
    #[arg(long, default_value_t = 0.01)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = ccgen::calib::DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Cleared low bits per channel of the printable palette.
    #[arg(long, default_value_t = KBits::DEFAULT.get())]
    pub k: u8,
    /// `auto` or a fixed scale factor.
    #[arg(long, default_value = "auto")]
    pub exposure: String,
    #[arg(long)]
    pub out: PathBuf,
}

fn select_illuminants(
    set: Vec<IlluminantSpec>,
    ids: &[String],
    count: Option<usize>,
) -> Result<Vec<IlluminantSpec>, CliError> {
    let mut set = if ids.is_empty() {
        set
    } else {
        ids.iter()
            .map(|id| {
                set.iter()
                    .find(|s| &s.id == id)
                    .cloned()
                    .ok_or_else(|| CliError::Core(Error::UnknownIlluminant(id.clone())))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    if let Some(n) = count {
        if n == 0 || n > set.len() {
            return Err(CliError::Usage(format!(
                "--count must be in 1..={}, got {n}",
                set.len()
            )));
        }
        set = (0..n).map(|i| set[i * set.len() / n].clone()).collect();
    }
    Ok(set)
}

pub fn calibrate(ctx: &Context, a: &CalibrateArgs) -> CmdResult {
    let k = KBits::new(a.k).map_err(|e| CliError::Usage(e.to_string()))?;
    let exposure = match a.exposure.as_str() {
        "auto" => Exposure::Auto,
        s => Exposure::Fixed(
            s.parse()
                .map_err(|_| CliError::Usage(format!("--exposure must be auto or a number, got {s:?}")))?,
        ),
    };
    let sensor = sensor_model(a.sensor)?;
    let set = match &a.illuminants {
        Some(p) => read_illuminant_csv(p, Some(&sensor))?,
        None => build_illuminant_set(&IllumSetConfig::default())?,
    };
    let illums = select_illuminants(set, &a.ids, a.count)?;
    let cfg = SynthConfig {
        noise_sigma: a.noise_sigma,
        samples_per_cell: a.samples,
        k,
        seed: ctx.seed,
        exposure,
    };
    let bytes = illums.len() * k.num_colors() * a.samples * 6;
    log::info!(
        "synthesizing {} illuminants ({:.1} MiB of samples)",
        illums.len(),
        bytes as f64 / 1048576.0
    );
    let table = if sensor.is_spectral() {
        let basis = SmoothBasis::fit(&sensor)?;
        synth_table_spectral(&illums, &sensor, &basis, &cfg)?
    } else {
        synth_table_diagonal(&illums, &sensor, &cfg)?
    };
    ensure_parent(&a.out)?;
    write_table(&table, &a.out)?;
    let mut m = BTreeMap::new();
    m.insert("sensor".into(), sensor.name.clone());
    m.insert("noise-sigma".into(), a.noise_sigma.to_string());
    m.insert("samples".into(), a.samples.to_string());
    m.insert("k".into(), a.k.to_string());
    m.insert("exposure".into(), a.exposure.clone());
    m.insert("illuminants".into(), illums.len().to_string());
    m.insert(
        "table-checksum".into(),
        format!("{:08x}", ccgen::calib::table_checksum(&table)?),
    );
    write_echo(&echo_path(&a.out), ctx, "calibrate-synth", &m)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IllumPolicyChoice {
    Random,
    Paired,
    Nearest,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Calibration table file.
    #[arg(long)]
    pub table: PathBuf,
    /// Glob of 8-bit PNG source images.
    #[arg(long)]
    pub sources: Option<String>,
    /// Use this many random 8×8-block scenes instead of source files.
    #[arg(long)]
    pub random_scenes: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, value_enum, default_value_t = IllumPolicyChoice::Random)]
    pub illuminant_policy: IllumPolicyChoice,
    /// Illuminant ids, one per source, for the paired policy.
    #[arg(long, value_delimiter = ',')]
    pub illuminants: Vec<String>,
    /// CSV `image,eR,eG,eB` of target illuminants for the nearest policy.
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// random, mean or fixed:<i>.
    #[arg(long, default_value = "random")]
    pub sample_policy: SamplePolicy,
    /// Fixed manifest timestamp (RFC 3339) instead of the clock.
    #[arg(long)]
    pub timestamp: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

fn load_sources(pattern: &str) -> Result<Vec<SourceImage>, CliError> {
    let paths =
        glob::glob(pattern).map_err(|e| CliError::Usage(format!("bad source glob {pattern:?}: {e}")))?;
    let mut paths: Vec<PathBuf> = paths
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Core(Error::io(e.path(), std::io::Error::other(e.to_string()))))?;
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Core(Error::Empty("source images matching the glob")));
    }
    paths
        .par_iter()
        .map(|p| {
            Ok(SourceImage {
                id: p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                image: read_srgb8_png(p)?,
            })
        })
        .collect::<Result<_, Error>>()
        .map_err(CliError::Core)
}

fn block_sources(n: usize, width: usize, height: usize, seed: u64) -> Result<Vec<SourceImage>, Error> {
    (0..n)
        .map(|i| {
            Ok(SourceImage {
                id: format!("blocks_{i:05}"),
                image: block_scene(width, height, 8, ccgen::stream::derive(seed, &[i as u64]))?,
            })
        })
        .collect()
}

fn read_targets(path: &Path) -> Result<Vec<Rgb>, Error> {
    Ok(read_ground_truth_csv(path)?.into_iter().map(|(_, e)| e).collect())
}

pub fn generate(ctx: &Context, a: &GenerateArgs) -> CmdResult {
    let sources = match (&a.sources, a.random_scenes) {
        (Some(g), None) => load_sources(g)?,
        (None, Some(n)) => block_sources(n, a.width, a.height, ctx.seed)?,
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --sources or --random-scenes".into(),
            ))
        }
    };
    let table = read_table(&a.table)?;
    let policy = match a.illuminant_policy {
        IllumPolicyChoice::Random => IlluminantPolicy::RandomWithReplacement,
        IllumPolicyChoice::Paired => IlluminantPolicy::Paired(a.illuminants.clone()),
        IllumPolicyChoice::Nearest => {
            let t = a
                .targets
                .as_ref()
                .ok_or_else(|| CliError::Usage("the nearest policy needs --targets".into()))?;
            IlluminantPolicy::NearestToTargets(read_targets(t)?)
        }
    };
    let mut m = BTreeMap::new();
    m.insert("table".into(), a.table.display().to_string());
    m.insert(
        "sources".into(),
        a.sources.clone().unwrap_or_else(|| "random-blocks".into()),
    );
    m.insert("images".into(), sources.len().to_string());
    m.insert("illuminant-policy".into(), policy.name().into());
    m.insert("sample-policy".into(), a.sample_policy.to_string());
    m.insert("k".into(), table.k_bits().get().to_string());
    m.insert("samples-per-cell".into(), table.samples_per_cell().to_string());
    let cfg = DatasetConfig {
        seed: ctx.seed,
        sample_policy: a.sample_policy,
        timestamp: a.timestamp.clone(),
        config: m.clone(),
    };
    let manifest = generate_dataset(&sources, &policy, &table, &cfg, &a.out)?;
    log::info!("wrote {} images to {}", manifest.entries.len(), a.out.display());
    write_echo(&a.out.join("run.txt"), ctx, "generate", &m)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    /// Estimators to run; repeat or separate with commas.
    #[arg(long = "method", value_delimiter = ',')]
    pub methods: Vec<Method>,
    /// Minkowski norm for shades_of_gray and gray_edge.
    #[arg(long)]
    pub p: Option<f64>,
    /// Gray-Edge derivative order (1 or 2).
    #[arg(long)]
    pub order: Option<u8>,
    /// Gray-Edge smoothing scale in pixels.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// White-Patch percentile.
    #[arg(long)]
    pub percentile: Option<f64>,
}

impl MethodArgs {
    fn configs(&self, defaults: &[Method]) -> Result<Vec<EstimatorConfig>, CliError> {
        let methods = if self.methods.is_empty() {
            defaults
        } else {
            &self.methods
        };
        methods
            .iter()
            .map(|&m| {
                let mut c = EstimatorConfig::default_for(m);
                if let (Some(p), Method::ShadesOfGray | Method::GrayEdge) = (self.p, m) {
                    c.p = p;
                }
                if m == Method::GrayEdge {
                    c.order = self.order.unwrap_or(c.order);
                    c.sigma = self.sigma.unwrap_or(c.sigma);
                }
                if m == Method::WhitePatch {
                    c.percentile = self.percentile.unwrap_or(c.percentile);
                }
                c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                Ok(c)
            })
            .collect()
    }
}

const ALL_METHODS: [Method; 4] = [
    Method::WhitePatch,
    Method::GrayWorld,
    Method::ShadesOfGray,
    Method::GrayEdge,
];

fn echo_methods(m: &mut BTreeMap<String, String>, configs: &[EstimatorConfig]) {
    m.insert(
        "methods".into(),
        configs.iter().map(|c| c.label()).collect::<Vec<_>>().join(" "),
    );
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub methods: MethodArgs,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn estimate(ctx: &Context, a: &EstimateArgs) -> CmdResult {
    let configs = a.methods.configs(&ALL_METHODS)?;
    let manifest = DatasetManifest::read(&a.manifest)?;
    let dir = a.manifest.parent().unwrap_or(Path::new("."));
    let rows: Vec<Vec<EstimateRow>> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let img = manifest
                .load_image(dir, e)?
                .to_linear::<f64>(manifest.raw_scale as f64);
            configs
                .iter()
                .map(|c| {
                    let est = match c.estimate(&img) {
                        Err(Error::DegenerateScene(why)) => {
                            log::warn!("{} on {}: {why}; reporting neutral gray", c.label(), e.image);
                            Rgb::splat(1.0 / 3f64.sqrt())
                        }
                        other => other?,
                    };
                    Ok(EstimateRow {
                        image: e.image.clone(),
                        method: c.method.to_string(),
                        params: c.params(),
                        e_r: est.r,
                        e_g: est.g,
                        e_b: est.b,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()
        })
        .collect::<Result<_, Error>>()?;
    let rows: Vec<EstimateRow> = rows.into_iter().flatten().collect();
    ensure_parent(&a.out)?;
    write_estimates_csv(&a.out, &rows)?;
    let mut m = BTreeMap::new();
    m.insert("manifest".into(), a.manifest.display().to_string());
    m.insert("images".into(), manifest.entries.len().to_string());
    echo_methods(&mut m, &configs);
    write_echo(&echo_path(&a.out), ctx, "estimate", &m)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset manifest holding the ground truth.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Ground-truth CSV (`image,eR,eG,eB`), instead of a manifest.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub estimates: PathBuf,
    #[arg(long, default_value = "recovery")]
    pub error: ErrorKind,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn evaluate(ctx: &Context, a: &EvaluateArgs) -> CmdResult {
    let gt = match (&a.manifest, &a.gt) {
        (Some(m), None) => DatasetManifest::read(m)?.ground_truth(),
        (None, Some(g)) => read_ground_truth_csv(g)?,
        _ => return Err(CliError::Usage("give exactly one of --manifest or --gt".into())),
    };
    let est = read_estimates_csv(&a.estimates)?;
    let rows = score(&gt, &est, a.error)?;
    ensure_parent(&a.out)?;
    write_summary_csv(&a.out, &rows, a.error)?;
    let mut m = BTreeMap::new();
    m.insert("estimates".into(), a.estimates.display().to_string());
    m.insert("error".into(), a.error.to_string());
    m.insert("images".into(), gt.len().to_string());
    m.insert("quartiles".into(), "linear interpolation at q(N-1)".into());
    m.insert("best-worst-25".into(), "ceil(N/4) values".into());
    write_echo(&echo_path(&a.out), ctx, "evaluate", &m)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusChoice {
    FineTexture,
    Patches,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// Directory with `gt.csv` and 16-bit PNGs; a synthetic corpus is used when omitted.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CorpusChoice::FineTexture)]
    pub synthetic: CorpusChoice,
    #[arg(long, default_value_t = 20)]
    pub images: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    /// Also save the synthetic corpus here.
    #[arg(long)]
    pub write_corpus: Option<PathBuf>,
    #[command(flatten)]
    pub methods: MethodArgs,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn reduce(ctx: &Context, a: &ReduceArgs) -> CmdResult {
    let configs = a.methods.configs(&ALL_METHODS)?;
    let corpus = match &a.corpus {
        Some(dir) => load_corpus(dir)?,
        None => {
            let kind = match a.synthetic {
                CorpusChoice::FineTexture => CorpusKind::FineTexture,
                CorpusChoice::Patches => CorpusKind::Patches,
            };
            let c = synthetic_corpus(kind, a.images, a.width, a.height, ctx.seed)?;
            if let Some(dir) = &a.write_corpus {
                write_corpus(&c, dir)?;
            }
            c
        }
    };
    let result = reduction_sweep(&corpus, &configs, &Srgb)?;
    ensure_parent(&a.out)?;
    write_fig6_csv(&a.out, &result)?;
    let mut m = result.config.clone();
    for (method, med) in &result.baseline {
        m.insert(format!("baseline.{method}"), format!("{med:.6}"));
    }
    if a.corpus.is_none() {
        m.insert("width".into(), a.width.to_string());
        m.insert("height".into(), a.height.to_string());
    }
    write_echo(&echo_path(&a.out), ctx, "reduce-experiment", &m)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Glob of 8-bit PNG scenes; random 8×8-block scenes are used when omitted.
    #[arg(long)]
    pub sources: Option<String>,
    /// CSV `image,eR,eG,eB` of target illuminants; black-body members of the set when omitted.
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// Noise of sensor A.
    #[arg(long, default_value_t = 0.05)]
    pub sigma_a: f64,
    /// Noise of sensor B.
    #[arg(long, default_value_t = 0.01)]
    pub sigma_b: f64,
    #[arg(long, default_value_t = 50)]
    pub images: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = KBits::DEFAULT.get())]
    pub k: u8,
    #[arg(long, default_value_t = ccgen::calib::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    #[arg(long, default_value = "recovery")]
    pub error: ErrorKind,
    #[command(flatten)]
    pub methods: MethodArgs,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn benchmark(ctx: &Context, a: &BenchmarkArgs) -> CmdResult {
    let configs = a
        .methods
        .configs(&[Method::WhitePatch, Method::GrayWorld, Method::ShadesOfGray])?;
    let k = KBits::new(a.k).map_err(|e| CliError::Usage(e.to_string()))?;
    let set_cfg = illum_config(
        a.grid_step,
        false,
        DEFAULT_PLANCKIAN_COUNT,
        DEFAULT_TEMPERATURE_RANGE.0,
        DEFAULT_TEMPERATURE_RANGE.1,
    );
    let set = build_illuminant_set(&set_cfg)?;
    let (corpus_name, sources) = match &a.sources {
        Some(g) => ("corpus".to_string(), load_sources(g)?),
        None => (
            "block-scenes".to_string(),
            block_sources(a.images, a.width, a.height, ctx.seed)?,
        ),
    };
    let targets = match &a.targets {
        Some(p) => read_targets(p)?,
        None => set
            .iter()
            .filter(|s| s.kind == IlluminantKind::Planckian)
            .map(|s| s.camera_rgb)
            .collect(),
    };
    let mut spec = CartesianRunSpec::new(
        [
            SceneOption::Corpus {
                name: corpus_name,
                sources,
            },
            SceneOption::RandomScenes {
                width: a.width,
                height: a.height,
            },
        ],
        [
            SensorOption {
                sensor: SensorModel::identity("sensor-A"),
                noise_sigma: a.sigma_a,
            },
            SensorOption {
                sensor: SensorModel::diagonal("sensor-B", CROSSTALK, [1.0; 3])?,
                noise_sigma: a.sigma_b,
            },
        ],
        [
            IllumOption::NearestToTargets {
                name: "nearest-illuminants".into(),
                targets,
            },
            IllumOption::RandomFromSet,
        ],
        set,
    );
    spec.images_per_config = a.images;
    spec.seed = ctx.seed;
    spec.k = k;
    spec.samples_per_cell = a.samples;
    let builder = diagonal_table_builder(k, a.samples);
    let results = cartesian_benchmark(&spec, &builder, &configs, a.error)?;
    ensure_parent(&a.out)?;
    write_table1_csv(&a.out, &results)?;
    let mut m = spec.echo();
    echo_methods(&mut m, &configs);
    m.insert("error".into(), a.error.to_string());
    m.insert("grid-step".into(), a.grid_step.to_string());
    m.insert("raw-scale".into(), RAW_MAX.to_string());
    write_echo(&echo_path(&a.out), ctx, "benchmark", &m)?;
    Ok(())
}
