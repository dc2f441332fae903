//! Ground-truth illuminant sets: an rb-chromaticity lattice plus black-body
//! colors along the Planckian locus.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::color::{to_chromaticity, Chromaticity, LinearRgb};
use crate::error::{Error, Result};
use crate::metrics::recovery_error;
use crate::spectrum::{illuminant_rgb, planck_spd, SensorKind, SensorModel, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IlluminantKind {
    Grid,
    Planckian,
}

impl IlluminantKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IlluminantKind::Grid => "grid",
            IlluminantKind::Planckian => "planckian",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlluminantSpec {
    pub id: String,
    pub kind: IlluminantKind,
    pub chromaticity: Chromaticity<f64>,
    /// Camera response, unit L2 norm.
    pub camera_rgb: LinearRgb<f64>,
    pub temperature_kelvin: Option<f64>,
    pub spd: Option<Spectrum>,
}

impl IlluminantSpec {
    /// Lattice illuminant whose camera response has the given rb-chromaticity.
    pub fn from_chromaticity(id: impl Into<String>, c: Chromaticity<f64>) -> Result<Self> {
        let g = (1.0 - c.rc - c.bc).max(0.0);
        Self::from_rgb(
            id,
            IlluminantKind::Grid,
            LinearRgb::new(c.rc, g, c.bc),
            None,
            None,
        )
    }

    pub fn from_rgb(
        id: impl Into<String>,
        kind: IlluminantKind,
        rgb: LinearRgb<f64>,
        temperature_kelvin: Option<f64>,
        spd: Option<Spectrum>,
    ) -> Result<Self> {
        if !rgb.is_valid() {
            return Err(Error::InvalidParameter(format!(
                "illuminant response must be finite and nonnegative: {rgb:?}"
            )));
        }
        let camera_rgb = rgb.normalized()?;
        Ok(Self {
            id: id.into(),
            kind,
            chromaticity: to_chromaticity(camera_rgb)?,
            camera_rgb,
            temperature_kelvin,
            spd,
        })
    }

    /// Black body at `kelvin`, optionally filtered by a projector transmission curve.
    pub fn planckian(
        id: impl Into<String>,
        kelvin: f64,
        sensor: &SensorModel,
        projector: Option<&Spectrum>,
    ) -> Result<Self> {
        let SensorKind::Spectral { grid, .. } = &sensor.kind else {
            return Err(Error::InvalidParameter(
                "planckian illuminants need a spectral sensor".into(),
            ));
        };
        let mut spd = planck_spd(kelvin, grid)?;
        if let Some(p) = projector {
            spd = spd.product(p)?;
        }
        let rgb = illuminant_rgb(&spd, sensor)?;
        Self::from_rgb(id, IlluminantKind::Planckian, rgb, Some(kelvin), Some(spd))
    }
}

/// Configuration for [`build_illuminant_set`].
#[derive(Debug, Clone)]
pub struct IllumSetConfig {
    /// Lattice spacing in rb-chromaticity; `None` disables the lattice.
    pub grid_step: Option<f64>,
    /// Convex gamut polygon (counter-clockwise rb vertices); `None` is the whole simplex.
    pub gamut: Option<Vec<[f64; 2]>>,
    pub temperatures: Vec<f64>,
    pub sensor: SensorModel,
    /// Projector transmission multiplied into every black-body spectrum.
    pub projector: Option<Spectrum>,
    pub dedupe_tolerance: f64,
}

/// Pentagon approximating the projector-reachable rb region.
pub const DEFAULT_GAMUT: [[f64; 2]; 5] = [
    [0.10, 0.03],
    [0.74, 0.02],
    [0.604, 0.32],
    [0.30, 0.56],
    [0.10, 0.62],
];
pub const DEFAULT_GRID_STEP: f64 = 0.02;
pub const DEFAULT_PLANCKIAN_COUNT: usize = 50;
pub const DEFAULT_TEMPERATURE_RANGE: (f64, f64) = (2000.0, 12000.0);

/// `n` evenly spaced values over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

impl Default for IllumSetConfig {
    /// 657 lattice points plus 50 black bodies from 2000 K to 12000 K: 707 illuminants.
    fn default() -> Self {
        Self {
            grid_step: Some(DEFAULT_GRID_STEP),
            gamut: Some(DEFAULT_GAMUT.to_vec()),
            temperatures: linspace(
                DEFAULT_TEMPERATURE_RANGE.0,
                DEFAULT_TEMPERATURE_RANGE.1,
                DEFAULT_PLANCKIAN_COUNT,
            ),
            sensor: SensorModel::default_spectral(),
            projector: None,
            dedupe_tolerance: 1e-4,
        }
    }
}

const EDGE_EPS: f64 = 1e-9;

fn in_simplex(rc: f64, bc: f64) -> bool {
    rc >= -EDGE_EPS && bc >= -EDGE_EPS && rc + bc <= 1.0 + EDGE_EPS
}

/// Inclusive point-in-convex-polygon test (vertices counter-clockwise).
fn in_polygon(poly: &[[f64; 2]], rc: f64, bc: f64) -> bool {
    (0..poly.len()).all(|i| {
        let [ax, ay] = poly[i];
        let [bx, by] = poly[(i + 1) % poly.len()];
        (bx - ax) * (bc - ay) - (by - ay) * (rc - ax) >= -EDGE_EPS
    })
}

/// Lattice points `(i·step, j·step)` inside the simplex and the optional gamut.
pub fn chromaticity_lattice(step: f64, gamut: Option<&[[f64; 2]]>) -> Result<Vec<Chromaticity<f64>>> {
    if !(step > 0.0) || step > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "grid step must be in (0, 1], got {step}"
        )));
    }
    if let Some(poly) = gamut {
        if poly.len() < 3 {
            return Err(Error::InvalidParameter("gamut polygon needs 3+ vertices".into()));
        }
    }
    let n = (1.0 / step + EDGE_EPS).floor() as usize;
    let mut out = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let (rc, bc) = (i as f64 * step, j as f64 * step);
            if in_simplex(rc, bc) && gamut.is_none_or(|p| in_polygon(p, rc, bc)) {
                out.push(Chromaticity::new(rc, bc));
            }
        }
    }
    Ok(out)
}

/// Builds the illuminant set: lattice entries first, then black bodies in
/// ascending temperature. Entries within `dedupe_tolerance` (rb distance) of
/// an earlier entry are dropped.
pub fn build_illuminant_set(config: &IllumSetConfig) -> Result<Vec<IlluminantSpec>> {
    if config.grid_step.is_none() && config.temperatures.is_empty() {
        return Err(Error::Empty(
            "illuminant set configuration has no lattice and no temperatures",
        ));
    }
    let mut candidates = Vec::new();
    if let Some(step) = config.grid_step {
        for (i, c) in chromaticity_lattice(step, config.gamut.as_deref())?
            .into_iter()
            .enumerate()
        {
            candidates.push(IlluminantSpec::from_chromaticity(format!("grid-{i:05}"), c)?);
        }
    }
    let mut temps = config.temperatures.clone();
    temps.sort_by(f64::total_cmp);
    for (i, t) in temps.iter().enumerate() {
        candidates.push(IlluminantSpec::planckian(
            format!("planck-{i:04}"),
            *t,
            &config.sensor,
            config.projector.as_ref(),
        )?);
    }
    candidates.sort_by(|a, b| (a.kind, &a.id).cmp(&(b.kind, &b.id)));

    let mut kept: Vec<IlluminantSpec> = Vec::with_capacity(candidates.len());
    for c in candidates {
        let dup = kept
            .iter()
            .any(|k| k.chromaticity.distance(c.chromaticity) < config.dedupe_tolerance);
        if dup {
            log::debug!("dropping {} as a duplicate chromaticity", c.id);
        } else {
            kept.push(c);
        }
    }
    Ok(kept)
}

/// For each target, the set member with the smallest recovery angle (ties to the smaller id).
pub fn nearest_illuminants<'a>(
    targets: &[LinearRgb<f64>],
    set: &'a [IlluminantSpec],
) -> Result<Vec<&'a IlluminantSpec>> {
    if set.is_empty() {
        return Err(Error::Empty("illuminant set"));
    }
    targets
        .iter()
        .map(|t| {
            let mut best: Option<(f64, &IlluminantSpec)> = None;
            for s in set {
                let err = recovery_error(*t, s.camera_rgb)?;
                best = match best {
                    Some((e, b)) if e < err || (e == err && b.id <= s.id) => Some((e, b)),
                    _ => Some((err, s)),
                };
            }
            Ok(best.expect("nonempty set").1)
        })
        .collect()
}

/// Formats with nine significant digits.
pub(crate) fn sig9(v: f64) -> String {
    if v.is_nan() {
        return String::from("NaN");
    }
    format!("{v:.8e}")
}

pub const ILLUM_CSV_HEADER: &str = "id,kind,temperature_K,rc,bc,eR,eG,eB";

pub fn write_illuminant_csv(path: impl AsRef<Path>, set: &[IlluminantSpec]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(ILLUM_CSV_HEADER);
    out.push('\n');
    for s in set {
        let t = s.temperature_kelvin.map(sig9).unwrap_or_default();
        let [r, g, b] = s.camera_rgb.to_array();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.id,
            s.kind.as_str(),
            t,
            sig9(s.chromaticity.rc),
            sig9(s.chromaticity.bc),
            sig9(r),
            sig9(g),
            sig9(b)
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads an illuminant CSV. Black bodies get their spectrum rebuilt when a
/// spectral `sensor` is supplied; the stored camera response is kept as-is.
pub fn read_illuminant_csv(
    path: impl AsRef<Path>,
    sensor: Option<&SensorModel>,
) -> Result<Vec<IlluminantSpec>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{other:?}")),
    })?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        if row.len() != 8 {
            return Err(Error::Parse(format!(
                "{}: expected 8 columns, got {}",
                path.display(),
                row.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            row[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{}: column {i}: {e}", path.display())))
        };
        let kind = match &row[1] {
            "grid" => IlluminantKind::Grid,
            "planckian" => IlluminantKind::Planckian,
            other => return Err(Error::Parse(format!("unknown illuminant kind {other:?}"))),
        };
        let temperature = if row[2].trim().is_empty() {
            None
        } else {
            Some(num(2)?)
        };
        let rgb = LinearRgb::new(num(5)?, num(6)?, num(7)?);
        let spd = match (temperature, sensor) {
            (Some(t), Some(s)) if s.is_spectral() => {
                let SensorKind::Spectral { grid, .. } = &s.kind else {
                    unreachable!()
                };
                Some(planck_spd(t, grid)?)
            }
            _ => None,
        };
        out.push(IlluminantSpec::from_rgb(&row[0], kind, rgb, temperature, spd)?);
    }
    Ok(out)
}

/// `rc,bc,kind` scatter points for chromaticity plots.
pub fn write_chromaticity_scatter(path: impl AsRef<Path>, set: &[IlluminantSpec]) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let io = |e| Error::io(path, e);
    writeln!(f, "rc,bc,kind").map_err(io)?;
    for s in set {
        writeln!(
            f,
            "{},{},{}",
            sig9(s.chromaticity.rc),
            sig9(s.chromaticity.bc),
            s.kind.as_str()
        )
        .map_err(io)?;
    }
    f.flush().map_err(io)
}
