//! Angular error metrics and dataset-level summary statistics.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::color::LinearRgb;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    #[default]
    Recovery,
    Reproduction,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Recovery => "recovery",
            ErrorKind::Reproduction => "reproduction",
        })
    }
}

impl FromStr for ErrorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recovery" => Ok(ErrorKind::Recovery),
            "reproduction" => Ok(ErrorKind::Reproduction),
            other => Err(Error::InvalidParameter(format!("unknown error kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularError<T> {
    pub degrees: T,
    pub kind: ErrorKind,
}

fn acos_degrees<T: Scalar>(cos: T) -> T {
    cos.max(-T::one()).min(T::one()).acos().to_degrees()
}

/// Angle between estimate and ground truth, in degrees.
pub fn recovery_error<T: Scalar>(est: LinearRgb<T>, gt: LinearRgb<T>) -> Result<T> {
    let (ne, ng) = (est.norm(), gt.norm());
    if !(ne > T::zero()) || !(ng > T::zero()) {
        return Err(Error::DegenerateColor);
    }
    Ok(acos_degrees(est.dot(gt) / (ne * ng)))
}

/// Angle between the white surface corrected by `est` and ideal white, in degrees.
pub fn reproduction_error<T: Scalar>(est: LinearRgb<T>, gt_white: LinearRgb<T>) -> Result<T> {
    for (i, c) in est.to_array().iter().enumerate() {
        if !(*c > T::zero()) {
            return Err(Error::ZeroChannel(i));
        }
    }
    if gt_white.is_zero() {
        return Err(Error::DegenerateColor);
    }
    let w = LinearRgb::new(gt_white.r / est.r, gt_white.g / est.g, gt_white.b / est.b);
    let nw = w.norm();
    if !(nw > T::zero()) || !nw.is_finite() {
        return Err(Error::DegenerateColor);
    }
    Ok(acos_degrees(w.sum() / (nw * T::lit(3.0).sqrt())))
}

/// Supremum of the reproduction error, reached as one estimate channel goes to zero.
pub fn reproduction_error_limit<T: Scalar>() -> T {
    (T::one() / T::lit(3.0).sqrt()).acos().to_degrees()
}

pub fn angular_error<T: Scalar>(kind: ErrorKind, est: LinearRgb<T>, gt: LinearRgb<T>) -> Result<T> {
    match kind {
        ErrorKind::Recovery => recovery_error(est, gt),
        ErrorKind::Reproduction => reproduction_error(est, gt),
    }
}

/// The six summary columns used to compare estimators over a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary<T> {
    pub mean: T,
    pub median: T,
    pub trimean: T,
    pub best25_mean: T,
    pub worst25_mean: T,
    pub geo_average: T,
}

pub const SUMMARY_COLUMNS: [&str; 6] = ["mean", "median", "trimean", "best25", "worst25", "avg"];

/// Zero statistics are lifted to this before the geometric mean.
pub const GEO_GUARD: f64 = 1e-12;

impl<T: Scalar> ErrorSummary<T> {
    pub fn to_array(&self) -> [T; 6] {
        [
            self.mean,
            self.median,
            self.trimean,
            self.best25_mean,
            self.worst25_mean,
            self.geo_average,
        ]
    }
}

/// Order statistic at fractional position `pos` by linear interpolation.
fn interpolated<T: Scalar>(sorted: &[T], pos: f64) -> T {
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Summary statistics over a list of angular errors.
///
/// Quartiles interpolate order statistics at `q·(N−1)`; the best/worst
/// 25% means use the `⌈N/4⌉` lowest/highest values.
pub fn summarize<T: Scalar>(errors: &[T]) -> Result<ErrorSummary<T>> {
    if errors.is_empty() {
        return Err(Error::Empty("error list"));
    }
    if errors.iter().any(|e| !e.is_finite() || *e < T::zero()) {
        return Err(Error::InvalidParameter(
            "angular errors must be finite and nonnegative".into(),
        ));
    }
    let mut s = errors.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = s.len();
    let last = (n - 1) as f64;
    let nf = T::from_usize_lossy(n);
    let mean = s.iter().fold(T::zero(), |a, &b| a + b) / nf;
    let q1 = interpolated(&s, 0.25 * last);
    let median = interpolated(&s, 0.5 * last);
    let q3 = interpolated(&s, 0.75 * last);
    let trimean = (q1 + median + median + q3) / T::lit(4.0);
    let quarter = n.div_ceil(4);
    let qf = T::from_usize_lossy(quarter);
    let best25_mean = s[..quarter].iter().fold(T::zero(), |a, &b| a + b) / qf;
    let worst25_mean = s[n - quarter..].iter().fold(T::zero(), |a, &b| a + b) / qf;
    let guard = T::lit(GEO_GUARD);
    let five = [mean, median, trimean, best25_mean, worst25_mean];
    let log_sum = five.iter().fold(T::zero(), |a, &v| a + v.max(guard).ln());
    let geo_average = (log_sum / T::lit(5.0)).exp();
    let lo = five.iter().copied().fold(T::infinity(), T::min);
    let hi = five.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(ErrorSummary {
        mean,
        median,
        trimean,
        best25_mean,
        worst25_mean,
        // exp/ln roundoff can step a hair outside the bracketing statistics
        geo_average: geo_average.max(lo).min(hi),
    })
}

/// One estimate row as emitted by the `estimate` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub image: String,
    pub method: String,
    pub params: String,
    #[serde(rename = "eR")]
    pub e_r: f64,
    #[serde(rename = "eG")]
    pub e_g: f64,
    #[serde(rename = "eB")]
    pub e_b: f64,
}

impl EstimateRow {
    pub fn rgb(&self) -> LinearRgb<f64> {
        LinearRgb::new(self.e_r, self.e_g, self.e_b)
    }

    /// Method label including its parameters.
    pub fn label(&self) -> String {
        if self.params.is_empty() {
            self.method.clone()
        } else {
            format!("{}({})", self.method, self.params)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub count: usize,
    pub summary: ErrorSummary<f64>,
}

/// Joins ground truth and estimates on image id and summarizes per method.
///
/// Every method present in `estimates` must cover every ground-truth image.
pub fn score(
    ground_truth: &[(String, LinearRgb<f64>)],
    estimates: &[EstimateRow],
    kind: ErrorKind,
) -> Result<Vec<MethodSummary>> {
    if ground_truth.is_empty() {
        return Err(Error::Empty("ground truth"));
    }
    let mut by_method: BTreeMap<String, HashMap<&str, LinearRgb<f64>>> = BTreeMap::new();
    for row in estimates {
        by_method
            .entry(row.label())
            .or_default()
            .insert(row.image.as_str(), row.rgb());
    }
    if by_method.is_empty() {
        return Err(Error::MissingEstimates(
            ground_truth.iter().map(|(id, _)| id.clone()).collect(),
        ));
    }
    let mut gaps = Vec::new();
    for (method, rows) in &by_method {
        for (id, _) in ground_truth {
            if !rows.contains_key(id.as_str()) {
                gaps.push(format!("{id} [{method}]"));
            }
        }
    }
    if !gaps.is_empty() {
        return Err(Error::MissingEstimates(gaps));
    }
    by_method
        .into_iter()
        .map(|(method, rows)| {
            let errs = ground_truth
                .iter()
                .map(|(id, gt)| image_error(kind, rows[id.as_str()], *gt))
                .collect::<Result<Vec<_>>>()?;
            Ok(MethodSummary {
                method,
                count: errs.len(),
                summary: summarize(&errs)?,
            })
        })
        .collect()
}

/// Per-image error; a reproduction estimate with an empty channel scores the limiting angle.
pub fn image_error(kind: ErrorKind, est: LinearRgb<f64>, gt: LinearRgb<f64>) -> Result<f64> {
    match angular_error(kind, est, gt) {
        Err(Error::ZeroChannel(_)) => Ok(reproduction_error_limit()),
        other => other,
    }
}

pub fn read_estimates_csv(path: impl AsRef<Path>) -> Result<Vec<EstimateRow>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_open_err(path, e))?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_estimates_csv(path: impl AsRef<Path>, rows: &[EstimateRow]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("image,method,params,eR,eG,eB\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.image,
            r.method,
            csv_quote(&r.params),
            crate::illum::sig9(r.e_r),
            crate::illum::sig9(r.e_g),
            crate::illum::sig9(r.e_b)
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub(crate) fn csv_open_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

/// Writes `method,count,mean,median,trimean,best25,worst25,avg`.
pub fn write_summary_csv(path: impl AsRef<Path>, rows: &[MethodSummary], kind: ErrorKind) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("error,method,count,{}\n", SUMMARY_COLUMNS.join(","));
    for r in rows {
        out.push_str(&format!("{kind},{},{}", csv_quote(&r.method), r.count));
        for v in r.summary.to_array() {
            out.push_str(&format!(",{v:.6}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(r: f64, g: f64, b: f64) -> LinearRgb<f64> {
        LinearRgb::new(r, g, b)
    }

    #[test]
    fn recovery_examples() {
        assert_eq!(recovery_error(v(1.0, 1.0, 1.0), v(2.0, 2.0, 2.0)).unwrap(), 0.0);
        assert!((recovery_error(v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)).unwrap() - 90.0).abs() < 1e-12);
        let oracle = (2.0 / 6f64.sqrt()).acos().to_degrees();
        let got = recovery_error(v(1.0, 1.0, 1.0), v(1.0, 1.0, 0.0)).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 35.264).abs() < 1e-3);
        assert!(recovery_error(v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn reproduction_examples() {
        assert_eq!(
            reproduction_error(v(0.3, 0.5, 0.2), v(0.3, 0.5, 0.2)).unwrap(),
            0.0
        );
        let oracle = (4.0 / (6f64.sqrt() * 3f64.sqrt())).acos().to_degrees();
        let got = reproduction_error(v(1.0, 1.0, 1.0), v(2.0, 1.0, 1.0)).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 19.471).abs() < 1e-3);
        let scaled = reproduction_error(v(3.0, 3.0, 3.0), v(2.0, 1.0, 1.0)).unwrap();
        assert!((scaled - got).abs() < 1e-12);
        assert!(matches!(
            reproduction_error(v(1.0, 0.0, 1.0), v(1.0, 1.0, 1.0)),
            Err(Error::ZeroChannel(1))
        ));
    }

    #[test]
    fn reproduction_limit() {
        let near = reproduction_error(v(1.0, 1.0, 1e-12), v(1.0, 1.0, 1.0)).unwrap();
        assert!((near - reproduction_error_limit::<f64>()).abs() < 1e-6);
    }

    #[test]
    fn stability_contrast() {
        for d in [[1.0, 1.0, 1.0], [2.0, 1.0, 0.5], [0.2, 0.9, 3.0]] {
            let w = LinearRgb::from_array(d);
            assert!(reproduction_error(w, w).unwrap() < 1e-6);
        }
        let fixed = v(1.0, 1.0, 1.0);
        let a = recovery_error(fixed, v(2.0, 1.0, 0.5)).unwrap();
        let b = recovery_error(fixed, v(0.2, 0.9, 3.0)).unwrap();
        assert!((a - b).abs() > 1.0);
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&[2.0_f64, 2.0, 2.0, 2.0]).unwrap();
        for x in s.to_array() {
            assert!((x - 2.0).abs() < 1e-12);
        }
        let s = summarize(&[4.0, 0.0, 3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.median, 2.0);
        assert_eq!(s.trimean, 2.0);
        assert_eq!(s.best25_mean, 0.5);
        assert_eq!(s.worst25_mean, 3.5);
        let s = summarize(&[7.5_f64]).unwrap();
        for x in s.to_array() {
            assert!((x - 7.5).abs() < 1e-12);
        }
        assert!(summarize::<f64>(&[]).is_err());
        assert!(summarize(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn even_median_is_midpoint() {
        let s = summarize(&[1.0, 2.0, 3.0, 10.0]).unwrap();
        assert_eq!(s.median, 2.5);
    }

    #[test]
    fn geo_average_guards_zero() {
        let s = summarize(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.geo_average, 0.0);
        let s = summarize(&[0.0, 0.0, 0.0, 8.0]).unwrap();
        assert!(s.geo_average >= 0.0 && s.geo_average <= 8.0);
    }

    fn gt(ids: &[&str]) -> Vec<(String, LinearRgb<f64>)> {
        ids.iter().map(|s| (s.to_string(), v(1.0, 1.0, 1.0))).collect()
    }

    fn row(image: &str, method: &str, rgb: [f64; 3]) -> EstimateRow {
        EstimateRow {
            image: image.into(),
            method: method.into(),
            params: String::new(),
            e_r: rgb[0],
            e_g: rgb[1],
            e_b: rgb[2],
        }
    }

    #[test]
    fn score_perfect_and_gaps() {
        let truth = gt(&["a", "b"]);
        let rows = vec![row("a", "gw", [2.0, 2.0, 2.0]), row("b", "gw", [1.0, 1.0, 1.0])];
        let out = score(&truth, &rows, ErrorKind::Recovery).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].summary.to_array().iter().all(|x| *x < 1e-6));

        let err = score(&truth, &rows[..1], ErrorKind::Recovery).unwrap_err();
        match err {
            Error::MissingEstimates(g) => assert_eq!(g, vec!["b [gw]".to_string()]),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn score_matches_summarize_row() {
        // five images whose recovery errors are exactly 0..4 degrees
        let ids = ["i0", "i1", "i2", "i3", "i4"];
        let truth: Vec<_> = ids.iter().map(|s| (s.to_string(), v(1.0, 0.0, 0.0))).collect();
        let rows: Vec<_> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| {
                let a = (i as f64).to_radians();
                row(id, "m", [a.cos(), a.sin(), 0.0])
            })
            .collect();
        let out = score(&truth, &rows, ErrorKind::Recovery).unwrap();
        let s = out[0].summary;
        assert!((s.median - 2.0).abs() < 1e-9);
        assert!((s.trimean - 2.0).abs() < 1e-9);
        assert!((s.best25_mean - 0.5).abs() < 1e-9);
        assert!((s.worst25_mean - 3.5).abs() < 1e-9);
    }

    #[test]
    fn estimates_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        let mut r = row("img_0", "shades_of_gray", [0.5, 0.6, 0.7]);
        r.params = "p=2".into();
        write_estimates_csv(&p, &[r.clone()]).unwrap();
        let back = read_estimates_csv(&p).unwrap();
        assert_eq!(back[0].image, r.image);
        assert_eq!(back[0].params, "p=2");
        assert!((back[0].e_g - 0.6).abs() < 1e-9);
        assert_eq!(back[0].label(), "shades_of_gray(p=2)");
    }

    proptest! {
        #[test]
        fn recovery_symmetric_and_scale_invariant(
            a in prop::array::uniform3(0.01f64..10.0),
            b in prop::array::uniform3(0.01f64..10.0),
            s in 0.01f64..100.0,
        ) {
            let (a, b) = (LinearRgb::from_array(a), LinearRgb::from_array(b));
            let e = recovery_error(a, b).unwrap();
            prop_assert!((e - recovery_error(b, a).unwrap()).abs() < 1e-9);
            prop_assert!((e - recovery_error(a * s, b).unwrap()).abs() < 1e-6);
            prop_assert!((0.0..=180.0).contains(&e));
            let r = reproduction_error(a, b).unwrap();
            prop_assert!((r - reproduction_error(a * s, b * s).unwrap()).abs() < 1e-6);
            prop_assert!(r <= reproduction_error_limit::<f64>() + 1e-9);
        }

        #[test]
        fn summary_ordering(errors in prop::collection::vec(0.0f64..60.0, 1..200)) {
            let s = summarize(&errors).unwrap();
            prop_assert!(s.best25_mean <= s.median + 1e-12);
            prop_assert!(s.median <= s.worst25_mean + 1e-12);
            let five = [s.mean, s.median, s.trimean, s.best25_mean, s.worst25_mean];
            let lo = five.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = five.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= s.geo_average && s.geo_average <= hi);
        }
    }
}
