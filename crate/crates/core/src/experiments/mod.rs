//! Experiment runners: the color-reduction sweep and the Cartesian benchmark.

mod benchmark;
mod corpus;
mod reduction;

pub use benchmark::{
    cartesian_benchmark, diagonal_table_builder, write_table1_csv, CartesianRunSpec, ConfigResult,
    IllumOption, SceneOption, SensorOption, TableBuilder,
};
pub use corpus::{
    fine_texture_corpus, load_corpus, patch_corpus, synthetic_corpus, write_corpus, Corpus, CorpusImage,
    CorpusKind,
};
pub use reduction::{
    distinct_colors, reduce_image, reduction_sweep, write_fig6_csv, ReductionSweepResult, SweepRow, MAX_K,
};

use crate::error::{Error, Result};
use crate::estimators::EstimatorConfig;
use crate::image::LinearImage;
use crate::metrics::{image_error, ErrorKind};
use crate::Rgb;

/// Angular error of one method on one image.
///
/// When a scene gives the estimator nothing to work with (no signal, no
/// edges) the estimate falls back to neutral gray.
pub(crate) fn method_error(
    method: &EstimatorConfig,
    img: &LinearImage<f64>,
    gt: Rgb,
    kind: ErrorKind,
) -> Result<f64> {
    let est = match method.estimate(img) {
        Ok(est) => est,
        Err(Error::DegenerateScene(_)) => Rgb::splat(1.0 / 3f64.sqrt()),
        Err(e) => return Err(e),
    };
    image_error(kind, est, gt)
}

pub(crate) fn median(values: &[f64]) -> Result<f64> {
    Ok(crate::metrics::summarize(values)?.median)
}
