//! One function per scenario, each returning the table written to
//! `<output>/<scenario>.csv`.
//!
//! Random streams are keyed by `(seed, group << 32 | replicate)`, where the
//! group is usually the index into `mu_grid`. Work items run in parallel and
//! are gathered in index order, so outputs do not depend on the thread count.

mod figures;
mod image;
mod noise;
mod rates;

use advlin_core::learn::{train_svm, SvmConfig};
use advlin_core::simulate::{sample_stream, LabeledDataset};
use advlin_core::{GaussianMixtureSpec, LinearClassifier, RateReport};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Scenario};
use crate::error::CliResult;
use crate::table::Table;

pub use image::{figure1_mixture, render_vector};

pub fn run_scenario(cfg: &ExperimentConfig) -> CliResult<Table> {
    match cfg.scenario {
        Scenario::Rates => rates::rates(cfg),
        Scenario::Sweep => rates::sweep(cfg),
        Scenario::Figure2 => figures::figure2(cfg),
        Scenario::Figure3 => figures::figure3(cfg),
        Scenario::Figure4 => figures::figure4(cfg),
        Scenario::LpNoise => noise::lp_noise(cfg),
        Scenario::Image => image::figure1(cfg),
    }
}

/// Offset separating evaluation streams from training streams.
pub(crate) const EVAL_STREAM: usize = 1 << 20;

pub(crate) fn stream_key(group: usize, replicate: usize) -> u64 {
    ((group as u64) << 32) | replicate as u64
}

pub(crate) struct TrainedReplicate {
    pub clf: LinearClassifier,
    pub test: LabeledDataset,
    pub converged: bool,
}

/// Draws `n_train + n_test` points, trains the SVM on the first `n_train`
/// and keeps the rest for evaluation.
pub(crate) fn train_replicate(
    cfg: &ExperimentConfig,
    mix: &GaussianMixtureSpec,
    group: usize,
    replicate: usize,
) -> CliResult<TrainedReplicate> {
    let key = stream_key(group, replicate);
    let data = sample_stream(mix, cfg.n_train + cfg.n_test, cfg.seed, key)?;
    let (train, test) = data.split_at(cfg.n_train)?;
    let svm = SvmConfig {
        seed: cfg.svm.seed ^ key,
        ..cfg.svm
    };
    let fit = train_svm(&train, &svm)?;
    Ok(TrainedReplicate {
        clf: fit.classifier,
        test,
        converged: fit.converged,
    })
}

/// Runs `f(0..n)` in parallel, keeping index order.
pub(crate) fn par_map<T: Send>(
    n: usize,
    f: impl Fn(usize) -> CliResult<T> + Sync + Send,
) -> CliResult<Vec<T>> {
    (0..n).into_par_iter().map(f).collect()
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

pub(crate) fn mean_se(values: impl IntoIterator<Item = f64>) -> MeanSe {
    let v: Vec<f64> = values.into_iter().collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let se = if v.len() > 1 {
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    MeanSe { mean, se }
}

/// `(p_m, p_err, p_s_err)` of a report; `p_s_err` is NaN when absent.
pub(crate) fn error_triple(r: &RateReport) -> [f64; 3] {
    [
        r.p_m.value(),
        r.p_err.value(),
        r.p_s_err.map_or(f64::NAN, |p| p.value()),
    ]
}
