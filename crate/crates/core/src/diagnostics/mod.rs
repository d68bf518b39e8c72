//! Sample-quality metrics for chains and particle sets.

mod autocorr;
mod mmd;
mod moments;
mod wasserstein;

pub use autocorr::{autocorrelation, ess};
pub use mmd::{mmd2, MmdEstimator};
pub use moments::{moment_trace, summary_stats};
pub use wasserstein::{
    hungarian, w1_1d, wasserstein1, wasserstein1_with, W1Mode, DEFAULT_PROJECTIONS,
    DEFAULT_SLICE_SEED, EXACT_LIMIT,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernel::median_bandwidth;
use crate::samples::SampleMatrix;

/// Pooled points used for the MMD median bandwidth.
const BANDWIDTH_POINTS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub max_lag: usize,
    /// Points (chain and reference alike) entering MMD and W1; both are
    /// thinned evenly.
    pub metric_points: usize,
    pub moment_window: usize,
    /// Fixed MMD bandwidth; `None` uses the median rule on the pooled sample.
    pub mmd_bandwidth: Option<f64>,
    pub w1_mode: W1Mode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            max_lag: 50,
            metric_points: 500,
            moment_window: 1000,
            mmd_bandwidth: None,
            w1_mode: W1Mode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_samples: usize,
    /// Biased estimate.
    pub mmd2: f64,
    pub mmd_bandwidth: f64,
    pub w1: f64,
    pub ess_per_dim: Vec<f64>,
    pub ess_mean: f64,
    /// Per-dimension autocorrelation curves, lags `0..=max_lag`.
    pub autocorr: Vec<Vec<f64>>,
    /// Across-dimension average of `autocorr`.
    pub autocorr_mean: Vec<f64>,
    pub moment_trace: Vec<f64>,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl MetricReport {
    pub fn lag1(&self) -> f64 {
        self.autocorr_mean.get(1).copied().unwrap_or(f64::NAN)
    }

    pub fn max_moment(&self) -> f64 {
        self.moment_trace.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Bandwidth for comparing `x` and `y`: median rule on the pooled points.
pub fn pooled_median_bandwidth(x: &SampleMatrix, y: &SampleMatrix) -> Result<f64> {
    let pooled = x
        .subsample(BANDWIDTH_POINTS / 2)
        .concat(&y.subsample(BANDWIDTH_POINTS / 2))?;
    let rows: Vec<&[f64]> = pooled.rows().collect();
    Ok(median_bandwidth(&rows).sigma)
}

/// All metrics of `samples` against `reference`.
pub fn evaluate(samples: &SampleMatrix, reference: &SampleMatrix, opts: &EvalOptions) -> Result<MetricReport> {
    check_dim(samples.dim(), reference.dim())?;
    let n = samples.len();
    if n < 2 || reference.len() < 2 {
        return Err(Error::invalid("samples", "need at least 2 chain and reference points"));
    }
    let k = opts.metric_points.min(n).min(reference.len()).max(1);
    let x = samples.subsample(k);
    let y = reference.subsample(k);
    let sigma = match opts.mmd_bandwidth {
        Some(s) => s,
        None => pooled_median_bandwidth(&x, &y)?,
    };
    let mmd = mmd2(&x, &y, sigma, MmdEstimator::Biased)?;
    let w1 = wasserstein1_with(&x, &y, opts.w1_mode)?;

    let max_lag = opts.max_lag.min(n - 1);
    let mut ess_per_dim = Vec::with_capacity(samples.dim());
    let mut curves = Vec::with_capacity(samples.dim());
    for j in 0..samples.dim() {
        let col = samples.column(j);
        ess_per_dim.push(ess(&col)?);
        curves.push(autocorrelation(&col, max_lag)?);
    }
    let autocorr_mean = (0..=max_lag)
        .map(|t| curves.iter().map(|c| c[t]).sum::<f64>() / curves.len() as f64)
        .collect();
    let (mean, cov) = summary_stats(samples)?;
    Ok(MetricReport {
        n_samples: n,
        mmd2: mmd,
        mmd_bandwidth: sigma,
        w1,
        ess_mean: ess_per_dim.iter().sum::<f64>() / ess_per_dim.len() as f64,
        ess_per_dim,
        autocorr: curves,
        autocorr_mean,
        moment_trace: moment_trace(samples, opts.moment_window)?,
        mean,
        cov,
    })
}
