use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernel::rbf_unchecked;
use crate::samples::SampleMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MmdEstimator {
    /// V-statistic over all pairs, diagonals included; never negative.
    Biased,
    /// U-statistic with the within-sample diagonals removed.
    Unbiased,
}

/// Squared maximum mean discrepancy under `K(a, b) = exp(-|a - b|^2 / sigma)`.
pub fn mmd2(x: &SampleMatrix, y: &SampleMatrix, sigma: f64, estimator: MmdEstimator) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", format!("must be > 0, got {sigma}")));
    }
    let (n, m) = (x.len(), y.len());
    let min = match estimator {
        MmdEstimator::Biased => 1,
        MmdEstimator::Unbiased => 2,
    };
    if n < min || m < min {
        return Err(Error::invalid(
            "samples",
            format!("need at least {min} points per sample, got {n} and {m}"),
        ));
    }
    let xx = within(x, sigma);
    let yy = within(y, sigma);
    let mut xy = 0.0;
    for a in x.rows() {
        for b in y.rows() {
            xy += rbf_unchecked(a, b, sigma);
        }
    }
    let (n, m) = (n as f64, m as f64);
    let value = match estimator {
        // diagonal terms contribute exactly 1 each
        MmdEstimator::Biased => (2.0 * xx + n) / (n * n) + (2.0 * yy + m) / (m * m) - 2.0 * xy / (n * m),
        MmdEstimator::Unbiased => 2.0 * xx / (n * (n - 1.0)) + 2.0 * yy / (m * (m - 1.0)) - 2.0 * xy / (n * m),
    };
    Ok(match estimator {
        MmdEstimator::Biased => value.max(0.0),
        MmdEstimator::Unbiased => value,
    })
}

/// Sum of `K` over strictly-upper pairs.
fn within(x: &SampleMatrix, sigma: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        let a = x.row(i);
        for j in i + 1..x.len() {
            s += rbf_unchecked(a, x.row(j), sigma);
        }
    }
    s
}
