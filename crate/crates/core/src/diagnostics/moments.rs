use crate::error::{Error, Result};
use crate::samples::SampleMatrix;

/// Sliding-window means of `|theta|^2` over consecutive rows.
///
/// Produces `n - window + 1` values; a series shorter than the window yields
/// its overall mean.
pub fn moment_trace(states: &SampleMatrix, window: usize) -> Result<Vec<f64>> {
    if states.is_empty() {
        return Err(Error::invalid("trace", "no states"));
    }
    if window == 0 {
        return Err(Error::invalid("window", "must be positive"));
    }
    let sq: Vec<f64> = states.rows().map(|r| r.iter().map(|x| x * x).sum()).collect();
    let w = window.min(sq.len());
    let mut out = Vec::with_capacity(sq.len() - w + 1);
    let mut acc: f64 = sq[..w].iter().sum();
    out.push(acc / w as f64);
    for i in w..sq.len() {
        acc += sq[i] - sq[i - w];
        out.push(acc / w as f64);
    }
    Ok(out)
}

/// Empirical mean and unbiased covariance (row-major `d x d`).
pub fn summary_stats(x: &SampleMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("samples", "need at least 2 rows"));
    }
    let d = x.dim();
    let mut mean = vec![0.0; d];
    for r in x.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![vec![0.0; d]; d];
    for r in x.rows() {
        for i in 0..d {
            let di = r[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }
    Ok((mean, cov))
}
