use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

fn centered(series: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let c: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let ss: f64 = c.iter().map(|x| x * x).sum();
    if !(ss > 0.0) || !ss.is_finite() {
        return Err(Error::ZeroVariance);
    }
    Ok((c, ss))
}

/// Empirical autocorrelation `rho_t`, `t = 0..=max_lag`, normalized by the
/// full-series mean and variance so that `rho_0 = 1`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() <= max_lag {
        return Err(Error::invalid(
            "max_lag",
            format!("series of length {} is too short for lag {max_lag}", series.len()),
        ));
    }
    let (c, ss) = centered(series)?;
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for t in 1..=max_lag {
        let s: f64 = c[..c.len() - t].iter().zip(&c[t..]).map(|(a, b)| a * b).sum();
        out.push(s / ss);
    }
    Ok(out)
}

/// All-lag autocorrelation via zero-padded FFT.
fn autocorrelation_fft(series: &[f64]) -> Result<Vec<f64>> {
    let n = series.len();
    let (c, _) = centered(series)?;
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = c
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let zero = buf[0].re;
    Ok(buf[..n].iter().map(|z| z.re / zero).collect())
}

/// Effective sample size `n / (1 + 2 sum rho_t)`.
///
/// The sum runs over consecutive lag pairs `rho_{2m-1} + rho_{2m}`,
/// `m = 1, 2, ...`, stopping at the first pair whose sum is not positive
/// (Geyer's initial positive sequence). Hence `ESS <= n`.
pub fn ess(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::invalid("series", "need at least 2 values"));
    }
    let rho = autocorrelation_fft(series)?;
    Ok(n as f64 / (1.0 + 2.0 * positive_pair_sum(&rho)))
}

fn positive_pair_sum(rho: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut t = 1;
    while t + 1 < rho.len() {
        let pair = rho[t] + rho[t + 1];
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        t += 2;
    }
    sum
}
