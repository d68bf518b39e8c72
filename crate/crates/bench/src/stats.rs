//! Paired-comparison statistics.

/// Median of the finite values; `None` when there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// `P(X <= k)` for `X ~ Binomial(n, 1/2)`.
pub fn binomial_half_cdf(k: usize, n: usize) -> f64 {
    if k >= n {
        return 1.0;
    }
    // pmf in log space; 0.5^n underflows past n ~ 1074
    let mut log_pmf = -(n as f64) * std::f64::consts::LN_2;
    let mut total = 0.0;
    for i in 0..=k {
        total += log_pmf.exp();
        log_pmf += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    total.min(1.0)
}

/// Outcome of a two-sided sign test on paired differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    pub positive: usize,
    pub negative: usize,
    /// Exact zeros and non-finite differences, dropped from the test.
    pub ties: usize,
    pub p_value: f64,
}

/// Two-sided exact sign test; ties are discarded, no differences gives `p = 1`.
pub fn sign_test(diffs: &[f64]) -> SignTest {
    let positive = diffs.iter().filter(|&&d| d > 0.0).count();
    let negative = diffs.iter().filter(|&&d| d < 0.0).count();
    let ties = diffs.len() - positive - negative;
    let n = positive + negative;
    let k = positive.min(negative);
    // the lower tail through the central count is at least 1/2
    let p_value = if 2 * k + 1 >= n {
        1.0
    } else {
        (2.0 * binomial_half_cdf(k, n)).min(1.0)
    };
    SignTest {
        positive,
        negative,
        ties,
        p_value,
    }
}
