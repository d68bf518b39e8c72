//! RBF kernel `K(a, b) = exp(-|a - b|^2 / sigma)` and the median bandwidth rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// How the kernel bandwidth `sigma` is chosen.
///
/// Textual form (configs, CLI): `fixed:<sigma>` or `median`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BandwidthPolicy {
    Fixed(f64),
    #[default]
    MedianTrick,
}

impl BandwidthPolicy {
    pub fn fixed(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(BandwidthPolicy::Fixed(sigma))
        } else {
            Err(Error::invalid("bandwidth", format!("fixed sigma must be > 0, got {sigma}")))
        }
    }

    /// Bandwidth for kernels acting on `points`.
    pub fn resolve<R: AsRef<[f64]>>(&self, points: &[R]) -> Bandwidth {
        match *self {
            BandwidthPolicy::Fixed(sigma) => Bandwidth {
                sigma,
                degenerate: false,
            },
            BandwidthPolicy::MedianTrick => median_bandwidth(points),
        }
    }
}

impl fmt::Display for BandwidthPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthPolicy::Fixed(s) => write!(f, "fixed:{s}"),
            BandwidthPolicy::MedianTrick => f.write_str("median"),
        }
    }
}

impl FromStr for BandwidthPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "median" {
            return Ok(BandwidthPolicy::MedianTrick);
        }
        match s.strip_prefix("fixed:") {
            Some(v) => {
                let sigma: f64 = v.trim().parse().map_err(|_| {
                    Error::invalid("bandwidth", format!("cannot parse `{v}` as a number"))
                })?;
                BandwidthPolicy::fixed(sigma)
            }
            None => Err(Error::invalid(
                "bandwidth",
                format!("expected `median` or `fixed:<value>`, got `{s}`"),
            )),
        }
    }
}

impl TryFrom<String> for BandwidthPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BandwidthPolicy> for String {
    fn from(p: BandwidthPolicy) -> String {
        p.to_string()
    }
}

/// A resolved bandwidth. `degenerate` marks the `sigma = 1` fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth {
    pub sigma: f64,
    pub degenerate: bool,
}

impl Bandwidth {
    const FALLBACK: Bandwidth = Bandwidth {
        sigma: 1.0,
        degenerate: true,
    };
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("sigma", format!("must be > 0, got {sigma}")))
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn rbf_unchecked(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    (-sq_dist(a, b) / sigma).exp()
}

pub fn rbf(a: &[f64], b: &[f64], sigma: f64) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    check_sigma(sigma)?;
    Ok(rbf_unchecked(a, b, sigma))
}

/// Gradient of `K(a, b)` with respect to `a`: `-(2/sigma)(a - b) K(a, b)`.
pub fn grad_rbf_arg1(a: &[f64], b: &[f64], sigma: f64) -> Result<Vec<f64>> {
    check_dim(a.len(), b.len())?;
    check_sigma(sigma)?;
    let k = rbf_unchecked(a, b, sigma);
    let c = -2.0 / sigma * k;
    Ok(a.iter().zip(b).map(|(x, y)| c * (x - y)).collect())
}

/// `sigma = med^2 / log M`, `med` the median pairwise Euclidean distance.
///
/// Falls back to `sigma = 1` (flagged) when `M <= 1` or `med == 0`.
/// For an even number of pairs the two central distances are averaged.
pub fn median_bandwidth<R: AsRef<[f64]>>(points: &[R]) -> Bandwidth {
    let m = points.len();
    if m <= 1 {
        return Bandwidth::FALLBACK;
    }
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        let a = points[i].as_ref();
        for b in &points[i + 1..] {
            dists.push(sq_dist(a, b.as_ref()).sqrt());
        }
    }
    let med = median_in_place(&mut dists);
    let sigma = med * med / (m as f64).ln();
    if med > 0.0 && sigma.is_finite() {
        Bandwidth {
            sigma,
            degenerate: false,
        }
    } else {
        Bandwidth::FALLBACK
    }
}

fn median_in_place(xs: &mut [f64]) -> f64 {
    let n = xs.len();
    let mid = n / 2;
    let (_, &mut upper, _) = xs.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = xs[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}
