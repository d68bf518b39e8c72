//! Wasserstein-1 distance between empirical measures.
//!
//! * `d = 1`: exact, from the sorted samples.
//! * `d >= 2`, equal counts up to [`EXACT_LIMIT`]: exact optimal assignment
//!   on the Euclidean cost matrix (Hungarian algorithm, `O(n^3)`).
//! * otherwise: sliced approximation, the mean 1-D distance over seeded
//!   random unit directions.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::rng;
use crate::samples::SampleMatrix;

pub const EXACT_LIMIT: usize = 512;
pub const DEFAULT_PROJECTIONS: usize = 128;
pub const DEFAULT_SLICE_SEED: u64 = 0x5EED_511C;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum W1Mode {
    /// Exact when possible (see module docs), sliced otherwise.
    Auto,
    Exact,
    Sliced { projections: usize, seed: u64 },
}

pub fn wasserstein1(x: &SampleMatrix, y: &SampleMatrix) -> Result<f64> {
    wasserstein1_with(x, y, W1Mode::Auto)
}

pub fn wasserstein1_with(x: &SampleMatrix, y: &SampleMatrix, mode: W1Mode) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("samples", "both samples must be non-empty"));
    }
    let sliced = |projections, seed| sliced_w1(x, y, projections, seed);
    match mode {
        W1Mode::Sliced { projections, seed } => sliced(projections, seed),
        _ if x.dim() == 1 => Ok(w1_1d(&x.column(0), &y.column(0))),
        W1Mode::Exact => exact_assignment(x, y),
        W1Mode::Auto => {
            if x.len().max(y.len()) <= EXACT_LIMIT {
                exact_assignment(x, y)
            } else {
                sliced(DEFAULT_PROJECTIONS, DEFAULT_SLICE_SEED)
            }
        }
    }
}

/// Exact 1-D distance `∫ |F(t) - G(t)| dt`; reduces to the mean absolute
/// difference of sorted samples when counts agree.
pub fn w1_1d(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    if a.len() == b.len() {
        return a.iter().zip(&b).map(|(p, q)| (p - q).abs()).sum::<f64>() / a.len() as f64;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    let mut prev = a[0].min(b[0]);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        let f = i as f64 / na;
        let g = j as f64 / nb;
        total += (f - g).abs() * (next - prev);
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        prev = next;
    }
    total
}

fn exact_assignment(x: &SampleMatrix, y: &SampleMatrix) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(
            "samples",
            format!(
                "exact W1 needs equal counts (got {} and {}); use sliced mode",
                x.len(),
                y.len()
            ),
        ));
    }
    let n = x.len();
    let cost: Vec<f64> = x
        .rows()
        .flat_map(|a| {
            y.rows().map(move |b| {
                a.iter()
                    .zip(b)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt()
            })
        })
        .collect();
    let assignment = hungarian(&cost, n);
    let total: f64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    Ok(total / n as f64)
}

/// Minimum-cost perfect matching on a square `n x n` cost matrix (row-major).
/// Returns the column assigned to each row.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    // potentials u (rows), v (cols); 1-based with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

fn sliced_w1(x: &SampleMatrix, y: &SampleMatrix, projections: usize, seed: u64) -> Result<f64> {
    if projections == 0 {
        return Err(Error::invalid("projections", "must be positive"));
    }
    let d = x.dim();
    let mut r = rng::stream(seed);
    let mut dir = vec![0.0; d];
    let mut total = 0.0;
    for _ in 0..projections {
        let norm = loop {
            for v in dir.iter_mut() {
                *v = StandardNormal.sample(&mut r);
            }
            let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                break n;
            }
        };
        dir.iter_mut().for_each(|v| *v /= norm);
        let project = |m: &SampleMatrix| -> Vec<f64> {
            m.rows()
                .map(|row| row.iter().zip(&dir).map(|(a, b)| a * b).sum())
                .collect()
        };
        total += w1_1d(&project(x), &project(y));
    }
    Ok(total / projections as f64)
}
