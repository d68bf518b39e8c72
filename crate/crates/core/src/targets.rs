//! Sampling targets `rho(theta) ∝ exp(-V(theta))` with analytic gradients.
//!
//! Potentials are unnormalized. The additive constant convention per variant:
//!
//! * `banana2d`: `V = t1^4/10 + (4(t2 + 1.2) - t1^2)^2 / 2`, zero at `(0, -1.2)`.
//! * `isotropic_gaussian`: `V = |t|^2 / (2 var)`, zero at the mean.
//! * `gauss_mixture`: `V = -log sum_i w_i exp(-|t - mu_i|^2 / (2 var))`
//!   (component normalizers dropped).
//! * `bayes_linreg`: `V = a/2 |t|^2 + b/2 |y - X t|^2` with prior precision `a`
//!   and noise precision `b`.
//!
//! Only gradients enter the dynamics, so the constants are inert.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng;
use crate::samples::SampleMatrix;

/// Declarative description of a target, as found in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    Banana2d,
    GaussMixture {
        means: Vec<Vec<f64>>,
        weights: Vec<f64>,
        variance: f64,
    },
    IsotropicGaussian {
        dim: usize,
        variance: f64,
    },
    BayesLinreg {
        design: Vec<Vec<f64>>,
        responses: Vec<f64>,
        prior_precision: f64,
        noise_precision: f64,
    },
}

impl TargetSpec {
    /// Equal-weight, unit-variance mixture with modes at `±offset·1` in `dim` dimensions.
    pub fn symmetric_mixture(dim: usize, offset: f64) -> Self {
        TargetSpec::GaussMixture {
            means: vec![vec![offset; dim], vec![-offset; dim]],
            weights: vec![0.5, 0.5],
            variance: 1.0,
        }
    }

    pub fn standard_gaussian(dim: usize) -> Self {
        TargetSpec::IsotropicGaussian { dim, variance: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TargetSpec::Banana2d => Ok(()),
            TargetSpec::GaussMixture {
                means,
                weights,
                variance,
            } => {
                positive("variance", *variance)?;
                if means.is_empty() {
                    return Err(Error::invalid("means", "at least one component required"));
                }
                if weights.len() != means.len() {
                    return Err(Error::invalid(
                        "weights",
                        format!("{} weights for {} means", weights.len(), means.len()),
                    ));
                }
                let dim = means[0].len();
                if dim == 0 {
                    return Err(Error::invalid("means", "components must have dim >= 1"));
                }
                if let Some(bad) = means.iter().find(|m| m.len() != dim) {
                    return Err(Error::invalid(
                        "means",
                        format!("mixed dimensions {dim} and {}", bad.len()),
                    ));
                }
                if means.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("means", "entries must be finite"));
                }
                if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
                    return Err(Error::invalid("weights", "must be strictly positive"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(
                        "weights",
                        format!("must sum to 1, got {total}"),
                    ));
                }
                Ok(())
            }
            TargetSpec::IsotropicGaussian { dim, variance } => {
                if *dim == 0 {
                    return Err(Error::invalid("dim", "must be positive"));
                }
                positive("variance", *variance)
            }
            TargetSpec::BayesLinreg {
                design,
                responses,
                prior_precision,
                noise_precision,
            } => {
                positive("prior_precision", *prior_precision)?;
                positive("noise_precision", *noise_precision)?;
                if design.len() != responses.len() {
                    return Err(Error::invalid(
                        "design",
                        format!(
                            "{} rows but {} responses",
                            design.len(),
                            responses.len()
                        ),
                    ));
                }
                let p = design.first().map_or(0, Vec::len);
                if p == 0 {
                    return Err(Error::invalid("design", "needs at least one row and column"));
                }
                if design.iter().any(|r| r.len() != p) {
                    return Err(Error::invalid("design", "ragged rows"));
                }
                Ok(())
            }
        }
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be positive and finite, got {v}")))
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Banana,
    Gaussian {
        variance: f64,
    },
    Mixture {
        means: Vec<Vec<f64>>,
        log_weights: Vec<f64>,
        weights: Vec<f64>,
        variance: f64,
    },
    Linreg {
        design: DMatrix<f64>,
        responses: DVector<f64>,
        prior_precision: f64,
        noise_precision: f64,
        precision: DMatrix<f64>,
        // b X^T y
        shift: DVector<f64>,
        // L^{-T} for precision = L L^T
        sample_factor: DMatrix<f64>,
    },
}

/// A differentiable potential on `R^dim` with optional exact sampler and moments.
///
/// Immutable once built; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct TargetModel {
    name: &'static str,
    dim: usize,
    kind: Kind,
    mean: Option<DVector<f64>>,
    cov: Option<DMatrix<f64>>,
    exact: bool,
}

// Moments of the density ∝ exp(-x^4/10).
const GAMMA_3_4: f64 = 1.225_416_702_465_177_6;
const GAMMA_1_4: f64 = 3.625_609_908_221_908;
const BANANA_PROPOSAL_SD: f64 = 1.2;

fn banana_x1_second_moment() -> f64 {
    10f64.sqrt() * GAMMA_3_4 / GAMMA_1_4
}

pub fn make_target(spec: &TargetSpec) -> Result<TargetModel> {
    spec.validate()?;
    let model = match spec {
        TargetSpec::Banana2d => {
            let m2 = banana_x1_second_moment();
            // E[x^4] = 10 Γ(5/4)/Γ(1/4) = 2.5
            let m4 = 2.5;
            TargetModel {
                name: "banana2d",
                dim: 2,
                kind: Kind::Banana,
                mean: Some(DVector::from_vec(vec![0.0, m2 / 4.0 - 1.2])),
                cov: Some(DMatrix::from_diagonal(&DVector::from_vec(vec![
                    m2,
                    (m4 - m2 * m2 + 1.0) / 16.0,
                ]))),
                exact: true,
            }
        }
        TargetSpec::IsotropicGaussian { dim, variance } => TargetModel {
            name: "isotropic_gaussian",
            dim: *dim,
            kind: Kind::Gaussian {
                variance: *variance,
            },
            mean: Some(DVector::zeros(*dim)),
            cov: Some(DMatrix::identity(*dim, *dim) * *variance),
            exact: true,
        },
        TargetSpec::GaussMixture {
            means,
            weights,
            variance,
        } => {
            let dim = means[0].len();
            let mut mean = DVector::zeros(dim);
            let mut second = DMatrix::identity(dim, dim) * *variance;
            for (m, &w) in means.iter().zip(weights) {
                let mv = DVector::from_column_slice(m);
                mean += &mv * w;
                second += &mv * mv.transpose() * w;
            }
            let cov = second - &mean * mean.transpose();
            TargetModel {
                name: "gauss_mixture",
                dim,
                kind: Kind::Mixture {
                    means: means.clone(),
                    log_weights: weights.iter().map(|w| w.ln()).collect(),
                    weights: weights.clone(),
                    variance: *variance,
                },
                mean: Some(mean),
                cov: Some(cov),
                exact: true,
            }
        }
        TargetSpec::BayesLinreg {
            design,
            responses,
            prior_precision,
            noise_precision,
        } => {
            let n = design.len();
            let p = design[0].len();
            let x = DMatrix::from_fn(n, p, |i, j| design[i][j]);
            let y = DVector::from_column_slice(responses);
            let precision = DMatrix::identity(p, p) * *prior_precision
                + x.transpose() * &x * *noise_precision;
            let shift = x.transpose() * &y * *noise_precision;
            let chol = precision
                .clone()
                .cholesky()
                .ok_or_else(|| Error::invalid("design", "posterior precision not positive definite"))?;
            let mean = chol.solve(&shift);
            let cov = chol.inverse();
            let l_t = chol.l().transpose();
            let sample_factor = l_t
                .try_inverse()
                .ok_or_else(|| Error::invalid("design", "singular Cholesky factor"))?;
            TargetModel {
                name: "bayes_linreg",
                dim: p,
                kind: Kind::Linreg {
                    design: x,
                    responses: y,
                    prior_precision: *prior_precision,
                    noise_precision: *noise_precision,
                    precision,
                    shift,
                    sample_factor,
                },
                mean: Some(mean),
                cov: Some(cov),
                exact: true,
            }
        }
    };
    Ok(model)
}

impl TargetModel {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn potential(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim, theta.len())?;
        Ok(self.potential_unchecked(theta))
    }

    pub fn grad_potential(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, theta.len())?;
        let mut out = vec![0.0; self.dim];
        self.grad_into(theta, &mut out);
        Ok(out)
    }

    /// `V(theta)` without the dimension check.
    pub fn potential_unchecked(&self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.dim);
        match &self.kind {
            Kind::Banana => {
                let (t1, t2) = (theta[0], theta[1]);
                let r = 4.0 * (t2 + 1.2) - t1 * t1;
                t1.powi(4) / 10.0 + r * r / 2.0
            }
            Kind::Gaussian { variance } => sq_norm(theta) / (2.0 * variance),
            Kind::Mixture {
                means,
                log_weights,
                variance,
                ..
            } => {
                let logits: Vec<f64> = means
                    .iter()
                    .zip(log_weights)
                    .map(|(m, lw)| lw - sq_dist(theta, m) / (2.0 * variance))
                    .collect();
                -log_sum_exp(&logits)
            }
            Kind::Linreg {
                design,
                responses,
                prior_precision,
                noise_precision,
                ..
            } => {
                let t = DVector::from_column_slice(theta);
                let resid = responses - design * &t;
                0.5 * prior_precision * t.norm_squared()
                    + 0.5 * noise_precision * resid.norm_squared()
            }
        }
    }

    /// Writes `∇V(theta)` into `out` without the dimension check.
    pub fn grad_into(&self, theta: &[f64], out: &mut [f64]) {
        debug_assert_eq!(theta.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        match &self.kind {
            Kind::Banana => {
                let (t1, t2) = (theta[0], theta[1]);
                let r = 4.0 * (t2 + 1.2) - t1 * t1;
                out[0] = 0.4 * t1 * t1 * t1 - 2.0 * t1 * r;
                out[1] = 4.0 * r;
            }
            Kind::Gaussian { variance } => {
                for (o, t) in out.iter_mut().zip(theta) {
                    *o = t / variance;
                }
            }
            Kind::Mixture {
                means,
                log_weights,
                variance,
                ..
            } => {
                // responsibilities via log-sum-exp; stable far from all modes
                let logits: Vec<f64> = means
                    .iter()
                    .zip(log_weights)
                    .map(|(m, lw)| lw - sq_dist(theta, m) / (2.0 * variance))
                    .collect();
                let lse = log_sum_exp(&logits);
                out.fill(0.0);
                for (m, l) in means.iter().zip(&logits) {
                    let r = (l - lse).exp();
                    for ((o, t), mu) in out.iter_mut().zip(theta).zip(m) {
                        *o += r * (t - mu);
                    }
                }
                for o in out.iter_mut() {
                    *o /= variance;
                }
            }
            Kind::Linreg {
                precision, shift, ..
            } => {
                let t = DVector::from_column_slice(theta);
                let g = precision * t - shift;
                out.copy_from_slice(g.as_slice());
            }
        }
    }

    pub fn has_exact_sampler(&self) -> bool {
        self.exact
    }

    /// Drops the exact sampler, e.g. to treat the target as one whose law is
    /// only reachable through long reference chains.
    pub fn without_exact_sampler(mut self) -> Self {
        self.exact = false;
        self
    }

    pub fn analytic_mean(&self) -> Option<&DVector<f64>> {
        self.mean.as_ref()
    }

    pub fn analytic_cov(&self) -> Option<&DMatrix<f64>> {
        self.cov.as_ref()
    }

    /// Trace of the analytic covariance, i.e. `E|theta - mean|^2`.
    pub fn cov_trace(&self) -> Option<f64> {
        self.cov.as_ref().map(|c| c.trace())
    }

    /// `E|theta|^2` under the target.
    pub fn second_moment(&self) -> Option<f64> {
        Some(self.cov_trace()? + self.mean.as_ref()?.norm_squared())
    }

    /// Draws `n` exact samples; deterministic in `seed`.
    pub fn sample_exact(&self, n: usize, seed: u64) -> Result<SampleMatrix> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if !self.has_exact_sampler() {
            return Err(Error::NoExactSampler(self.name));
        }
        let mut rng = rng::stream(seed);
        let mut out = SampleMatrix::zeros(n, self.dim);
        for i in 0..n {
            self.draw_into(&mut rng, out.row_mut(i));
        }
        Ok(out)
    }

    fn draw_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.kind {
            Kind::Banana => {
                let s = BANANA_PROPOSAL_SD;
                // envelope: exp(-x^4/10) <= exp(0.625/s^4) exp(-x^2/(2 s^2))
                let log_bound = 0.625 / s.powi(4);
                let t1 = loop {
                    let z: f64 = StandardNormal.sample(rng);
                    let x = s * z;
                    let log_ratio = -x.powi(4) / 10.0 + x * x / (2.0 * s * s) - log_bound;
                    let u: f64 = rng.random();
                    if u.ln() < log_ratio {
                        break x;
                    }
                };
                let u: f64 = StandardNormal.sample(rng);
                out[0] = t1;
                out[1] = (t1 * t1 + u) / 4.0 - 1.2;
            }
            Kind::Gaussian { variance } => {
                let sd = variance.sqrt();
                for o in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *o = sd * z;
                }
            }
            Kind::Mixture {
                means,
                weights,
                variance,
                ..
            } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = means.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                let sd = variance.sqrt();
                for (o, mu) in out.iter_mut().zip(&means[pick]) {
                    let z: f64 = StandardNormal.sample(rng);
                    *o = mu + sd * z;
                }
            }
            Kind::Linreg { sample_factor, .. } => {
                let z = DVector::from_fn(self.dim, |_, _| StandardNormal.sample(rng));
                let x = self.mean.as_ref().expect("linreg has a mean") + sample_factor * z;
                out.copy_from_slice(x.as_slice());
            }
        }
    }
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_diff(t: &TargetModel, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; theta.len()];
        let mut p = theta.to_vec();
        for i in 0..theta.len() {
            let h = 1e-5 * (1.0 + theta[i].abs());
            p[i] = theta[i] + h;
            let up = t.potential_unchecked(&p);
            p[i] = theta[i] - h;
            let down = t.potential_unchecked(&p);
            p[i] = theta[i];
            g[i] = (up - down) / (2.0 * h);
        }
        g
    }

    fn linreg_spec() -> TargetSpec {
        TargetSpec::BayesLinreg {
            design: vec![
                vec![1.0, 0.5, -0.2],
                vec![0.3, -1.0, 0.8],
                vec![-0.7, 0.2, 1.5],
                vec![1.1, 1.3, 0.1],
                vec![0.0, -0.4, -0.9],
            ],
            responses: vec![0.8, -0.3, 1.2, 2.0, -0.5],
            prior_precision: 1.0,
            noise_precision: 2.0,
        }
    }

    fn all_specs() -> Vec<TargetSpec> {
        vec![
            TargetSpec::Banana2d,
            TargetSpec::symmetric_mixture(2, 1.0),
            TargetSpec::symmetric_mixture(20, (2.0f64 / 20.0).sqrt()),
            TargetSpec::IsotropicGaussian {
                dim: 100,
                variance: 0.5,
            },
            linreg_spec(),
        ]
    }

    #[test]
    fn banana_vanishes_at_reference_point() {
        let t = make_target(&TargetSpec::Banana2d).unwrap();
        assert_eq!(t.potential(&[0.0, -1.2]).unwrap(), 0.0);
        let g = t.grad_potential(&[0.0, -1.2]).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn mixture_gradient_zero_at_origin() {
        let t = make_target(&TargetSpec::symmetric_mixture(2, 1.0)).unwrap();
        assert_eq!(t.grad_potential(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn mixture_potential_matches_log_sum_exp() {
        let t = make_target(&TargetSpec::symmetric_mixture(1, 1.0)).unwrap();
        // brute force: -log(0.5 e^{-1/2} + 0.5 e^{-1/2})
        let expected = -(0.5 * (-0.5f64).exp() + 0.5 * (-0.5f64).exp()).ln();
        assert!((t.potential(&[0.0]).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gaussian_gradients() {
        let t = make_target(&TargetSpec::IsotropicGaussian {
            dim: 100,
            variance: 0.5,
        })
        .unwrap();
        let mut e1 = vec![0.0; 100];
        e1[0] = 1.0;
        let g = t.grad_potential(&e1).unwrap();
        assert_eq!(g[0], 2.0);
        assert!(g[1..].iter().all(|&v| v == 0.0));

        let t = make_target(&TargetSpec::standard_gaussian(3)).unwrap();
        assert_eq!(t.grad_potential(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let t = make_target(&TargetSpec::standard_gaussian(2)).unwrap();
        assert_eq!(t.potential(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let t = make_target(&TargetSpec::standard_gaussian(3)).unwrap();
        assert_eq!(
            t.potential(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 1
            })
        );
        assert!(t.grad_potential(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn invalid_specs_name_the_field() {
        let bad = [
            (
                TargetSpec::IsotropicGaussian {
                    dim: 2,
                    variance: 0.0,
                },
                "variance",
            ),
            (
                TargetSpec::GaussMixture {
                    means: vec![vec![1.0], vec![-1.0]],
                    weights: vec![0.5, 0.4],
                    variance: 1.0,
                },
                "weights",
            ),
            (
                TargetSpec::GaussMixture {
                    means: vec![vec![1.0], vec![-1.0]],
                    weights: vec![1.0],
                    variance: 1.0,
                },
                "weights",
            ),
            (
                TargetSpec::GaussMixture {
                    means: vec![vec![1.0], vec![-1.0]],
                    weights: vec![0.5, 0.5],
                    variance: -2.0,
                },
                "variance",
            ),
            (
                TargetSpec::BayesLinreg {
                    design: vec![vec![1.0]],
                    responses: vec![1.0, 2.0],
                    prior_precision: 1.0,
                    noise_precision: 1.0,
                },
                "design",
            ),
        ];
        for (spec, field) in bad {
            match make_target(&spec) {
                Err(Error::InvalidParameter { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected error on {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = rng::stream(11);
        for spec in all_specs() {
            let t = make_target(&spec).unwrap();
            for _ in 0..100 {
                // random direction, radius up to 5
                let mut theta: Vec<f64> = (0..t.dim())
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                let norm = sq_norm(&theta).sqrt();
                let r: f64 = 5.0 * rng.random::<f64>();
                theta.iter_mut().for_each(|x| *x *= r / norm);
                let g = t.grad_potential(&theta).unwrap();
                let fd = central_diff(&t, &theta);
                let err = sq_dist(&g, &fd).sqrt() / (1.0 + sq_norm(&g).sqrt());
                assert!(err < 1e-5, "{}: err {err}", t.name());
                assert!(t.potential_unchecked(&theta).is_finite());
            }
        }
    }

    #[test]
    fn mixture_gradient_stable_far_out() {
        let t = make_target(&TargetSpec::symmetric_mixture(2, 1.0)).unwrap();
        let g = t.grad_potential(&[80.0, 80.0]).unwrap();
        // dominated by the +1 component: (theta - 1)
        assert!((g[0] - 79.0).abs() < 1e-9 && (g[1] - 79.0).abs() < 1e-9);
        assert!(t.potential(&[1e3, -1e3]).unwrap().is_finite());
    }

    #[test]
    fn gaussian_is_dissipative() {
        let var = 0.5;
        let t = make_target(&TargetSpec::IsotropicGaussian { dim: 5, variance: var }).unwrap();
        let mut rng = rng::stream(5);
        for _ in 0..100 {
            let theta: Vec<f64> = (0..5).map(|_| 3.0 * rng.random::<f64>() - 1.5).collect();
            let g = t.grad_potential(&theta).unwrap();
            let inner: f64 = theta.iter().zip(&g).map(|(a, b)| -a * b).sum();
            let bound = -sq_norm(&theta) / var;
            assert!(inner <= bound + 1e-12);
        }
    }

    #[test]
    fn missing_sampler_is_an_error() {
        let t = make_target(&TargetSpec::Banana2d).unwrap().without_exact_sampler();
        assert_eq!(t.sample_exact(10, 0), Err(Error::NoExactSampler("banana2d")));
    }

    #[test]
    fn exact_samples_are_deterministic() {
        let t = make_target(&TargetSpec::standard_gaussian(2)).unwrap();
        assert_eq!(t.sample_exact(50, 9).unwrap(), t.sample_exact(50, 9).unwrap());
        assert_ne!(t.sample_exact(50, 9).unwrap(), t.sample_exact(50, 10).unwrap());
        assert!(t.sample_exact(0, 1).is_err());
    }

    fn empirical_mean(x: &SampleMatrix) -> Vec<f64> {
        let mut m = vec![0.0; x.dim()];
        for r in x.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        m.iter().map(|v| v / x.len() as f64).collect()
    }

    #[test]
    fn exact_sampler_means_match_analytic() {
        let n = 100_000;
        for spec in all_specs() {
            let t = make_target(&spec).unwrap();
            let x = t.sample_exact(n, 2024).unwrap();
            let m = empirical_mean(&x);
            let mean = t.analytic_mean().unwrap();
            let cov = t.analytic_cov().unwrap();
            for j in 0..t.dim() {
                let tol = 3.0 * cov[(j, j)].sqrt() / (n as f64).sqrt();
                // 3 sigma per coordinate; allow a couple of excursions in d = 100
                let tol = if t.dim() > 10 { tol * 1.5 } else { tol };
                assert!(
                    (m[j] - mean[j]).abs() < tol,
                    "{} coord {j}: {} vs {}",
                    t.name(),
                    m[j],
                    mean[j]
                );
            }
        }
    }

    #[test]
    fn banana_sampler_matches_second_moments() {
        let t = make_target(&TargetSpec::Banana2d).unwrap();
        let x = t.sample_exact(200_000, 3).unwrap();
        let cov = t.analytic_cov().unwrap();
        let mean = t.analytic_mean().unwrap();
        let n = x.len() as f64;
        let v0 = x.rows().map(|r| r[0] * r[0]).sum::<f64>() / n;
        let v1 = x.rows().map(|r| (r[1] - mean[1]).powi(2)).sum::<f64>() / n;
        assert!((v0 / cov[(0, 0)] - 1.0).abs() < 0.02);
        assert!((v1 / cov[(1, 1)] - 1.0).abs() < 0.03);
    }

    #[test]
    fn simple_exact_sampler_examples() {
        let g = make_target(&TargetSpec::standard_gaussian(2)).unwrap();
        let m = empirical_mean(&g.sample_exact(100_000, 1).unwrap());
        assert!(m.iter().all(|v| v.abs() < 0.02));
        let mix = make_target(&TargetSpec::symmetric_mixture(1, 1.0)).unwrap();
        let m = empirical_mean(&mix.sample_exact(100_000, 1).unwrap());
        assert!(m[0].abs() < 0.02);
    }

    #[test]
    fn linreg_posterior_moments_from_samples() {
        let t = make_target(&linreg_spec()).unwrap();
        let x = t.sample_exact(100_000, 77).unwrap();
        let p = t.dim();
        let m = empirical_mean(&x);
        let mut c = DMatrix::zeros(p, p);
        for r in x.rows() {
            for i in 0..p {
                for j in 0..p {
                    c[(i, j)] += (r[i] - m[i]) * (r[j] - m[j]);
                }
            }
        }
        c /= (x.len() - 1) as f64;
        let mean = t.analytic_mean().unwrap();
        let cov = t.analytic_cov().unwrap();
        let mean_err = (DVector::from_vec(m) - mean).norm() / mean.norm();
        let cov_err = (c - cov).norm() / cov.norm();
        assert!(mean_err < 0.02, "mean rel err {mean_err}");
        assert!(cov_err < 0.02, "cov rel err {cov_err}");
        // the posterior mean is the stationary point of V
        let g = t.grad_potential(mean.as_slice()).unwrap();
        assert!(sq_norm(&g).sqrt() < 1e-10);
    }

    #[test]
    fn mixture_moments() {
        let t = make_target(&TargetSpec::symmetric_mixture(2, 1.0)).unwrap();
        let cov = t.analytic_cov().unwrap();
        assert!((cov[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((cov[(0, 1)] - 1.0).abs() < 1e-12);
        assert_eq!(t.second_moment().unwrap(), 4.0);
    }
}
