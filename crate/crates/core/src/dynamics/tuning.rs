//! Hyperparameter heuristics: balancing `alpha` from the burn-in and matching
//! Langevin step sizes to a self-repulsive chain's drift magnitude.

use crate::error::{check_dim, Error, Result};
use crate::kernel::BandwidthPolicy;
use crate::stein::velocity_from_pairs;
use crate::targets::TargetModel;

use super::{run_chain, Method, Phase, SamplerConfig, Trace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEstimate {
    pub alpha: f64,
    /// Set when every gradient vanished (chain parked at a stationary point).
    pub degenerate: bool,
    pub grad_norm_sum: f64,
    pub velocity_norm_sum: f64,
}

pub(crate) fn balance_ratio(grad_sum: f64, vel_sum: f64) -> Result<AlphaEstimate> {
    if grad_sum == 0.0 {
        return Ok(AlphaEstimate {
            alpha: 0.0,
            degenerate: true,
            grad_norm_sum: grad_sum,
            velocity_norm_sum: vel_sum,
        });
    }
    if !(vel_sum > 0.0) {
        return Err(Error::Degenerate(
            "all repulsive velocities vanished during burn-in; set a fixed alpha instead".into(),
        ));
    }
    Ok(AlphaEstimate {
        alpha: grad_sum / vel_sum,
        degenerate: false,
        grad_norm_sum: grad_sum,
        velocity_norm_sum: vel_sum,
    })
}

/// `alpha ≈ sum_k |∇V(theta_k)| / sum_k |g(theta_k; window_k)|` over the burn-in.
///
/// `burnin` must keep every state (`keep_every = 1`) for at least
/// `window·thinning` iterations. The window at iteration `k` holds the
/// reachable past samples `theta_{k - j c}` with `k - j c >= 0`; iterations
/// with no past sample yet (`k < c`) are skipped in both sums.
pub fn auto_alpha(
    burnin: &Trace,
    target: &TargetModel,
    window: usize,
    thinning: usize,
    bandwidth: BandwidthPolicy,
) -> Result<AlphaEstimate> {
    check_dim(target.dim(), burnin.dim())?;
    if window == 0 || thinning == 0 {
        return Err(Error::invalid("window", "window and thinning must be positive"));
    }
    let need = window * thinning;
    let iters = burnin.iters();
    let contiguous = iters.iter().enumerate().all(|(i, &k)| i == k);
    if !contiguous || iters.len() <= need {
        return Err(Error::invalid(
            "burnin",
            format!("need every state for iterations 0..={need}"),
        ));
    }
    let d = target.dim();
    let mut grad = vec![0.0; d];
    let mut vel = vec![0.0; d];
    let mut past_grads: Vec<Vec<f64>> = Vec::with_capacity(need + 1);
    for k in 0..=need {
        target.grad_into(burnin.state(k), &mut grad);
        past_grads.push(grad.clone());
    }
    let (mut grad_sum, mut vel_sum) = (0.0, 0.0);
    for k in thinning..=need {
        let idx: Vec<usize> = (1..=window)
            .filter(|j| j * thinning <= k)
            .map(|j| k - j * thinning)
            .collect();
        let pts: Vec<&[f64]> = idx.iter().map(|&i| burnin.state(i)).collect();
        let sigma = bandwidth.resolve(&pts).sigma;
        let pairs = idx.iter().map(|&i| (burnin.state(i), past_grads[i].as_slice()));
        let theta = burnin.state(k);
        velocity_from_pairs(theta, pairs, idx.len(), sigma, &mut vel);
        grad_sum += norm(&past_grads[k]);
        vel_sum += norm(&vel);
    }
    balance_ratio(grad_sum, vel_sum)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMatch {
    /// Step size for the Langevin baseline.
    pub langevin_step: f64,
    /// `mean |-∇V + alpha g| / mean |∇V|` over the pilot's post-burn-in steps.
    pub ratio: f64,
}

pub(crate) fn scale_step(eta: f64, drift_mean: f64, grad_mean: f64) -> Result<StepMatch> {
    if !(drift_mean > 0.0 && grad_mean > 0.0) {
        return Err(Error::Degenerate(format!(
            "pilot drift norms degenerate (drift {drift_mean}, gradient {grad_mean})"
        )));
    }
    let ratio = drift_mean / grad_mean;
    Ok(StepMatch {
        langevin_step: eta * ratio,
        ratio,
    })
}

/// Runs a self-repulsive pilot of `pilot_steps` iterations and returns the
/// Langevin step size giving the same mean drift length per step.
pub fn match_step_sizes(
    target: &TargetModel,
    cfg: &SamplerConfig,
    pilot_steps: usize,
    theta0: &[f64],
) -> Result<StepMatch> {
    if pilot_steps < 1000 {
        return Err(Error::invalid("pilot_steps", "need at least 1000 pilot steps"));
    }
    if pilot_steps <= cfg.burnin_len() {
        return Err(Error::invalid(
            "pilot_steps",
            format!("must exceed the burn-in length {}", cfg.burnin_len()),
        ));
    }
    let pilot_cfg = SamplerConfig {
        total_steps: pilot_steps,
        keep_every: pilot_steps,
        ..cfg.clone()
    };
    let trace = run_chain(&Method::Srld, target, &pilot_cfg, theta0)?;
    let post: Vec<_> = trace
        .steps()
        .iter()
        .filter(|s| s.phase != Phase::Burnin)
        .collect();
    let n = post.len() as f64;
    let drift_mean = post.iter().map(|s| s.drift_norm).sum::<f64>() / n;
    let grad_mean = post.iter().map(|s| s.grad_norm).sum::<f64>() / n;
    scale_step(cfg.step_size, drift_mean, grad_mean)
}
