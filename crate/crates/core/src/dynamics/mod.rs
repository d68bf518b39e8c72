//! Chain steppers and full runs.
//!
//! Self-repulsive chains follow a two-phase schedule. For `k < M·c` the update
//! is plain Langevin while the history window fills; from `k = M·c` on,
//!
//! ```text
//! theta_{k+1} = theta_k + eta [ -∇V(theta_k) + alpha g(theta_k; window_k) ] + sqrt(2 eta) e_k
//! ```
//!
//! where `window_k` is the uniform measure on `theta_{k - j c}`, `j = 1..M`.

mod general;
mod svgd;
mod trace;
mod tuning;
mod window;

pub use general::GeneralDynamics;
pub use svgd::{svgd_run, svgd_run_from};
pub use trace::{Phase, StepRecord, Trace};
pub use tuning::{auto_alpha, match_step_sizes, AlphaEstimate, StepMatch};
pub use window::HistoryWindow;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernel::BandwidthPolicy;
use crate::rng::NoiseStream;
use crate::stein::velocity_from_pairs;
use crate::targets::TargetModel;

/// Default repulsion strength.
pub const DEFAULT_ALPHA: f64 = 10.0;
/// Default number of past samples in the repulsive measure.
pub const DEFAULT_WINDOW: usize = 10;
/// Default iteration gap between referenced past samples.
pub const DEFAULT_THINNING: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub step_size: f64,
    pub alpha: f64,
    /// `M`, number of thinned past samples.
    pub window: usize,
    /// `c_eta`, iterations between consecutive referenced past samples.
    pub thinning: usize,
    pub total_steps: usize,
    pub bandwidth: BandwidthPolicy,
    pub seed: u64,
    /// Keep every n-th state in the trace (reporting only).
    pub keep_every: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-3,
            alpha: DEFAULT_ALPHA,
            window: DEFAULT_WINDOW,
            thinning: DEFAULT_THINNING,
            total_steps: 100_000,
            bandwidth: BandwidthPolicy::MedianTrick,
            seed: 0,
            keep_every: 1,
        }
    }
}

impl SamplerConfig {
    /// Length of the Langevin burn-in phase, `M·c`.
    pub fn burnin_len(&self) -> usize {
        self.window * self.thinning
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid("step_size", format!("must be > 0, got {}", self.step_size)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be >= 0, got {}", self.alpha)));
        }
        if self.window == 0 {
            return Err(Error::invalid("window", "must be positive"));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning", "must be positive"));
        }
        if self.total_steps == 0 {
            return Err(Error::invalid("total_steps", "must be positive"));
        }
        if self.keep_every == 0 {
            return Err(Error::invalid("keep_every", "must be positive"));
        }
        if let BandwidthPolicy::Fixed(s) = self.bandwidth {
            BandwidthPolicy::fixed(s)?;
        }
        Ok(())
    }
}

/// Update rule of a chain.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Langevin,
    Srld,
    /// Constant `D`/`Q` dynamics; self-repulsive when `alpha > 0`.
    General(GeneralDynamics),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Langevin => "langevin",
            Method::Srld => "srld",
            Method::General(_) => "general",
        }
    }

    fn repulsive(&self, alpha: f64) -> bool {
        !matches!(self, Method::Langevin) && alpha > 0.0
    }
}

fn check_finite(theta: &[f64]) -> Result<()> {
    if theta.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("theta", "non-finite input"))
    }
}

#[inline]
fn langevin_update(theta: &[f64], grad: &[f64], eta: f64, noise: &[f64], out: &mut [f64]) {
    let scale = (2.0 * eta).sqrt();
    for i in 0..theta.len() {
        out[i] = theta[i] - eta * grad[i] + scale * noise[i];
    }
}

#[inline]
fn srld_update(
    theta: &[f64],
    grad: &[f64],
    vel: &[f64],
    eta: f64,
    alpha: f64,
    noise: &[f64],
    out: &mut [f64],
) {
    let scale = (2.0 * eta).sqrt();
    for i in 0..theta.len() {
        out[i] = theta[i] + eta * (-grad[i] + alpha * vel[i]) + scale * noise[i];
    }
}

/// `theta - eta ∇V(theta) + sqrt(2 eta) noise`.
pub fn langevin_step(theta: &[f64], target: &TargetModel, eta: f64, noise: &[f64]) -> Result<Vec<f64>> {
    check_dim(target.dim(), theta.len())?;
    check_dim(target.dim(), noise.len())?;
    check_finite(theta)?;
    check_finite(noise)?;
    let mut grad = vec![0.0; theta.len()];
    target.grad_into(theta, &mut grad);
    let mut out = vec![0.0; theta.len()];
    langevin_update(theta, &grad, eta, noise, &mut out);
    Ok(out)
}

/// Repulsive-phase update against the thinned window.
///
/// The bandwidth is resolved from the `M` thinned past samples only.
pub fn srld_step(
    theta: &[f64],
    window: &HistoryWindow,
    target: &TargetModel,
    cfg: &SamplerConfig,
    noise: &[f64],
) -> Result<Vec<f64>> {
    check_dim(target.dim(), theta.len())?;
    check_dim(target.dim(), noise.len())?;
    check_finite(theta)?;
    if !window.is_full() {
        return Err(Error::WindowUnderfilled {
            have: window.len(),
            need: window.capacity(),
        });
    }
    if cfg.alpha == 0.0 {
        return langevin_step(theta, target, cfg.step_size, noise);
    }
    let view = window.thinned_view()?;
    let grads: Vec<Vec<f64>> = view.rows().map(|p| {
        let mut g = vec![0.0; p.len()];
        target.grad_into(p, &mut g);
        g
    }).collect();
    let sigma = cfg.bandwidth.resolve(&window.thinned_states()).sigma;
    let mut vel = vec![0.0; theta.len()];
    velocity_from_pairs(
        theta,
        view.rows().zip(grads.iter().map(Vec::as_slice)),
        view.len(),
        sigma,
        &mut vel,
    );
    let mut grad = vec![0.0; theta.len()];
    target.grad_into(theta, &mut grad);
    let mut out = vec![0.0; theta.len()];
    srld_update(theta, &grad, &vel, cfg.step_size, cfg.alpha, noise, &mut out);
    Ok(out)
}

/// One step of the general dynamics:
/// `theta - eta f(theta) + eta alpha g(theta; window) + sqrt(2 eta) sqrt(D) noise`.
///
/// The repulsive term is included only when a window is supplied and `alpha > 0`.
pub fn general_step(
    theta: &[f64],
    dynamics: &GeneralDynamics,
    target: &TargetModel,
    eta: f64,
    alpha: f64,
    window: Option<(&HistoryWindow, BandwidthPolicy)>,
    noise: &[f64],
) -> Result<Vec<f64>> {
    let d = target.dim();
    check_dim(d, theta.len())?;
    check_dim(d, noise.len())?;
    check_dim(d, dynamics.dim())?;
    check_finite(theta)?;
    let mut grad = vec![0.0; d];
    target.grad_into(theta, &mut grad);
    let mut vel = vec![0.0; d];
    let repulse = match window {
        Some((w, policy)) if alpha > 0.0 => {
            if !w.is_full() {
                return Err(Error::WindowUnderfilled {
                    have: w.len(),
                    need: w.capacity(),
                });
            }
            let view = w.thinned_view()?;
            let grads: Vec<Vec<f64>> = view
                .rows()
                .map(|p| {
                    let mut g = vec![0.0; d];
                    target.grad_into(p, &mut g);
                    g
                })
                .collect();
            let sigma = policy.resolve(&w.thinned_states()).sigma;
            velocity_from_pairs(
                theta,
                view.rows().zip(grads.iter().map(Vec::as_slice)),
                view.len(),
                sigma,
                &mut vel,
            );
            true
        }
        _ => false,
    };
    let mut out = vec![0.0; d];
    let mut drift = vec![0.0; d];
    let mut shaped = vec![0.0; d];
    dynamics.drift_into(&grad, &mut drift);
    dynamics.noise_into(noise, &mut shaped);
    general_update(theta, &drift, repulse.then_some((&vel[..], alpha)), eta, &shaped, &mut out);
    Ok(out)
}

#[inline]
fn general_update(
    theta: &[f64],
    drift: &[f64],
    repulsion: Option<(&[f64], f64)>,
    eta: f64,
    shaped_noise: &[f64],
    out: &mut [f64],
) {
    let scale = (2.0 * eta).sqrt();
    match repulsion {
        None => {
            for i in 0..theta.len() {
                out[i] = theta[i] - eta * drift[i] + scale * shaped_noise[i];
            }
        }
        Some((vel, alpha)) => {
            for i in 0..theta.len() {
                out[i] = theta[i] - eta * drift[i] + eta * alpha * vel[i] + scale * shaped_noise[i];
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs a full chain from `theta0`; deterministic in `(method, target, cfg, theta0)`.
///
/// Self-repulsive methods with `alpha > 0` require `total_steps > M·c`.
pub fn run_chain(
    method: &Method,
    target: &TargetModel,
    cfg: &SamplerConfig,
    theta0: &[f64],
) -> Result<Trace> {
    cfg.validate()?;
    let d = target.dim();
    check_dim(d, theta0.len())?;
    check_finite(theta0)?;
    if let Method::General(g) = method {
        check_dim(d, g.dim())?;
    }
    let burn = cfg.burnin_len();
    let repulsive = method.repulsive(cfg.alpha);
    if matches!(method, Method::Srld | Method::General(_)) && cfg.alpha > 0.0 && cfg.total_steps <= burn {
        return Err(Error::invalid(
            "total_steps",
            format!(
                "{} steps never leave the {burn}-step burn-in; no repulsive step would run",
                cfg.total_steps
            ),
        ));
    }

    let mut window = if repulsive {
        Some(HistoryWindow::new(d, cfg.window, cfg.thinning)?)
    } else {
        None
    };
    let mut noise = NoiseStream::new(cfg.seed, d);
    let mut theta = theta0.to_vec();
    let mut next = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut vel = vec![0.0; d];
    let mut drift = vec![0.0; d];
    let mut shaped = vec![0.0; d];
    let mut trace = Trace::new(d);
    trace.push_state(0, &theta);
    let eta = cfg.step_size;

    for k in 0..cfg.total_steps {
        target.grad_into(&theta, &mut grad);
        let e = noise.next_noise();
        let phase = if k < burn {
            Phase::Burnin
        } else if repulsive {
            Phase::Repulsive
        } else {
            Phase::Sampling
        };
        let grad_norm = norm(&grad);
        let mut bandwidth = None;
        let mut velocity_norm = 0.0;
        if phase == Phase::Repulsive {
            let w = window.as_ref().expect("repulsive chains own a window");
            let bw = cfg.bandwidth.resolve(&w.thinned_states());
            velocity_from_pairs(&theta, w.thinned_pairs(), w.count(), bw.sigma, &mut vel);
            bandwidth = Some(bw.sigma);
            velocity_norm = norm(&vel);
        }

        let drift_norm = match method {
            Method::Langevin | Method::Srld => {
                if phase == Phase::Repulsive {
                    srld_update(&theta, &grad, &vel, eta, cfg.alpha, e, &mut next);
                    for i in 0..d {
                        drift[i] = -grad[i] + cfg.alpha * vel[i];
                    }
                    norm(&drift)
                } else {
                    langevin_update(&theta, &grad, eta, e, &mut next);
                    grad_norm
                }
            }
            Method::General(g) => {
                g.drift_into(&grad, &mut drift);
                g.noise_into(e, &mut shaped);
                let rep = (phase == Phase::Repulsive).then_some((&vel[..], cfg.alpha));
                general_update(&theta, &drift, rep, eta, &shaped, &mut next);
                if phase == Phase::Repulsive {
                    for i in 0..d {
                        drift[i] -= cfg.alpha * vel[i];
                    }
                }
                norm(&drift)
            }
        };

        if !next.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { iteration: k + 1 });
        }
        trace.push_step(StepRecord {
            phase,
            bandwidth,
            grad_norm,
            velocity_norm,
            drift_norm,
        });
        if let Some(w) = window.as_mut() {
            w.push(&theta, &grad);
        }
        std::mem::swap(&mut theta, &mut next);
        if (k + 1) % cfg.keep_every == 0 {
            trace.push_state(k + 1, &theta);
        }
    }
    Ok(trace)
}

/// Runs two chains on one noise sequence and one starting point.
///
/// Both configs get `shared_seed` as their noise seed.
pub fn coupled_runs(
    target: &TargetModel,
    a: (&Method, &SamplerConfig),
    b: (&Method, &SamplerConfig),
    theta0: &[f64],
    shared_seed: u64,
) -> Result<(Trace, Trace)> {
    if a.1.total_steps != b.1.total_steps {
        return Err(Error::invalid(
            "total_steps",
            format!("coupled chains differ in length ({} vs {})", a.1.total_steps, b.1.total_steps),
        ));
    }
    let cfg_a = SamplerConfig {
        seed: shared_seed,
        ..a.1.clone()
    };
    let cfg_b = SamplerConfig {
        seed: shared_seed,
        ..b.1.clone()
    };
    Ok((
        run_chain(a.0, target, &cfg_a, theta0)?,
        run_chain(b.0, target, &cfg_b, theta0)?,
    ))
}
