use crate::error::{check_dim, Error, Result};
use crate::kernel::BandwidthPolicy;
use crate::rng;
use crate::samples::SampleMatrix;
use crate::stein::velocity_from_pairs;
use crate::targets::TargetModel;

/// SVGD from `n_particles` standard-normal initial particles drawn from `seed`.
pub fn svgd_run(
    target: &TargetModel,
    n_particles: usize,
    steps: usize,
    eta: f64,
    bandwidth: BandwidthPolicy,
    seed: u64,
) -> Result<SampleMatrix> {
    if n_particles == 0 {
        return Err(Error::invalid("n_particles", "must be at least 1"));
    }
    let mut init = SampleMatrix::zeros(n_particles, target.dim());
    let mut r = rng::stream(seed);
    for i in 0..n_particles {
        rng::fill_standard_normal(&mut r, init.row_mut(i));
    }
    svgd_run_from(target, init, steps, eta, bandwidth)
}

/// Parallel SVGD updates; every particle moves along the velocity field of
/// the current particle set (itself included).
pub fn svgd_run_from(
    target: &TargetModel,
    mut particles: SampleMatrix,
    steps: usize,
    eta: f64,
    bandwidth: BandwidthPolicy,
) -> Result<SampleMatrix> {
    check_dim(target.dim(), particles.dim())?;
    if particles.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid("eta", format!("must be >= 0, got {eta}")));
    }
    let n = particles.len();
    let d = particles.dim();
    let mut grads = SampleMatrix::zeros(n, d);
    let mut next = particles.clone();
    let mut vel = vec![0.0; d];
    for iter in 0..steps {
        for i in 0..n {
            target.grad_into(particles.row(i), grads.row_mut(i));
        }
        let rows: Vec<&[f64]> = particles.rows().collect();
        let sigma = bandwidth.resolve(&rows).sigma;
        for i in 0..n {
            let q = particles.row(i);
            velocity_from_pairs(q, particles.rows().zip(grads.rows()), n, sigma, &mut vel);
            for ((o, x), v) in next.row_mut(i).iter_mut().zip(q).zip(&vel) {
                *o = x + eta * v;
            }
        }
        if !next.as_slice().iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { iteration: iter + 1 });
        }
        std::mem::swap(&mut particles, &mut next);
    }
    Ok(particles)
}
