//! The Stein variational velocity field
//!
//! `g(q; rho) = E_{t~rho}[ -K(t, q) ∇V(t) + ∇_t K(t, q) ]`
//!
//! over a uniformly weighted empirical measure. `∇_t K(t, q)` differentiates
//! the kernel in the measure point, which for the RBF kernel is
//! `(2/sigma)(q - t) K(t, q)`: the query is pushed away from each point.

use crate::error::{check_dim, Error, Result};
use crate::kernel::sq_dist;
use crate::samples::SampleMatrix;
use crate::targets::TargetModel;

/// Uniform empirical measure `(1/M) sum_j delta_{points[j]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: SampleMatrix,
}

impl EmpiricalMeasure {
    pub fn new(points: SampleMatrix) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Ok(Self { points })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Self::new(SampleMatrix::from_rows(rows)?)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn points(&self) -> &SampleMatrix {
        &self.points
    }
}

/// Accumulates `velocity` from `(point, ∇V(point))` pairs into `out`.
///
/// Gradients are supplied by the caller so chains can reuse them; `count`
/// is the number of pairs yielded. `out` is overwritten.
pub fn velocity_from_pairs<'a, I>(query: &[f64], pairs: I, count: usize, sigma: f64, out: &mut [f64])
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
{
    out.fill(0.0);
    let two_over_sigma = 2.0 / sigma;
    for (point, grad) in pairs {
        let k = (-sq_dist(point, query) / sigma).exp();
        for ((o, (q, t)), g) in out.iter_mut().zip(query.iter().zip(point)).zip(grad) {
            *o += k * (two_over_sigma * (q - t) - g);
        }
    }
    let inv = 1.0 / count as f64;
    for o in out.iter_mut() {
        *o *= inv;
    }
}

pub fn velocity(
    query: &[f64],
    measure: &EmpiricalMeasure,
    target: &TargetModel,
    sigma: f64,
) -> Result<Vec<f64>> {
    check_dim(target.dim(), query.len())?;
    check_dim(target.dim(), measure.dim())?;
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", format!("must be > 0, got {sigma}")));
    }
    let grads = gradients(target, measure.points());
    let mut out = vec![0.0; query.len()];
    velocity_from_pairs(
        query,
        measure.points().rows().zip(grads.rows()),
        measure.len(),
        sigma,
        &mut out,
    );
    Ok(out)
}

fn gradients(target: &TargetModel, points: &SampleMatrix) -> SampleMatrix {
    let mut grads = SampleMatrix::zeros(points.len(), points.dim());
    for (i, p) in points.rows().enumerate() {
        target.grad_into(p, grads.row_mut(i));
    }
    grads
}

/// `|g(q; measure)|` at every grid point.
pub fn residual_norms(
    target: &TargetModel,
    measure: &EmpiricalMeasure,
    grid: &[Vec<f64>],
    sigma: f64,
) -> Result<Vec<f64>> {
    check_dim(target.dim(), measure.dim())?;
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", format!("must be > 0, got {sigma}")));
    }
    let grads = gradients(target, measure.points());
    let mut v = vec![0.0; target.dim()];
    grid.iter()
        .map(|q| {
            check_dim(target.dim(), q.len())?;
            velocity_from_pairs(
                q,
                measure.points().rows().zip(grads.rows()),
                measure.len(),
                sigma,
                &mut v,
            );
            Ok(v.iter().map(|x| x * x).sum::<f64>().sqrt())
        })
        .collect()
}

/// Stein-identity check: velocity norms on `grid` against `n` exact samples.
///
/// Under the target the field vanishes, so the norms shrink like `n^{-1/2}`.
pub fn stein_identity_residual(
    target: &TargetModel,
    n: usize,
    grid: &[Vec<f64>],
    sigma: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if n < 10 {
        return Err(Error::invalid("n", format!("need at least 10 samples, got {n}")));
    }
    let samples = target.sample_exact(n, seed)?;
    residual_norms(target, &EmpiricalMeasure::new(samples)?, grid, sigma)
}

/// Regular `side x side` grid on `[lo, hi]^2`.
pub fn square_grid(side: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let step = if side > 1 { (hi - lo) / (side - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            out.push(vec![lo + i as f64 * step, lo + j as f64 * step]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{grad_rbf_arg1, rbf};
    use crate::targets::{make_target, TargetSpec};

    fn std_normal(d: usize) -> TargetModel {
        make_target(&TargetSpec::standard_gaussian(d)).unwrap()
    }

    #[test]
    fn single_point_measure_gives_negative_gradient() {
        let t = make_target(&TargetSpec::Banana2d).unwrap();
        let q = [0.7, -0.3];
        let m = EmpiricalMeasure::from_rows(&[q]).unwrap();
        let v = velocity(&q, &m, &t, 0.8).unwrap();
        let g = t.grad_potential(&q).unwrap();
        assert_eq!(v, vec![-g[0], -g[1]]);
    }

    #[test]
    fn symmetric_pair_cancels() {
        let t = std_normal(1);
        let m = EmpiricalMeasure::from_rows(&[[-0.8], [0.8]]).unwrap();
        let v = velocity(&[0.0], &m, &t, 1.3).unwrap();
        assert!(v[0].abs() < 1e-15);
    }

    #[test]
    fn repulsion_pushes_query_away() {
        let t = std_normal(1);
        let m = EmpiricalMeasure::from_rows(&[[0.0]]).unwrap();
        let v = velocity(&[1.0], &m, &t, 1.0).unwrap();
        assert!((v[0] - 2.0 * (-1f64).exp()).abs() < 1e-15);
        assert!((v[0] - 0.735_759).abs() < 1e-6);
    }

    #[test]
    fn repulsive_term_is_kernel_gradient_in_measure_point() {
        // brute-force oracle assembled from the kernel primitives
        let t = make_target(&TargetSpec::symmetric_mixture(2, 1.0)).unwrap();
        let pts = [[0.1, 0.4], [-1.0, 0.3], [2.0, -0.5]];
        let q = [0.5, 0.2];
        let sigma = 1.7;
        let mut expect = [0.0; 2];
        for p in &pts {
            let k = rbf(p, &q, sigma).unwrap();
            let gk = grad_rbf_arg1(p, &q, sigma).unwrap();
            let gv = t.grad_potential(p).unwrap();
            for i in 0..2 {
                expect[i] += (-k * gv[i] + gk[i]) / 3.0;
            }
        }
        let v = velocity(&q, &EmpiricalMeasure::from_rows(&pts).unwrap(), &t, sigma).unwrap();
        for i in 0..2 {
            assert!((v[i] - expect[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn velocity_is_linear_in_the_measure() {
        let t = make_target(&TargetSpec::Banana2d).unwrap();
        let a = t.sample_exact(7, 1).unwrap();
        let b = t.sample_exact(4, 2).unwrap();
        let q = [0.2, -0.9];
        let va = velocity(&q, &EmpiricalMeasure::new(a.clone()).unwrap(), &t, 1.1).unwrap();
        let vb = velocity(&q, &EmpiricalMeasure::new(b.clone()).unwrap(), &t, 1.1).unwrap();
        let ab = EmpiricalMeasure::new(a.concat(&b).unwrap()).unwrap();
        let vab = velocity(&q, &ab, &t, 1.1).unwrap();
        for i in 0..2 {
            let mix = (7.0 * va[i] + 4.0 * vb[i]) / 11.0;
            assert!((vab[i] - mix).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let t = std_normal(2);
        let m = EmpiricalMeasure::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(velocity(&[0.0], &m, &t, 1.0).is_err());
        assert!(velocity(&[0.0, 0.0], &m, &t, 0.0).is_err());
        let empty: [[f64; 2]; 0] = [];
        assert_eq!(EmpiricalMeasure::from_rows(&empty), Err(Error::EmptyMeasure));
        let no_sampler = std_normal(2).without_exact_sampler();
        assert!(stein_identity_residual(&no_sampler, 100, &square_grid(2, -1.0, 1.0), 1.0, 0).is_err());
    }

    #[test]
    fn point_mass_far_from_mode_is_not_a_stein_fixed_point() {
        let t = std_normal(2);
        let far = [4.0, -3.0];
        let m = EmpiricalMeasure::from_rows(&[far]).unwrap();
        let r = residual_norms(&t, &m, &[far.to_vec()], 1.0).unwrap();
        assert!((r[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn stein_residual_shrinks_with_n() {
        let t = std_normal(2);
        let grid = square_grid(5, -2.0, 2.0);
        let median = |mut v: Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        let mut small = 0.0;
        let mut large = 0.0;
        for seed in 0..4 {
            small += median(stein_identity_residual(&t, 1_000, &grid, 1.0, seed).unwrap());
            let r = stein_identity_residual(&t, 100_000, &grid, 1.0, seed).unwrap();
            assert!(r.iter().cloned().fold(0.0, f64::max) < 0.05);
            large += median(r);
        }
        // n^{-1/2} within a factor of two over two decades
        let ratio = small / large;
        assert!((5.0..=20.0).contains(&ratio), "ratio {ratio}");
    }
}
