//! Constant-coefficient members of the complete-recipe family
//! `d theta = -f(theta) dt + sqrt(2D) dB`, `f = (D + Q)∇V - Gamma`.
//!
//! With `D` and `Q` constant, `Gamma = 0`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const SYM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralDynamics {
    diffusion: DMatrix<f64>,
    curl: DMatrix<f64>,
    // D + Q, row-major
    drift_matrix: Vec<f64>,
    // sqrt(D), row-major
    noise_matrix: Vec<f64>,
    gamma: Vec<f64>,
}

impl GeneralDynamics {
    /// `diffusion` must be symmetric PSD and `curl` skew-symmetric.
    pub fn new(diffusion: DMatrix<f64>, curl: DMatrix<f64>) -> Result<Self> {
        let d = diffusion.nrows();
        if d == 0 || diffusion.ncols() != d {
            return Err(Error::invalid("diffusion", "must be a non-empty square matrix"));
        }
        if curl.shape() != (d, d) {
            return Err(Error::invalid(
                "curl",
                format!("shape {:?} does not match diffusion {d}x{d}", curl.shape()),
            ));
        }
        if diffusion.iter().chain(curl.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("diffusion", "entries must be finite"));
        }
        let scale = diffusion.amax().max(1.0);
        if (&diffusion - diffusion.transpose()).amax() > SYM_TOL * scale {
            return Err(Error::invalid("diffusion", "must be symmetric"));
        }
        if (&curl + curl.transpose()).amax() > SYM_TOL * curl.amax().max(1.0) {
            return Err(Error::invalid("curl", "must be skew-symmetric"));
        }

        let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || diffusion[(i, j)] == 0.0));
        let root = if diagonal {
            let mut r = DMatrix::zeros(d, d);
            for i in 0..d {
                let v = diffusion[(i, i)];
                if v < 0.0 {
                    return Err(not_psd(v));
                }
                r[(i, i)] = v.sqrt();
            }
            r
        } else {
            let eig = SymmetricEigen::new(diffusion.clone());
            let min = eig.eigenvalues.min();
            if min < -SYM_TOL * scale {
                return Err(not_psd(min));
            }
            let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
            &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
        };

        let sum = &diffusion + &curl;
        Ok(Self {
            drift_matrix: row_major(&sum),
            noise_matrix: row_major(&root),
            gamma: vec![0.0; d],
            diffusion,
            curl,
        })
    }

    /// `D = I`, `Q = 0`: plain Langevin.
    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), DMatrix::zeros(dim, dim))
            .expect("identity diffusion is valid")
    }

    /// `D = I`, `Q = [[0, s], [-s, 0]]` on each consecutive coordinate pair.
    pub fn rotational(dim: usize, strength: f64) -> Result<Self> {
        let mut q = DMatrix::zeros(dim, dim);
        let mut i = 0;
        while i + 1 < dim {
            q[(i, i + 1)] = strength;
            q[(i + 1, i)] = -strength;
            i += 2;
        }
        Self::new(DMatrix::identity(dim, dim), q)
    }

    pub fn dim(&self) -> usize {
        self.diffusion.nrows()
    }

    pub fn diffusion(&self) -> &DMatrix<f64> {
        &self.diffusion
    }

    pub fn curl(&self) -> &DMatrix<f64> {
        &self.curl
    }

    /// Symmetric PSD square root of `D`.
    pub fn diffusion_root(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.noise_matrix)
    }

    /// `f = (D + Q) grad - Gamma`.
    pub(crate) fn drift_into(&self, grad: &[f64], out: &mut [f64]) {
        mat_vec(&self.drift_matrix, grad, out);
        for (o, g) in out.iter_mut().zip(&self.gamma) {
            *o -= g;
        }
    }

    /// `sqrt(D) noise`.
    pub(crate) fn noise_into(&self, noise: &[f64], out: &mut [f64]) {
        mat_vec(&self.noise_matrix, noise, out);
    }
}

fn not_psd(eig: f64) -> Error {
    Error::invalid(
        "diffusion",
        format!("must be positive semi-definite (eigenvalue {eig})"),
    )
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn mat_vec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let d = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[i * d..(i + 1) * d]
            .iter()
            .zip(v)
            .map(|(a, b)| a * b)
            .sum();
    }
}
