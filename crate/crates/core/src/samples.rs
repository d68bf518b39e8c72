use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major `n x dim` matrix of sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(
                "data",
                format!("length {} is not a multiple of dim {dim}", data.len()),
            ));
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; n * dim],
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::invalid("rows", "no rows given"))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            crate::error::check_dim(dim, r.len())?;
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Values of coordinate `j` across all rows.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// At most `max` rows spread evenly over the matrix; `max == 0` keeps everything.
    pub fn subsample(&self, max: usize) -> SampleMatrix {
        let n = self.len();
        if n <= max || max == 0 {
            return self.clone();
        }
        let mut data = Vec::with_capacity(max * self.dim);
        for i in 0..max {
            let idx = i * n / max;
            data.extend_from_slice(self.row(idx));
        }
        SampleMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn head(&self, n: usize) -> SampleMatrix {
        let n = n.min(self.len());
        SampleMatrix {
            dim: self.dim,
            data: self.data[..n * self.dim].to_vec(),
        }
    }

    pub fn tail_from(&self, start: usize) -> SampleMatrix {
        let start = start.min(self.len());
        SampleMatrix {
            dim: self.dim,
            data: self.data[start * self.dim..].to_vec(),
        }
    }

    pub fn concat(&self, other: &SampleMatrix) -> Result<SampleMatrix> {
        crate::error::check_dim(self.dim, other.dim)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(SampleMatrix {
            dim: self.dim,
            data,
        })
    }
}
