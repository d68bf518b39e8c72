use crate::error::{check_dim, Error, Result};
use crate::samples::SampleMatrix;

/// Ring buffer holding the last `M·c` chain states (and their potential
/// gradients), from which the `M` thinned past samples
/// `theta_{k - j c}`, `j = 1..M`, are read.
///
/// "Now" is the iteration whose state has not been pushed yet: after pushing
/// `theta_0 .. theta_{k-1}`, [`HistoryWindow::thinned_view`] refers to `k`.
#[derive(Debug, Clone)]
pub struct HistoryWindow {
    dim: usize,
    count: usize,
    thinning: usize,
    states: Vec<f64>,
    grads: Vec<f64>,
    head: usize,
    len: usize,
}

impl HistoryWindow {
    pub fn new(dim: usize, count: usize, thinning: usize) -> Result<Self> {
        if dim == 0 || count == 0 || thinning == 0 {
            return Err(Error::invalid(
                "window",
                "dimension, window size and thinning must all be positive",
            ));
        }
        let cap = count * thinning;
        Ok(Self {
            dim,
            count,
            thinning,
            states: vec![0.0; cap * dim],
            grads: vec![0.0; cap * dim],
            head: 0,
            len: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.count * self.thinning
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_full(&self) -> bool {
        self.len == self.capacity()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn thinning(&self) -> usize {
        self.thinning
    }

    /// Pushes a state together with `∇V` at that state, evicting the oldest.
    pub fn push(&mut self, state: &[f64], grad: &[f64]) {
        debug_assert_eq!(state.len(), self.dim);
        let d = self.dim;
        let at = self.head * d;
        self.states[at..at + d].copy_from_slice(state);
        self.grads[at..at + d].copy_from_slice(grad);
        self.head = (self.head + 1) % self.capacity();
        self.len = (self.len + 1).min(self.capacity());
    }

    /// Pushes a state with a zero gradient slot. Only [`Self::thinned_view`]
    /// is meaningful afterwards.
    pub fn push_state(&mut self, state: &[f64]) -> Result<()> {
        check_dim(self.dim, state.len())?;
        let zeros = vec![0.0; self.dim];
        self.push(state, &zeros);
        Ok(())
    }

    fn slot(&self, lag: usize) -> usize {
        let cap = self.capacity();
        (self.head + cap - lag % cap) % cap
    }

    /// Number of thinned samples currently reachable (`j` with `j c <= len`).
    pub fn available(&self) -> usize {
        (self.len / self.thinning).min(self.count)
    }

    /// `(state, grad)` for `j = 1..=available()`, most recent first.
    pub(crate) fn thinned_pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> + '_ {
        let d = self.dim;
        (1..=self.available()).map(move |j| {
            let s = self.slot(j * self.thinning) * d;
            (&self.states[s..s + d], &self.grads[s..s + d])
        })
    }

    pub(crate) fn thinned_states(&self) -> Vec<&[f64]> {
        self.thinned_pairs().map(|(s, _)| s).collect()
    }

    /// The `M` thinned past samples `theta_{k - j c}`, `j = 1..M` (row `j-1`).
    pub fn thinned_view(&self) -> Result<SampleMatrix> {
        if !self.is_full() {
            return Err(Error::WindowUnderfilled {
                have: self.len,
                need: self.capacity(),
            });
        }
        let mut data = Vec::with_capacity(self.count * self.dim);
        for (s, _) in self.thinned_pairs() {
            data.extend_from_slice(s);
        }
        SampleMatrix::new(self.dim, data)
    }
}
