use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{DenseMatrix, StateVector};
use crate::{Error, Result};

/// Coordinate-format accumulator for a [`SparseOperator`].
///
/// Duplicate `(row, col)` pairs are summed when the operator is built.
#[derive(Debug, Clone)]
pub struct SparseBuilder {
    dim: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl SparseBuilder {
    pub fn new(dim: usize) -> Self {
        SparseBuilder {
            dim,
            triplets: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, nnz: usize) -> Self {
        SparseBuilder {
            dim,
            triplets: Vec::with_capacity(nnz),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.triplets.push((row, col, value));
    }

    pub fn build(self) -> Result<SparseOperator> {
        SparseOperator::from_triplets(self.dim, self.triplets, false)
    }

    pub fn build_symmetric(self) -> Result<SparseOperator> {
        SparseOperator::from_triplets(self.dim, self.triplets, true)
    }
}

/// Square sparse matrix in compressed-row storage.
///
/// Entries are sorted row-major with no duplicate positions, so products and
/// sums are evaluated in a fixed order and are bit-reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseOperator {
    /// Assembles from `(row, col, value)` triplets.
    ///
    /// With `symmetry_hint` set, the assembled entries must be exactly symmetric.
    pub fn from_triplets(
        dim: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        symmetry_hint: bool,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("operator dimension must be positive"));
        }
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::config(format!(
                "entry ({r}, {c}) out of range for dimension {dim}"
            )));
        }
        // Stable sort keeps duplicate contributions in insertion order.
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let op = SparseOperator {
            dim,
            row_ptr,
            col_idx,
            values,
            symmetric: symmetry_hint,
        };
        if symmetry_hint && !op.is_exactly_symmetric() {
            return Err(Error::config("operator declared symmetric but entries differ"));
        }
        Ok(op)
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::from_triplets(dim, Vec::new(), true)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let triplets = diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect();
        Self::from_triplets(diag.len(), triplets, true)
    }

    pub fn from_dense(m: &DenseMatrix) -> Result<Self> {
        let n = m.dim();
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, triplets, false)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn symmetry_hint(&self) -> bool {
        self.symmetric
    }

    /// Stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    /// Entry `(row, col)`, zero if not stored.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[row]..self.row_ptr[row + 1]];
        match cols.binary_search(&col) {
            Ok(k) => self.values[self.row_ptr[row] + k],
            Err(_) => 0.0,
        }
    }

    pub fn apply(&self, x: &StateVector) -> Result<StateVector> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "operator application",
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut y = x.zeros_like();
        self.apply_into(x.as_slice(), y.as_mut_slice());
        Ok(y)
    }

    /// `y = A x` on raw slices; lengths must equal `dim`.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
    }

    /// Signed column sums, accumulated in row-major entry order.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for (_, c, v) in self.entries() {
            sums[c] += v;
        }
        sums
    }

    /// Induced 1-norm (max absolute column sum).
    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.dim];
        for (_, c, v) in self.entries() {
            sums[c] += v.abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Induced infinity-norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                self.values[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Smallest stored off-diagonal entry, or `None` if there is none.
    pub fn min_off_diagonal(&self) -> Option<f64> {
        self.entries()
            .filter(|(r, c, _)| r != c)
            .map(|(_, _, v)| v)
            .reduce(f64::min)
    }

    /// All off-diagonal entries are nonnegative.
    pub fn is_metzler(&self) -> bool {
        self.min_off_diagonal().map_or(true, |m| m >= 0.0)
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        self.entries().all(|(r, c, v)| self.get(c, r) == v)
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, b: f64, other: &SparseOperator) -> Result<SparseOperator> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                context: "operator sum",
                expected: self.dim,
                found: other.dim,
            });
        }
        let triplets = self
            .entries()
            .map(|(r, c, v)| (r, c, a * v))
            .chain(other.entries().map(|(r, c, v)| (r, c, b * v)))
            .collect();
        Self::from_triplets(self.dim, triplets, false)
    }

    pub fn scaled(&self, a: f64) -> SparseOperator {
        SparseOperator {
            values: self.values.iter().map(|v| a * v).collect(),
            ..self.clone()
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim);
        for (r, c, v) in self.entries() {
            m.set(r, c, v);
        }
        m
    }
}
