//! Compressed-row sparse matrices assembled from triplets.

use crate::error::{arg, Result};
use crate::scalar::Real;

/// Coordinate-format accumulator; duplicates are summed on conversion.
#[derive(Debug, Clone)]
pub struct TripletMatrix<T> {
    n: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Real> TripletMatrix<T> {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored triplets, duplicates included.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i, j, v));
    }

    /// Scatters a dense local block onto global `dofs`.
    pub fn add_block<const N: usize>(&mut self, dofs: &[usize; N], block: &[[T; N]; N]) {
        for (a, &i) in dofs.iter().enumerate() {
            for (b, &j) in dofs.iter().enumerate() {
                self.push(i, j, block[a][b]);
            }
        }
    }

    pub fn extend(&mut self, other: TripletMatrix<T>) {
        self.entries.extend(other.entries);
    }

    pub fn to_csr(&self) -> CsrMatrix<T> {
        let mut sorted = self.entries.clone();
        sorted.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_offsets = vec![0; self.n + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<T> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("merged entry exists") += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_offsets[i + 1] += row_offsets[i];
        }
        CsrMatrix {
            n: self.n,
            row_offsets,
            col_indices,
            values,
        }
    }
}

/// Square sparse matrix in compressed-row form with sorted, unique columns per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut t = TripletMatrix::with_capacity(n, triplets.len());
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return arg(format!("triplet ({i}, {j}) outside a {n}x{n} matrix"));
            }
            t.push(i, j, v);
        }
        Ok(t.to_csr())
    }

    pub fn from_dense(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut t = TripletMatrix::new(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return arg("dense matrix must be square");
            }
            for (j, &v) in row.iter().enumerate() {
                if v != T::zero() {
                    t.push(i, j, v);
                }
            }
        }
        Ok(t.to_csr())
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `max |a_ij - a_ji|` over all stored entries.
    pub fn symmetry_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::zero(); self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }

    /// Keeps the entries for which `keep(i, j, v)` returns a value.
    /// Sets each diagonal entry to minus the sum of the row's off-diagonal
    /// entries, so that the matrix annihilates constants up to one rounding.
    pub fn close_row_sums(&mut self) {
        for i in 0..self.dim() {
            let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut diag = None;
            let (mut sum, mut carry) = (T::zero(), T::zero());
            for k in lo..hi {
                if self.col_indices[k] == i {
                    diag = Some(k);
                    continue;
                }
                // Neumaier summation
                let v = self.values[k];
                let t = sum + v;
                carry += if sum.abs() >= v.abs() {
                    (sum - t) + v
                } else {
                    (v - t) + sum
                };
                sum = t;
            }
            if let Some(k) = diag {
                self.values[k] = -(sum + carry);
            }
        }
    }

    /// Entrywise sum of two matrices of equal size.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return arg("matrix dimensions differ");
        }
        let mut t = TripletMatrix::with_capacity(self.dim(), self.nnz() + other.nnz());
        for m in [self, other] {
            for i in 0..m.dim() {
                for (j, v) in m.row(i) {
                    t.push(i, j, v);
                }
            }
        }
        Ok(t.to_csr())
    }

    pub(crate) fn filter_map(&self, mut keep: impl FnMut(usize, usize, T) -> Option<T>) -> Self {
        let mut row_offsets = Vec::with_capacity(self.n + 1);
        let mut col_indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        row_offsets.push(0);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if let Some(nv) = keep(i, j, v) {
                    col_indices.push(j);
                    values.push(nv);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Self {
            n: self.n,
            row_offsets,
            col_indices,
            values,
        }
    }
}
