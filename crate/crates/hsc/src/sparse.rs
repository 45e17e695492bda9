//! Compressed sparse row operators with matvec.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use crate::scalar::Scalar;

/// Matvecs on operators with at least this many stored entries fan out over rows.
const PAR_MIN_NNZ: usize = 1 << 16;

/// What an operator represents; informational only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorTag {
    B,
    Bk(usize),
    Bprime,
    J,
    Jprime,
    Adjacency(usize),
    Degree(usize),
    Generic,
}

/// Real sparse matrix in CSR layout. Duplicate triplets are summed and exact
/// zeros dropped at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseLinearOperator<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
    tag: OperatorTag,
}

impl<T: Scalar> SparseLinearOperator<T> {
    /// Assembles from `(row, col, value)` triplets.
    ///
    /// # Panics
    /// If any index is out of range.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I, tag: OperatorTag) -> Self
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut trip: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(r, c, _) in &trip {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) outside {nrows}x{ncols}");
        }
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<T> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        let mut op = SparseLinearOperator { nrows, ncols, indptr, indices, values, tag };
        op.drop_zeros();
        op
    }

    /// The `nrows × ncols` zero operator.
    pub fn zeros(nrows: usize, ncols: usize, tag: OperatorTag) -> Self {
        Self::from_triplets(nrows, ncols, std::iter::empty(), tag)
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|v| *v != T::zero()) {
            return;
        }
        let mut indptr = vec![0; self.nrows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.nrows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                if self.values[p] != T::zero() {
                    indices.push(self.indices[p]);
                    values.push(self.values[p]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn tag(&self) -> OperatorTag {
        self.tag
    }

    pub fn with_tag(mut self, tag: OperatorTag) -> Self {
        self.tag = tag;
        self
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> T {
        let row = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match row.binary_search(&c) {
            Ok(p) => self.values[self.indptr[r] + p],
            Err(_) => T::zero(),
        }
    }

    /// Iterates stored entries as `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |p| (r, self.indices[p], self.values[p]))
        })
    }

    /// Stored `(col, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |p| (self.indices[p], self.values[p]))
    }

    fn row_dot(&self, r: usize, x: &[T]) -> T {
        let mut acc = T::zero();
        for p in self.indptr[r]..self.indptr[r + 1] {
            acc += self.values[p] * x[self.indices[p]];
        }
        acc
    }

    /// `y = M x`.
    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        if self.nnz() >= PAR_MIN_NNZ {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| *yr = self.row_dot(r, x));
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = self.row_dot(r, x);
            }
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// Complex matvec, applying the real operator to both parts.
    pub fn matvec_complex(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for p in self.indptr[r]..self.indptr[r + 1] {
                    acc = acc + x[self.indices[p]] * self.values[p];
                }
                acc
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let trip = self.triplets().map(|(r, c, v)| (c, r, v));
        Self::from_triplets(self.ncols, self.nrows, trip, self.tag)
    }

    /// Entrywise sum; dimensions must agree.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Self::from_triplets(self.nrows, self.ncols, self.triplets().chain(other.triplets()), self.tag)
    }

    /// Multiplies every entry by `s`.
    pub fn scale(&self, s: T) -> Self {
        Self::from_triplets(self.nrows, self.ncols, self.triplets().map(|(r, c, v)| (r, c, v * s)), self.tag)
    }

    /// Kronecker product `G ⊗ self` for a dense square `G`.
    pub fn kron_left(&self, g: &[Vec<T>]) -> Self {
        let l = g.len();
        let mut trip = Vec::with_capacity(self.nnz() * l * l);
        for (s, grow) in g.iter().enumerate() {
            for (t, &gst) in grow.iter().enumerate() {
                if gst == T::zero() {
                    continue;
                }
                for (r, c, v) in self.triplets() {
                    trip.push((s * self.nrows + r, t * self.ncols + c, gst * v));
                }
            }
        }
        Self::from_triplets(l * self.nrows, l * self.ncols, trip, self.tag)
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }

    /// Writes the coordinate format: a header `nrows ncols nnz`, then one
    /// `row col value` line per stored entry (0-based).
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_summed_and_zeros_dropped() {
        let m = SparseLinearOperator::<f64>::from_triplets(
            2,
            3,
            [(0, 1, 1.0), (0, 1, 2.0), (1, 2, 5.0), (1, 0, 1.0), (1, 0, -1.0)],
            OperatorTag::Generic,
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.matvec(&[1.0, 1.0, 2.0]), vec![3.0, 10.0]);
        assert_eq!(m.transpose().get(2, 1), 5.0);
    }

    #[test]
    fn kron_with_identity() {
        let m = SparseLinearOperator::<f64>::from_triplets(2, 2, [(0, 1, 1.0)], OperatorTag::Generic);
        let k = m.kron_left(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(k.nrows(), 4);
        assert_eq!(k.get(0, 1), 1.0);
        assert_eq!(k.get(2, 3), 2.0);
        assert_eq!(k.nnz(), 2);
    }

    #[test]
    fn triplet_export() {
        let m = SparseLinearOperator::<f64>::from_triplets(2, 2, [(1, 0, 1.5)], OperatorTag::Generic);
        let mut buf = Vec::new();
        m.write_triplets(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "2 2 1\n1 0 1.5\n");
    }

    #[test]
    fn works_in_single_precision() {
        let m = SparseLinearOperator::<f32>::from_triplets(1, 2, [(0, 0, 0.5f32), (0, 1, 2.0)], OperatorTag::Generic);
        assert_eq!(m.matvec(&[2.0, 1.0]), vec![3.0f32]);
    }
}
