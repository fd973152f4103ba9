//! Compressed sparse row matrices and SPD solvers.
//!
//! [`SparseSymMatrix`] stores both triangles explicitly, so a row holds every
//! nonzero of that row and matrix-vector products need no transposition.

use std::fmt::Write as _;
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

mod cg;
mod cholesky;

pub use cg::{pcg, spd_solve, DEFAULT_TOLERANCE};
pub use cholesky::{dense_cholesky_solve, reverse_cuthill_mckee, EnvelopeCholesky, DENSE_LIMIT};

/// Rows at or above this count use a parallel matrix-vector product.
const PARALLEL_ROWS: usize = 4096;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    /// Wall time in seconds.
    pub wall_time: f64,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, capacity: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn extend(&mut self, other: impl IntoIterator<Item = (usize, usize, f64)>) {
        self.entries.extend(other);
    }

    /// Compresses to CSR. Triplets are sorted by position and, within a
    /// position, by value bits before summation, so the result does not
    /// depend on the order contributions were pushed in.
    pub fn build(mut self) -> CsrMatrix {
        self.entries
            .par_sort_unstable_by(|a, b| (a.0, a.1, a.2.to_bits()).cmp(&(b.0, b.1, b.2.to_bits())));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// General rectangular CSR matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                actual: x.len(),
            });
        }
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                actual: y.len(),
            });
        }
        let row = |(i, yi): (usize, &mut f64)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        };
        if self.nrows >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(row);
        } else {
            y.iter_mut().enumerate().for_each(row);
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            dense[i][j] = v;
        }
        dense
    }

    /// Linear combination `a·self + b·other`; both must share dimensions.
    pub fn add_scaled(&self, a: f64, other: &CsrMatrix, b: f64) -> Result<CsrMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                actual: other.nrows,
            });
        }
        let mut builder = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        builder.extend(self.iter().map(|(i, j, v)| (i, j, a * v)));
        builder.extend(other.iter().map(|(i, j, v)| (i, j, b * v)));
        Ok(builder.build())
    }
}

/// Symmetric sparse matrix with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    inner: CsrMatrix,
}

impl SparseSymMatrix {
    /// Wraps a square CSR matrix after checking that `(i, j)` is present
    /// exactly when `(j, i)` is, with values equal to `1e-14` relative to the
    /// largest magnitude.
    pub fn from_csr(csr: CsrMatrix) -> Result<Self> {
        if csr.nrows != csr.ncols {
            return Err(Error::DimensionMismatch {
                expected: csr.nrows,
                actual: csr.ncols,
            });
        }
        let scale = csr.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for (i, j, v) in csr.iter() {
            if j <= i {
                continue;
            }
            let (cols, vals) = csr.row(j);
            match cols.binary_search(&i) {
                Ok(k) if (vals[k] - v).abs() <= 1e-14 * scale => {}
                _ => return Err(Error::NotSymmetric { row: i, col: j }),
            }
        }
        Ok(Self { inner: csr })
    }

    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut b = TripletBuilder::new(n, n);
        b.extend(triplets);
        Self::from_csr(b.build())
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: CsrMatrix {
                nrows: n,
                ncols: n,
                row_ptr: (0..=n).collect(),
                col_idx: (0..n).collect(),
                values: vec![1.0; n],
            },
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: CsrMatrix {
                nrows: n,
                ncols: n,
                row_ptr: vec![0; n + 1],
                col_idx: Vec::new(),
                values: Vec::new(),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.inner
    }

    pub fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        self.inner.row(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.inner.iter()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.inner.to_dense()
    }

    /// `a·self + b·other`.
    pub fn add_scaled(&self, a: f64, other: &SparseSymMatrix, b: f64) -> Result<Self> {
        Ok(Self {
            inner: self.inner.add_scaled(a, &other.inner, b)?,
        })
    }

    /// Replaces every row by a single diagonal entry holding its sum.
    pub fn lumped(&self) -> Self {
        let n = self.dim();
        let mut b = TripletBuilder::with_capacity(n, n, n);
        for i in 0..n {
            let (_, vals) = self.row(i);
            b.push(i, i, vals.iter().sum());
        }
        Self { inner: b.build() }
    }

    /// Principal submatrix on `keep` (global indices, ascending) together
    /// with the coupling block from `keep` rows to the remaining columns.
    pub fn split(&self, keep: &[usize]) -> (SparseSymMatrix, CsrMatrix) {
        let n = self.dim();
        let mut local = vec![usize::MAX; n];
        for (k, &g) in keep.iter().enumerate() {
            local[g] = k;
        }
        let m = keep.len();
        let mut inner = TripletBuilder::new(m, m);
        let mut coupling = TripletBuilder::new(m, n);
        for (k, &g) in keep.iter().enumerate() {
            let (cols, vals) = self.row(g);
            for (&j, &v) in cols.iter().zip(vals) {
                if local[j] != usize::MAX {
                    inner.push(k, local[j], v);
                } else {
                    coupling.push(k, j, v);
                }
            }
        }
        (
            SparseSymMatrix {
                inner: inner.build(),
            },
            coupling.build(),
        )
    }

    /// MatrixMarket coordinate dump (symmetric, lower triangle, 1-based).
    pub fn to_matrix_market(&self) -> String {
        let lower: Vec<_> = self.iter().filter(|(i, j, _)| j <= i).collect();
        let mut out = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
        let _ = writeln!(out, "{} {} {}", self.dim(), self.dim(), lower.len());
        for (i, j, v) in lower {
            let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
        }
        out
    }

    pub fn write_matrix_market<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_matrix_market().as_bytes())
    }
}

/// `y = A x` exactly as stored.
pub fn spmv(a: &SparseSymMatrix, x: &[f64]) -> Result<Vec<f64>> {
    a.inner.spmv(x)
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
