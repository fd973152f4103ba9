use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::SparseSymMatrix;
use crate::{Error, Result};

/// Largest dimension accepted by [`dense_cholesky_solve`].
pub const DENSE_LIMIT: usize = 2000;

/// Dense Cholesky solve, for small systems and as a reference in tests.
pub fn dense_cholesky_solve(a: &SparseSymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    if n > DENSE_LIMIT {
        return Err(Error::InvalidConfig(format!(
            "dense factorisation limited to n <= {DENSE_LIMIT}, got {n}"
        )));
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let mut dense = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in a.iter() {
        dense[(i, j)] = v;
    }
    let chol = dense
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { pivot: 0, value: f64::NAN })?;
    Ok(chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
}

/// Reverse Cuthill–McKee ordering of the matrix graph.
///
/// Returns `perm` with `perm[new] = old`. Each connected component is
/// started from a pseudo-peripheral vertex.
pub fn reverse_cuthill_mckee(a: &SparseSymMatrix) -> Vec<usize> {
    let n = a.dim();
    let adjacency = |v: usize| a.row(v).0.iter().copied().filter(move |&w| w != v);
    let degree: Vec<usize> = (0..n).map(|v| adjacency(v).count()).collect();

    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));

    // breadth-first level structure from `root`, restricted to unplaced vertices
    let levels = |root: usize, placed: &[bool]| -> Vec<Vec<usize>> {
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut levels = vec![vec![root]];
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for w in adjacency(v) {
                    if !seen[w] && !placed[w] {
                        seen[w] = true;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                return levels;
            }
            levels.push(next);
        }
    };

    for &seed in &by_degree {
        if placed[seed] {
            continue;
        }
        let mut root = seed;
        let mut depth = levels(root, &placed).len();
        for _ in 0..8 {
            let ls = levels(root, &placed);
            let candidate = *ls
                .last()
                .unwrap()
                .iter()
                .min_by_key(|&&v| (degree[v], v))
                .unwrap();
            let candidate_depth = levels(candidate, &placed).len();
            if candidate_depth <= depth {
                break;
            }
            root = candidate;
            depth = candidate_depth;
        }

        let mut queue = VecDeque::from([root]);
        placed[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency(v).filter(|&w| !placed[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                placed[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Sparse Cholesky factor `P A Pᵀ = L Lᵀ` in envelope (skyline) storage
/// under a reverse Cuthill–McKee ordering.
///
/// For an M-matrix with a nonnegative right-hand side every forward and
/// backward substitution step adds terms of one sign, so tiny solution
/// components keep full relative precision. An iterative solver stopped on a
/// residual norm does not have this property.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    row_start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &SparseSymMatrix) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for &c in a.row(old).0 {
                first[new] = first[new].min(inv[c]);
            }
        }
        let mut row_start = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for i in 0..n {
            row_start.push(total);
            total += i - first[i] + 1;
        }
        row_start.push(total);

        let mut values = vec![0.0; total];
        for (new, &old) in perm.iter().enumerate() {
            let (cols, vals) = a.row(old);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c];
                if j <= new {
                    values[row_start[new] + j - first[new]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let ri = row_start[i];
            for j in fi..i {
                let fj = first[j];
                let rj = row_start[j];
                let k0 = fi.max(fj);
                let li = &values[ri + k0 - fi..ri + j - fi];
                let lj = &values[rj + k0 - fj..rj + j - fj];
                let s: f64 = li.iter().zip(lj).map(|(x, y)| x * y).sum();
                let pivot = values[rj + j - fj];
                values[ri + j - fi] = (values[ri + j - fi] - s) / pivot;
            }
            let row = &values[ri..ri + i - fi];
            let d = values[ri + i - fi] - row.iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: perm[i],
                    value: d,
                });
            }
            values[ri + i - fi] = d.sqrt();
        }

        Ok(Self {
            perm,
            first,
            row_start,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: b.len(),
            });
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let ri = self.row_start[i];
            let row = &self.values[ri..ri + i - fi];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(l, y)| l * y).sum();
            y[i] = (y[i] - s) / self.values[ri + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let ri = self.row_start[i];
            let xi = y[i] / self.values[ri + i - fi];
            y[i] = xi;
            for (yc, l) in y[fi..i].iter_mut().zip(&self.values[ri..ri + i - fi]) {
                *yc -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::spmv;

    fn grid_laplacian(nx: usize, ny: usize, shift: f64) -> SparseSymMatrix {
        let id = |i: usize, j: usize| i * ny + j;
        let mut t = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                t.push((id(i, j), id(i, j), 4.0 + shift));
                if i + 1 < nx {
                    t.push((id(i, j), id(i + 1, j), -1.0));
                    t.push((id(i + 1, j), id(i, j), -1.0));
                }
                if j + 1 < ny {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                    t.push((id(i, j + 1), id(i, j), -1.0));
                }
            }
        }
        SparseSymMatrix::from_triplets(nx * ny, t).unwrap()
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = grid_laplacian(7, 5, 0.0);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..35).collect::<Vec<_>>());
    }

    #[test]
    fn rcm_handles_disconnected_graphs() {
        let a = SparseSymMatrix::from_triplets(4, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 2.0), (3, 3, 2.0), (2, 3, -1.0), (3, 2, -1.0)]).unwrap();
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, vec![0, 1, 2, 3]);
    }

    #[test]
    fn envelope_matches_dense() {
        let a = grid_laplacian(9, 6, 0.3);
        let b: Vec<f64> = (0..54).map(|i| (i as f64 * 0.7).cos()).collect();
        let x = EnvelopeCholesky::factor(&a).unwrap().solve(&b).unwrap();
        let reference = dense_cholesky_solve(&a, &b).unwrap();
        for (x, r) in x.iter().zip(&reference) {
            assert!((x - r).abs() < 1e-12);
        }
        let ax = spmv(&a, &x).unwrap();
        for (ax, b) in ax.iter().zip(&b) {
            assert!((ax - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_components_keep_relative_precision() {
        // Strongly screened 1-D chain driven from one end: the exact solution
        // decays geometrically far below machine epsilon of the large entries.
        let n = 200;
        let c = 10.0;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseSymMatrix::from_triplets(n, t).unwrap();
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        let x = EnvelopeCholesky::factor(&a).unwrap().solve(&b).unwrap();
        // the interior recurrence x[i+1] = c x[i] - x[i-1] must hold relatively
        for i in 1..n - 1 {
            let lhs = c * x[i];
            let rhs = x[i - 1] + x[i + 1];
            assert!(x[i] > 0.0);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs, "row {i}: {lhs} vs {rhs}");
        }
        assert!(x[n - 1] < 1e-150);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = SparseSymMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 1.0), (0, 1, 2.0), (1, 0, 2.0)]).unwrap();
        assert!(matches!(EnvelopeCholesky::factor(&a), Err(Error::NotPositiveDefinite { .. })));
        assert!(matches!(dense_cholesky_solve(&a, &[1.0, 1.0]), Err(Error::NotPositiveDefinite { .. })));
    }
}
