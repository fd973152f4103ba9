use std::time::Instant;

use super::{dot, norm2, SolveStats, SparseSymMatrix};
use crate::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Solves `A x = b` for SPD `A` with Jacobi-preconditioned conjugate
/// gradients, starting from zero.
///
/// Stops once `‖b - A x‖₂ / ‖b‖₂ ≤ tol`. `max_iter` defaults to `20·n` when
/// `None`. On failure to converge the best iterate is returned inside
/// [`Error::LinearNotConverged`].
pub fn spd_solve(
    a: &SparseSymMatrix,
    b: &[f64],
    tol: f64,
    max_iter: Option<usize>,
) -> Result<(Vec<f64>, SolveStats)> {
    pcg(a, b, None, tol, max_iter, |_, _| {})
}

/// Preconditioned CG with an optional initial guess. `observe` is called
/// after every iteration with the iteration number and current iterate.
pub fn pcg<F>(
    a: &SparseSymMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: Option<usize>,
    mut observe: F,
) -> Result<(Vec<f64>, SolveStats)>
where
    F: FnMut(usize, &[f64]),
{
    let start = Instant::now();
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "linear tolerance must lie in (0, 1), got {tol}"
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let max_iter = max_iter.unwrap_or(20 * n.max(1));

    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
                wall_time: start.elapsed().as_secs_f64(),
            },
        ));
    }

    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::NotPositiveDefinite { pivot: i, value: d })
            }
        })
        .collect::<Result<_>>()?;

    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: x0.len(),
            })
        }
        None => vec![0.0; n],
    };
    let mut r = a.csr().spmv(&x)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;

    while norm2(&r) / b_norm > tol && iterations < max_iter {
        a.csr().spmv_into(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(Error::NonFinite);
        }
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                pivot: iterations,
                value: pap,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
        observe(iterations, &x);
    }

    // report the true residual, not the recurrence
    let ax = a.csr().spmv(&x)?;
    let residual = ax.iter().zip(b).map(|(ax, b)| (b - ax).powi(2)).sum::<f64>().sqrt() / b_norm;
    if !residual.is_finite() {
        return Err(Error::NonFinite);
    }
    let stats = SolveStats {
        iterations,
        relative_residual: residual,
        wall_time: start.elapsed().as_secs_f64(),
    };
    if norm2(&r) / b_norm > tol {
        return Err(Error::LinearNotConverged { best: x, stats });
    }
    Ok((x, stats))
}
