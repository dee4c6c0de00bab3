//! Least squares restricted to a few dictionary columns.

use nalgebra::Cholesky;
use num_complex::Complex64;

use crate::{CMatrix, CVector};

/// Condition estimate above which the pivoted QR solution is abandoned.
pub const MAX_CONDITION: f64 = 1e10;
/// Ridge weight relative to the largest squared column norm.
pub const RIDGE_SCALE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct RestrictedSolution {
    pub coefficients: Vec<Complex64>,
    pub ridge: bool,
}

/// Solves `min ||y - A x||` where `A = psi[:, columns]`.
///
/// Uses Householder QR with column pivoting. When the selected columns are
/// numerically dependent (condition estimate above [`MAX_CONDITION`], or more
/// columns than rows) the ridge system `(A^H A + lambda I) x = A^H y` with
/// `lambda = 1e-6 * max ||a_j||^2` is solved instead. Returns `None` only if
/// that system is not positive definite either.
pub fn solve_restricted(
    psi: &CMatrix,
    columns: &[usize],
    y: &[Complex64],
) -> Option<RestrictedSolution> {
    let rows = psi.nrows();
    let k = columns.len();
    if k == 0 {
        return Some(RestrictedSolution {
            coefficients: Vec::new(),
            ridge: false,
        });
    }
    let a = CMatrix::from_fn(rows, k, |i, j| psi[(i, columns[j])]);
    if k <= rows {
        if let Some(x) = pivoted_qr_solve(a.clone(), y) {
            return Some(RestrictedSolution {
                coefficients: x,
                ridge: false,
            });
        }
    }
    ridge_solve(&a, y).map(|x| RestrictedSolution {
        coefficients: x,
        ridge: true,
    })
}

fn pivoted_qr_solve(mut a: CMatrix, y: &[Complex64]) -> Option<Vec<Complex64>> {
    let (rows, k) = a.shape();
    let mut b = CVector::from_column_slice(y);
    let mut perm: Vec<usize> = (0..k).collect();
    let mut norms: Vec<f64> = (0..k).map(|j| a.column(j).norm_squared()).collect();

    for j in 0..k {
        // bring the remaining column of largest norm forward
        let pivot = (j..k)
            .max_by(|&p, &q| norms[p].partial_cmp(&norms[q]).unwrap())
            .unwrap();
        if pivot != j {
            a.swap_columns(j, pivot);
            perm.swap(j, pivot);
            norms.swap(j, pivot);
        }

        let x_norm = a.view((j, j), (rows - j, 1)).norm();
        if x_norm == 0.0 {
            return None;
        }
        let x0 = a[(j, j)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * x_norm;
        let mut v = a.view((j, j), (rows - j, 1)).into_owned();
        v[0] -= alpha;
        let v_norm = v.norm();
        if v_norm > 0.0 {
            v /= Complex64::new(v_norm, 0.0);
            // A[j.., j..] -= 2 v (v^H A[j.., j..])
            let mut tail = a.view_mut((j, j), (rows - j, k - j));
            let proj = v.ad_mul(&tail);
            tail -= (&v * proj) * Complex64::new(2.0, 0.0);
            let mut bt = b.rows_mut(j, rows - j);
            let pb = v.dotc(&bt);
            bt.axpy(-pb * 2.0, &v.column(0), Complex64::new(1.0, 0.0));
        }
        for z in a.view_mut((j + 1, j), (rows - j - 1, 1)).iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        for (q, norm) in norms.iter_mut().enumerate().take(k).skip(j + 1) {
            *norm = a.view((j + 1, q), (rows - j - 1, 1)).norm_squared();
        }
    }

    let r00 = a[(0, 0)].norm();
    let rkk = a[(k - 1, k - 1)].norm();
    if rkk == 0.0 || r00 / rkk > MAX_CONDITION {
        return None;
    }

    let mut z = vec![Complex64::new(0.0, 0.0); k];
    for i in (0..k).rev() {
        let mut acc = b[i];
        for q in (i + 1)..k {
            acc -= a[(i, q)] * z[q];
        }
        z[i] = acc / a[(i, i)];
    }
    let mut x = vec![Complex64::new(0.0, 0.0); k];
    for (slot, &orig) in perm.iter().enumerate() {
        x[orig] = z[slot];
    }
    Some(x)
}

fn ridge_solve(a: &CMatrix, y: &[Complex64]) -> Option<Vec<Complex64>> {
    let k = a.ncols();
    let largest = (0..k)
        .map(|j| a.column(j).norm_squared())
        .fold(0.0, f64::max);
    if largest == 0.0 {
        return None;
    }
    let lambda = RIDGE_SCALE * largest;
    let mut gram = a.ad_mul(a);
    for i in 0..k {
        gram[(i, i)] += lambda;
    }
    let rhs = a.ad_mul(&CVector::from_column_slice(y));
    let chol = Cholesky::new(gram)?;
    Some(chol.solve(&rhs).iter().cloned().collect())
}
