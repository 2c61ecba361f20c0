//! Exact rational linear algebra for small symmetric systems.
//!
//! Matrices are `Vec<Vec<Rat>>` in row-major order.  Everything here is
//! exact: positive definiteness is decided by the signs of LDL^T pivots,
//! not by floating-point estimates.

use num_traits::{One, Signed, Zero};

use crate::error::QError;
use crate::rat::Rat;

/// Checks that `m` is square and nonempty, returning its size.
pub fn check_square(m: &[Vec<Rat>]) -> Result<usize, QError> {
    let n = m.len();
    if n == 0 {
        return Err(QError::Dimension {
            context: "empty matrix".into(),
        });
    }
    for row in m {
        if row.len() != n {
            return Err(QError::Dimension {
                context: format!("matrix row length {} in a {}x{} matrix", row.len(), n, n),
            });
        }
    }
    Ok(n)
}

/// Checks symmetry entrywise.
pub fn check_symmetric(m: &[Vec<Rat>]) -> Result<(), QError> {
    let n = check_square(m)?;
    for i in 0..n {
        for j in (i + 1)..n {
            if m[i][j] != m[j][i] {
                return Err(QError::NotSymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// `n x n` identity.
pub fn identity(n: usize) -> Vec<Vec<Rat>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rat::one() } else { Rat::zero() })
                .collect()
        })
        .collect()
}

/// Matrix times column vector.
pub fn mat_vec(m: &[Vec<Rat>], v: &[Rat]) -> Vec<Rat> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Matrix product.
pub fn mat_mul(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|l| &a[i][l] * &b[l][j]).sum())
                .collect()
        })
        .collect()
}

/// Inner product.
pub fn dot(u: &[Rat], v: &[Rat]) -> Rat {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// LDL^T factorization of a symmetric positive definite matrix.
///
/// Returns the unit lower-triangular `L` and the pivot vector `d` with
/// `m = L * diag(d) * L^T`.  Fails with the 1-based index of the first
/// offending leading minor when a pivot is not strictly positive.
pub fn ldl_posdef(m: &[Vec<Rat>]) -> Result<(Vec<Vec<Rat>>, Vec<Rat>), QError> {
    check_symmetric(m)?;
    let n = m.len();
    let mut l = identity(n);
    let mut d = vec![Rat::zero(); n];
    for j in 0..n {
        let mut dj = m[j][j].clone();
        for k in 0..j {
            dj -= &l[j][k] * &l[j][k] * &d[k];
        }
        if !dj.is_positive() {
            return Err(QError::NotPositiveDefinite { minor: j + 1 });
        }
        for i in (j + 1)..n {
            let mut s = m[i][j].clone();
            for k in 0..j {
                s -= &l[i][k] * &l[j][k] * &d[k];
            }
            l[i][j] = s / &dj;
        }
        d[j] = dj;
    }
    Ok((l, d))
}

/// Checks symmetry and strict positive definiteness.
pub fn check_posdef(m: &[Vec<Rat>]) -> Result<(), QError> {
    ldl_posdef(m).map(|_| ())
}

/// Exact inverse via Gauss-Jordan elimination.
pub fn invert_mat(m: &[Vec<Rat>]) -> Result<Vec<Vec<Rat>>, QError> {
    let n = check_square(m)?;
    let mut a: Vec<Vec<Rat>> = m.to_vec();
    let mut inv = identity(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(QError::Singular)?;
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] /= &p;
            inv[col][j] /= &p;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                let av = &a[col][j] * &f;
                a[r][j] -= av;
                let iv = &inv[col][j] * &f;
                inv[r][j] -= iv;
            }
        }
    }
    Ok(inv)
}

/// Solves `m x = b` exactly for square invertible `m`.
pub fn solve(m: &[Vec<Rat>], b: &[Rat]) -> Result<Vec<Rat>, QError> {
    let inv = invert_mat(m)?;
    Ok(mat_vec(&inv, b))
}
