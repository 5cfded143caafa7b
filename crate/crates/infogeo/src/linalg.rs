//! Small dense kernels for the handful of p×p problems in this crate.
//!
//! Dimensions here are tiny (regression designs and mixture covariances
//! of a few columns), so a cyclic Jacobi sweep and partially pivoted
//! elimination are accurate and fast enough. The heavier test oracles
//! cross-check these against an external factorization.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major square matrix as nested vectors.
pub(crate) type Mat<T> = Vec<Vec<T>>;

pub(crate) fn zeros<T: Scalar>(n: usize) -> Mat<T> {
    vec![vec![T::zero(); n]; n]
}

pub(crate) fn identity<T: Scalar>(n: usize) -> Mat<T> {
    let mut m = zeros(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub(crate) fn is_symmetric<T: Scalar>(a: &Mat<T>, tol: T) -> bool {
    let n = a.len();
    a.iter().all(|row| row.len() == n)
        && (0..n).all(|i| (0..i).all(|j| (a[i][j] - a[j][i]).abs() <= tol))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors stored as
/// columns: `a = V diag(λ) Vᵀ`.
pub(crate) fn sym_eigen<T: Scalar>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    let n = a.len();
    let mut m = a.clone();
    let mut v = identity(n);
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + m[i][j] * m[i][j];
            }
        }
        let scale = (0..n).fold(T::zero(), |s, i| s + m[i][i].abs());
        if off.sqrt() <= eps * (scale + T::one()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() <= eps * (m[p][p].abs() + m[q][q].abs() + T::one()) {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (T::cast(2.0) * m[p][q]);
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eig = (0..n).map(|i| m[i][i]).collect();
    (eig, v)
}

/// Reassembles `V diag(λ) Vᵀ`, symmetrized against round-off.
pub(crate) fn from_eigen<T: Scalar>(eigenvalues: &[T], v: &Mat<T>) -> Mat<T> {
    let n = eigenvalues.len();
    let mut out = zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut s = T::zero();
            for (k, &lam) in eigenvalues.iter().enumerate() {
                s = s + v[i][k] * lam * v[j][k];
            }
            out[i][j] = s;
            out[j][i] = s;
        }
    }
    out
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub(crate) fn solve<T: Scalar>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.len();
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let scale = m
        .iter()
        .flat_map(|row| row.iter().map(|x| x.abs()))
        .fold(T::zero(), T::max);
    let tol = T::epsilon() * scale * T::cast(n as f64);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                m[i][col]
                    .abs()
                    .partial_cmp(&m[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[pivot_row][col].abs() <= tol {
            return Err(Error::RankDeficient);
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let mck = m[col][k];
                m[row][k] = m[row][k] - f * mck;
            }
            rhs[row] = rhs[row] - f * rhs[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for k in (row + 1)..n {
            s = s - m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // Eigenvalues of [[2,1],[1,2]] are 1 and 3.
        let a: Mat<f64> = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let (mut eig, v) = sym_eigen(&a);
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!((eig[1] - 3.0).abs() < 1e-12);
        let (raw_eig, _) = sym_eigen(&a);
        let back = from_eigen(&raw_eig, &v);
        for i in 0..2 {
            for j in 0..2 {
                assert!((back[i][j] - a[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_matches_hand_computation() {
        let a: Mat<f64> = vec![vec![3.0, 1.0], vec![1.0, 2.0]];
        let x = solve(&a, &[9.0, 8.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_detects_singularity() {
        let a: Mat<f64> = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(solve(&a, &[1.0, 2.0]), Err(Error::RankDeficient)));
    }

    #[test]
    fn symmetry_check() {
        let a: Mat<f64> = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(is_symmetric(&a, 0.0));
        let b: Mat<f64> = vec![vec![1.0, 2.0], vec![2.5, 1.0]];
        assert!(!is_symmetric(&b, 1e-9));
    }
}
