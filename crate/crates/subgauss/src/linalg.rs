//! Dense symmetric linear algebra on top of LAPACK. The eigensolver wraps
//! `dsyevd` (divide and conquer), which is several times faster than the
//! QR-based driver on the matrix sizes used here.

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;

use crate::error::{Error, Result};

// openblas provides both BLAS and LAPACK symbols; make the link explicit so
// the direct `dsyevd_` call below always resolves.
#[link(name = "openblas")]
extern "C" {}

/// Symmetric eigendecomposition. Returns eigenvalues in ascending order and
/// a matrix whose column `j` is the eigenvector for eigenvalue `j`.
pub fn eigh(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "eigh matrix",
            expected: n,
            got: a.ncols(),
        });
    }
    // LAPACK is column-major; a symmetric matrix is its own transpose, so
    // the row-major buffer can be handed over as is.
    let mut buf: Vec<f64> = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            buf.push(a[[i, j]]);
        }
    }
    let ni = n as i32;
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;
    let jobz = b'V' as std::os::raw::c_char;
    let uplo = b'L' as std::os::raw::c_char;

    // workspace query
    let mut wkopt = 0.0f64;
    let mut iwkopt = 0i32;
    let minus_one = -1i32;
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            &mut wkopt,
            &minus_one,
            &mut iwkopt,
            &minus_one,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!(
            "dsyevd workspace query failed with info = {info}"
        )));
    }
    let lwork = wkopt as i32;
    let liwork = iwkopt;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!(
            "dsyevd failed to converge (info = {info})"
        )));
    }
    // buf now holds eigenvectors as columns in column-major order.
    let vecs = Array2::from_shape_fn((n, n), |(i, j)| buf[i + j * n]);
    Ok((Array1::from_vec(w), vecs))
}

/// Solve a dense linear system `a x = b` by LU factorization.
pub fn solve_dense(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    a.solve(b)
        .map_err(|e| Error::Numerical(format!("dense solve failed: {e}")))
}

/// Largest eigenvalue (and its eigenvector) of the symmetric pencil
/// `(s, diag(m))` with strictly positive diagonal mass `m`: the largest
/// `lambda` with `s v = lambda diag(m) v`.
pub fn max_generalized_eigenvalue(
    s: &Array2<f64>,
    m: &[f64],
) -> Result<(f64, Array1<f64>)> {
    let n = s.nrows();
    if m.len() != n {
        return Err(Error::DimensionMismatch {
            context: "generalized eigenvalue mass",
            expected: n,
            got: m.len(),
        });
    }
    if let Some(bad) = m.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Numerical(format!(
            "mass matrix entry {bad} is not strictly positive"
        )));
    }
    let inv_sqrt: Vec<f64> = m.iter().map(|&v| 1.0 / v.sqrt()).collect();
    let b = Array2::from_shape_fn((n, n), |(i, j)| s[[i, j]] * inv_sqrt[i] * inv_sqrt[j]);
    let (vals, vecs) = eigh(&b)?;
    let top = n - 1;
    let witness = Array1::from_shape_fn(n, |i| vecs[[i, top]] * inv_sqrt[i]);
    Ok((vals[top], witness))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigh_two_by_two() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = eigh(&a).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        // residual check A v = lambda v
        for j in 0..2 {
            for i in 0..2 {
                let av: f64 = (0..2).map(|k| a[[i, k]] * vecs[[k, j]]).sum();
                assert!((av - vals[j] * vecs[[i, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigh_reconstructs_random_symmetric() {
        let n = 24;
        let mut a = Array2::<f64>::zeros((n, n));
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rand = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..n {
            for j in 0..=i {
                let v = rand();
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        let (vals, vecs) = eigh(&a).unwrap();
        let mut max_err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let recon: f64 = (0..n).map(|k| vecs[[i, k]] * vals[k] * vecs[[j, k]]).sum();
                max_err = max_err.max((recon - a[[i, j]]).abs());
            }
        }
        assert!(max_err < 1e-12, "reconstruction error {max_err}");
    }

    #[test]
    fn generalized_eigenvalue_diagonal_mass() {
        // s = diag(1, 5), m = (1, 2): eigenvalues 1 and 2.5.
        let s = array![[1.0, 0.0], [0.0, 5.0]];
        let (top, v) = max_generalized_eigenvalue(&s, &[1.0, 2.0]).unwrap();
        assert!((top - 2.5).abs() < 1e-12);
        assert!(v[1].abs() > v[0].abs());
    }

    #[test]
    fn solve_dense_small() {
        let a = array![[3.0, 1.0], [1.0, 2.0]];
        let b = array![5.0, 5.0];
        let x = solve_dense(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }
}
