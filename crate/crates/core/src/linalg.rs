//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Matrix exponential `e^{M}`.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    m.clone().exp()
}

/// `e^{M t}`.
pub fn expm_t(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    expm(&(m * t))
}

/// Operator 2-norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |a, &b| a.max(b))
}

/// 2-norm condition number; infinite for singular matrices.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    let min = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Concatenates two vectors.
pub fn concat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Splits a vector after its first `k` entries.
pub fn split_at(z: &DVector<f64>, k: usize) -> (DVector<f64>, DVector<f64>) {
    (z.rows(0, k).into_owned(), z.rows(k, z.len() - k).into_owned())
}

/// Block-diagonal matrix with blocks `a` and `b`.
pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() + b.nrows();
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_nilpotent_is_polynomial() {
        let n = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = expm_t(&n, -3.0);
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, -3.0, 0.0, 1.0]);
        assert!((e - expect).norm() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-3.0, 2.0]));
        assert!((spectral_norm(&d) - 3.0).abs() < 1e-12);
        assert!((condition_number(&d) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn empty_blocks() {
        let e = DMatrix::<f64>::zeros(0, 0);
        assert_eq!(expm(&e).nrows(), 0);
        assert_eq!(spectral_norm(&e), 0.0);
        let a = DMatrix::from_element(1, 1, 2.0);
        assert_eq!(block_diag(&a, &e), a);
    }
}
