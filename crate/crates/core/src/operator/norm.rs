//! Operator norm and numerical rank of dense complex matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::C64;
use crate::error::{Error, Result};

pub const POWER_MAX_ITER: usize = 10_000;
pub const POWER_REL_TOL: f64 = 1e-9;

/// Largest singular value.
///
/// Power iteration on the Gram matrix of the smaller side, stopped once the
/// eigen-residual `‖Gv − λv‖` falls below `POWER_REL_TOL · λ` (so `λ` is
/// within that relative distance of an eigenvalue of `G`). On
/// non-convergence falls back to a full Hermitian eigendecomposition.
pub fn op_norm(m: &DMatrix<C64>) -> Result<f64> {
    let Some(scale) = max_modulus(m)? else {
        return Ok(0.0);
    };
    let scaled = m.map(|z| z / scale);
    let gram = if scaled.nrows() >= scaled.ncols() {
        scaled.ad_mul(&scaled)
    } else {
        &scaled * scaled.adjoint()
    };
    let lambda = match power_iteration(&gram) {
        Some(l) => l,
        None => hermitian_max_eigenvalue(gram)?,
    };
    Ok(scale * lambda.max(0.0).sqrt())
}

/// `None` for the zero (or empty) matrix.
fn max_modulus(m: &DMatrix<C64>) -> Result<Option<f64>> {
    let mut best = 0.0f64;
    for z in m.iter() {
        let a = z.norm();
        if !a.is_finite() {
            return Err(Error::NumericalFailure("non-finite matrix entry".into()));
        }
        best = best.max(a);
    }
    Ok((best > 0.0).then_some(best))
}

/// All-ones direction, tilted by a low-discrepancy sequence so that it is not
/// orthogonal to the top eigenvector of a sign-symmetric matrix.
fn start_vector(n: usize) -> DVector<C64> {
    const GOLDEN: f64 = 0.618_033_988_749_894_8;
    let v = DVector::from_fn(n, |k, _| {
        C64::new(1.0 + 0.5 * ((k as f64 + 1.0) * GOLDEN).fract(), 0.0)
    });
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

fn power_iteration(gram: &DMatrix<C64>) -> Option<f64> {
    let mut v = start_vector(gram.nrows());
    for _ in 0..POWER_MAX_ITER {
        let w = gram * &v;
        let lambda = v.dotc(&w).re;
        let wn = w.norm();
        if wn == 0.0 || !wn.is_finite() {
            return None;
        }
        let residual = (&w - &v * C64::new(lambda, 0.0)).norm();
        if residual <= POWER_REL_TOL * lambda {
            return Some(lambda);
        }
        v = w / C64::new(wn, 0.0);
    }
    None
}

fn hermitian_max_eigenvalue(gram: DMatrix<C64>) -> Result<f64> {
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 100_000).ok_or_else(|| {
        Error::NumericalFailure("Hermitian eigendecomposition did not converge".into())
    })?;
    Ok(eig.eigenvalues.iter().copied().fold(0.0, f64::max))
}

/// Number of singular values exceeding `tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<C64>, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("rank tolerance must be positive, got {tol}")));
    }
    if max_modulus(m)?.is_none() {
        return Ok(0);
    }
    let sv = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?
        .singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    Ok(sv.iter().filter(|&&s| s > tol * top).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn simple_norms() {
        assert_eq!(op_norm(&DMatrix::identity(4, 4)).unwrap(), 1.0);
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0), c(2.0), c(0.0), c(0.0)]);
        assert!((op_norm(&m).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(op_norm(&DMatrix::zeros(3, 3)).unwrap(), 0.0);
        assert_eq!(op_norm(&DMatrix::zeros(0, 3)).unwrap(), 0.0);
    }

    #[test]
    fn antisymmetric_top_vector_found() {
        // Top right-singular vector (1, -1)/√2 is orthogonal to all-ones.
        let m = DMatrix::from_row_slice(1, 2, &[c(1.0), c(-1.0)]);
        assert!((op_norm(&m).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nan_is_a_failure() {
        let m = DMatrix::from_element(2, 2, c(f64::NAN));
        assert!(matches!(op_norm(&m), Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn rank_basics() {
        let mut d = DMatrix::<C64>::zeros(5, 5);
        for i in [0, 2, 3] {
            d[(i, i)] = c(1.0);
        }
        assert_eq!(numerical_rank(&d, 1e-9).unwrap(), 3);
        assert_eq!(numerical_rank(&DMatrix::zeros(4, 4), 1e-9).unwrap(), 0);
        assert!(numerical_rank(&d, 0.0).is_err());
    }
}
