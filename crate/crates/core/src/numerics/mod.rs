//! Dense kernels shared by the linear models.
//!
//! Least squares goes through an orthogonal route (Householder QR, then a
//! Jacobi SVD of the triangular factor) so that exactly collinear designs,
//! such as a full one-hot block next to an intercept column, still get the
//! minimum-norm minimizer. Vectors are plain `f64` slices.

mod decomp;
mod matrix;

pub use matrix::Matrix;

use crate::error::{Error, Result};
use decomp::{householder_qr, jacobi_svd, ThinSvd};

fn check_system(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::Empty(format!(
            "least squares needs a non-empty design, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} rows but target has {} entries",
            x.rows(),
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares target".into()));
    }
    Ok(())
}

fn svd_route(x: &Matrix, y: &[f64]) -> (ThinSvd, Vec<f64>) {
    let (n, p) = (x.rows(), x.cols());
    let mut a = x.to_col_major();
    if n >= p {
        let mut rhs = y.to_vec();
        let r = householder_qr(&mut a, n, p, &mut rhs);
        rhs.truncate(p);
        (jacobi_svd(r, p, p), rhs)
    } else {
        (jacobi_svd(a, n, p), y.to_vec())
    }
}

/// Minimum-norm minimizer of `‖y − Xβ‖²`.
pub fn solve_least_squares(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    check_system(x, y)?;
    let (svd, rhs) = svd_route(x, y);
    let cutoff = svd.cutoff(x.rows().max(x.cols()));
    Ok(svd.pseudo_solve(&rhs, cutoff))
}

/// Minimizer of `‖y − Xβ‖² + λ Σ_j β_j²`, where the column `exempt_column`
/// (typically an intercept) carries no penalty.
///
/// Solved as the least-squares problem on `[X; √λ·D]`, `[y; 0]`, with `D` the
/// identity minus the exempt diagonal entry. `λ = 0` is plain least squares.
pub fn solve_ridge(x: &Matrix, y: &[f64], lambda: f64, exempt_column: Option<usize>) -> Result<Vec<f64>> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ridge penalty must be finite and non-negative, got {lambda}"
        )));
    }
    check_system(x, y)?;
    if let Some(c) = exempt_column {
        if c >= x.cols() {
            return Err(Error::DimensionMismatch(format!(
                "exempt column {c} out of range for {} columns",
                x.cols()
            )));
        }
    }
    if lambda == 0.0 {
        return solve_least_squares(x, y);
    }
    let p = x.cols();
    let root = lambda.sqrt();
    let mut penalty = Matrix::zeros(p, p);
    for j in 0..p {
        if Some(j) != exempt_column {
            penalty.set(j, j, root);
        }
    }
    let augmented = x.vstack(&penalty)?;
    let mut rhs = y.to_vec();
    rhs.resize(x.rows() + p, 0.0);
    solve_least_squares(&augmented, &rhs)
}

/// `sign(z) · max(|z| − γ, 0)`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0, "soft threshold gamma must be non-negative");
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Singular values of `x`, unordered.
pub fn singular_values(x: &Matrix) -> Vec<f64> {
    let (svd, _) = svd_route(x, &vec![0.0; x.rows()]);
    svd.sigma
}

/// `σ_max / σ_min`; infinite for rank-deficient input.
pub fn condition_number(x: &Matrix) -> f64 {
    let s = singular_values(x);
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
