//! Dense real matrix kernels: rank-revealing factorization, inverse and the
//! matrix exponential.
//!
//! Every exact equality between matrices or subspaces becomes a toleranced
//! comparison here. The defaults live in [`tol`].

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{shape, Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default tolerances, in one place.
pub mod tol {
    /// Relative singular-value threshold for rank decisions.
    pub const RANK: f64 = 1e-10;
    /// Non-degeneracy threshold `sigma_min > NON_DEGENERATE * sigma_max`.
    pub const NON_DEGENERATE: f64 = 1e-10;
    /// Default residual bound for exact identities.
    pub const IDENTITY: f64 = 1e-8;
    /// Default residual bound for checks involving finite differences.
    pub const FINITE_DIFF: f64 = 1e-6;
    /// Projector distance for subspace equality.
    pub const SUBSPACE: f64 = 1e-8;
    /// Group membership residual.
    pub const GROUP: f64 = 1e-8;
    /// Base step for central differences.
    pub const FD_STEP: f64 = 6e-6;
    /// Structure classification (symmetry / skewness) threshold.
    pub const CLASSIFY: f64 = 1e-10;
}

/// Rank decision together with orthonormal bases of image and kernel.
#[derive(Debug, Clone)]
pub struct RankFactorization {
    pub rank: usize,
    /// `rows x rank`, orthonormal columns spanning the image.
    pub column_space: Matrix,
    /// `cols x (cols - rank)`, orthonormal columns spanning the kernel.
    pub null_space: Matrix,
    /// Descending.
    pub singular_values: Vec<f64>,
}

pub fn ensure_finite(a: &Matrix) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidMatrix)
    }
}

pub fn ensure_square(a: &Matrix, what: &str) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(shape(format!("{what} must be square, got {}x{}", a.nrows(), a.ncols())))
    }
}

/// Full SVD with singular values sorted in descending order.
///
/// Returns `(sigma, u, v)` where `u` is `rows x min(rows, cols)` and `v` is
/// always `cols x cols`, so the trailing columns of `v` span the kernel.
/// `sigma` has `cols` entries (zero-padded for wide inputs).
fn sorted_svd(a: &Matrix) -> (Vec<f64>, Matrix) {
    let (m, n) = a.shape();
    // nalgebra returns a thin V^T; pad with zero rows so V is square.
    let padded = if m < n { a.clone().resize(n, n, 0.0) } else { a.clone() };
    // U is not requested: on some rank-deficient inputs nalgebra's U does not
    // recompose A, while V stays reliable.
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sigma = svd.singular_values;

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let sv: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    let mut v = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        v.set_column(dst, &v_t.row(src).transpose());
    }
    (sv, v)
}

/// Singular values in descending order.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Numerical rank with orthonormal image/kernel bases.
///
/// The rank counts singular values strictly above `tol * sigma_1`; it is 0
/// when `sigma_1 = 0`.
pub fn rank_factor(a: &Matrix, tol: f64) -> Result<RankFactorization> {
    ensure_finite(a)?;
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(RankFactorization {
            rank: 0,
            column_space: Matrix::zeros(m, 0),
            null_space: Matrix::identity(n, n),
            singular_values: Vec::new(),
        });
    }
    let (sv, v) = sorted_svd(a);
    let top = sv[0];
    let rank = if top == 0.0 {
        0
    } else {
        sv.iter().take(m.min(n)).filter(|&&s| s > tol * top).count()
    };
    Ok(RankFactorization {
        rank,
        // leading right singular vectors of A^T are the left ones of A
        column_space: sorted_svd(&a.transpose()).1.columns(0, rank).into_owned(),
        null_space: v.columns(rank, n - rank).into_owned(),
        singular_values: sv.into_iter().take(m.min(n)).collect(),
    })
}

/// Orthonormal basis of the `dim` right-singular directions with the
/// smallest singular values, together with the singular value just above
/// the cut (`None` when `dim == cols`).
pub(crate) fn trailing_right_vectors(a: &Matrix, dim: usize) -> (Matrix, Option<f64>) {
    let (m, n) = a.shape();
    assert!(dim <= n);
    if m == 0 || n == 0 {
        return (Matrix::identity(n, n).columns(0, dim).into_owned(), None);
    }
    let (sv, v) = sorted_svd(a);
    let cut = n - dim;
    let above = if cut == 0 { None } else { sv.get(cut - 1).copied() };
    (v.columns(cut, dim).into_owned(), above)
}

/// `A^{-1}`, refusing matrices with `sigma_min <= tol * sigma_max`.
pub fn inverse(a: &Matrix, tol: f64) -> Result<Matrix> {
    ensure_finite(a)?;
    ensure_square(a, "inverse input")?;
    let sv = singular_values(a);
    let (max, min) = (sv[0], *sv.last().unwrap());
    if max == 0.0 || min <= tol * max {
        let ratio = if max == 0.0 { 0.0 } else { min / max };
        return Err(Error::SingularMatrix { ratio });
    }
    a.clone()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularMatrix { ratio: min / max })
}

/// Scaling-and-squaring exponential: halve until `||A||_F / 2^s <= 0.5`,
/// sum an 18-term Taylor series, then square `s` times.
pub fn mat_exp(a: &Matrix) -> Result<Matrix> {
    ensure_square(a, "matrix exponential input")?;
    ensure_finite(a)?;
    const TERMS: usize = 18;
    let n = a.nrows();
    let norm = a.norm();
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let scaled = a / 2f64.powi(squarings as i32);
    // Horner: I + X/1 (I + X/2 (I + ... (I + X/18)))
    let id = Matrix::identity(n, n);
    let mut acc = id.clone();
    for k in (1..=TERMS).rev() {
        acc = &id + (&scaled * acc) / k as f64;
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    Ok(acc)
}

pub fn det(a: &Matrix) -> f64 {
    a.determinant()
}

/// Eigenvalues of the symmetric part `(A + A^T)/2`, ascending.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// `||a - b||_F / max(||a||_F, ||b||_F)`, or 0 when both vanish.
pub fn rel_diff(a: &Matrix, b: &Matrix) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Vector analogue of [`rel_diff`] with a floor of 1 on the scale, so values
/// near zero are compared absolutely.
pub fn rel_diff_vec(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm() / 1f64.max(a.norm()).max(b.norm())
}

/// Scalar analogue of [`rel_diff_vec`].
pub fn rel_diff_scalar(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}
