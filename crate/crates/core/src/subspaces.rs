//! Subspaces of `R^n` stored as orthonormal bases, and their left/right
//! b-orthogonal complements.
//!
//! Storage is Euclidean-orthonormal regardless of `b`; b-orthogonality is
//! computed, never assumed. Equality is tested through orthogonal projectors.

use crate::adjoints::{adjoint_matrix, check_dim, LinearOperator, Side};
use crate::error::{shape, Result};
use crate::forms::{BilinearForm, GeometricPair};
use crate::numerics::{self, Matrix, Vector};
use crate::report::{CheckReport, IdentityReport};

#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Self { basis: Matrix::zeros(n, 0) }
    }

    pub fn full(n: usize) -> Self {
        Self { basis: Matrix::identity(n, n) }
    }

    /// Orthonormal basis of the span of `vectors` (numerical rank at `tol`).
    pub fn from_vectors(n: usize, vectors: &[Vector], tol: f64) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != n) {
            return Err(shape(format!("vector of length {} in R^{n}", v.len())));
        }
        if vectors.is_empty() {
            return Ok(Self::zero(n));
        }
        let cols = Matrix::from_columns(vectors);
        Self::span_of_columns(&cols, tol)
    }

    /// Span of the columns of `a`.
    pub fn span_of_columns(a: &Matrix, tol: f64) -> Result<Self> {
        let f = numerics::rank_factor(a, tol)?;
        Ok(Self { basis: f.column_space })
    }

    /// Wraps a basis that is already orthonormal.
    pub(crate) fn from_orthonormal(basis: Matrix) -> Self {
        Self { basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vector> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    /// Orthogonal projector `Q Q^T`.
    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }

    /// `|| P_V - P_W ||_F`.
    pub fn distance(&self, other: &Subspace) -> Result<f64> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(shape(format!(
                "subspaces of R^{} and R^{}",
                self.ambient_dim(),
                other.ambient_dim()
            )));
        }
        Ok((self.projector() - other.projector()).norm())
    }

    /// Equal dimensions and projector distance within `tol`; also returns the
    /// distance.
    pub fn equals(&self, other: &Subspace, tol: f64) -> Result<(bool, f64)> {
        let d = self.distance(other)?;
        Ok((self.dim() == other.dim() && d <= tol, d))
    }
}

/// Left (`b(w, v) = 0`) or right (`b(v, w) = 0`) complement of `v`.
///
/// The result always has dimension `n - dim V`.
pub fn perp(form: &BilinearForm, v: &Subspace, side: Side) -> Result<Subspace> {
    let n = form.n();
    if v.ambient_dim() != n {
        return Err(shape(format!("subspace of R^{} against a form on R^{n}", v.ambient_dim())));
    }
    let vt = v.basis().transpose();
    let constraints = match side {
        Side::Left => vt * form.gram().transpose(),
        Side::Right => vt * form.gram(),
    };
    let (basis, above) = numerics::trailing_right_vectors(&constraints, n - v.dim());
    debug_assert!(above.is_none_or(|s| s > 0.0));
    Ok(Subspace::from_orthonormal(basis))
}

pub fn kernel(a: &LinearOperator, tol: f64) -> Result<Subspace> {
    Ok(Subspace::from_orthonormal(numerics::rank_factor(a.matrix(), tol)?.null_space))
}

pub fn image(a: &LinearOperator, tol: f64) -> Result<Subspace> {
    Ok(Subspace::from_orthonormal(numerics::rank_factor(a.matrix(), tol)?.column_space))
}

/// Checks the kernel/image relations between `A`, `A^{*L}` and `A^{*R}`
/// together with the double-complement law on `Im A` and `Ker A`.
///
/// Each entry records the projector distance of one asserted equality;
/// `rank_tol` drives the kernel/image rank decisions and `tol` bounds the
/// distances.
pub fn check_kernel_image_theorem(
    pair: &GeometricPair,
    a: &LinearOperator,
    rank_tol: f64,
    tol: f64,
) -> Result<IdentityReport> {
    let a = a.matrix();
    check_dim(pair, a)?;
    let form = pair.form();
    let n = pair.n();
    let star_l = LinearOperator::new(adjoint_matrix(pair, a, Side::Left))?;
    let star_r = LinearOperator::new(adjoint_matrix(pair, a, Side::Right))?;
    let a_op = LinearOperator::new(a.clone())?;

    let ker_a = kernel(&a_op, rank_tol)?;
    let im_a = image(&a_op, rank_tol)?;
    let ker_l = kernel(&star_l, rank_tol)?;
    let ker_r = kernel(&star_r, rank_tol)?;
    let im_l = image(&star_l, rank_tol)?;
    let im_r = image(&star_r, rank_tol)?;
    let p = |v: &Subspace, s: Side| perp(form, v, s);
    use Side::{Left as L, Right as R};

    let equalities: Vec<(&str, Subspace, Subspace)> = vec![
        ("ker(A*L) = im(A)^L", ker_l.clone(), p(&im_a, L)?),
        ("ker(A*R) = im(A)^R", ker_r.clone(), p(&im_a, R)?),
        ("ker(A*L)^R = ker(A*R)^L", p(&ker_l, R)?, p(&ker_r, L)?),
        ("im(A*L) = ker(A)^L", im_l.clone(), p(&ker_a, L)?),
        ("im(A*R) = ker(A)^R", im_r.clone(), p(&ker_a, R)?),
        ("im(A*L)^R = im(A*R)^L", p(&im_l, R)?, p(&im_r, L)?),
        ("ker(A) = im(A*L)^R", ker_a.clone(), p(&im_l, R)?),
        ("ker(A) = im(A*R)^L", ker_a.clone(), p(&im_r, L)?),
        ("im(A) = ker(A*L)^R", im_a.clone(), p(&ker_l, R)?),
        ("im(A) = ker(A*R)^L", im_a.clone(), p(&ker_r, L)?),
        ("(im(A)^L)^R = im(A)", p(&p(&im_a, L)?, R)?, im_a.clone()),
        ("(im(A)^R)^L = im(A)", p(&p(&im_a, R)?, L)?, im_a.clone()),
        ("(ker(A)^L)^R = ker(A)", p(&p(&ker_a, L)?, R)?, ker_a.clone()),
        ("(ker(A)^R)^L = ker(A)", p(&p(&ker_a, R)?, L)?, ker_a.clone()),
    ];

    let mut checks = Vec::with_capacity(equalities.len() + 1);
    for (name, lhs, rhs) in equalities {
        let mut c = CheckReport::new(name, tol);
        let d = lhs.distance(&rhs)?;
        // unequal dimensions always give distance >= 1
        c.record(if lhs.dim() == rhs.dim() { d } else { d.max(1.0) });
        checks.push(c);
    }
    let mut rn = CheckReport::new("rank(A) + dim ker(A) = n", 0.0);
    rn.record((im_a.dim() + ker_a.dim()).abs_diff(n) as f64);
    checks.push(rn);
    Ok(IdentityReport { checks })
}
