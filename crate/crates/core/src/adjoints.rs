//! Left and right adjoints with respect to a geometric structure.
//!
//! `A^{*L}` and `A^{*R}` are defined by `b(A^{*L} x, y) = b(x, A y)` and
//! `b(A x, y) = b(x, A^{*R} y)`; in terms of the pair `(b, B)` they are
//! `B^T A^T (B^T)^{-1}` and `B A^T B^{-1}`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::forms::GeometricPair;
use crate::numerics::{self, ensure_finite, ensure_square, rel_diff, Matrix};
use crate::report::CheckReport;
use crate::sampling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" | "L" | "l" => Ok(Side::Left),
            "right" | "R" | "r" => Ok(Side::Right),
            other => Err(Error::InvalidParameters(format!("side must be left or right, got `{other}`"))),
        }
    }
}

/// An endomorphism of `R^n`, acting by left multiplication.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator(Matrix);

impl LinearOperator {
    pub fn new(matrix: Matrix) -> Result<Self> {
        ensure_square(&matrix, "operator")?;
        ensure_finite(&matrix)?;
        Ok(Self(matrix))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl From<LinearOperator> for Matrix {
    fn from(op: LinearOperator) -> Matrix {
        op.0
    }
}

pub(crate) fn check_dim(pair: &GeometricPair, a: &Matrix) -> Result<()> {
    let n = pair.n();
    if a.shape() != (n, n) {
        return Err(shape(format!(
            "operator is {}x{} but the structure lives on R^{n}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Adjoint of a raw matrix; the caller guarantees matching dimensions.
pub(crate) fn adjoint_matrix(pair: &GeometricPair, a: &Matrix, side: Side) -> Matrix {
    match side {
        Side::Left => pair.b().transpose() * a.transpose() * pair.b_t_inv(),
        Side::Right => pair.b() * a.transpose() * pair.b_inv(),
    }
}

pub fn adjoint(pair: &GeometricPair, a: &LinearOperator, side: Side) -> Result<LinearOperator> {
    check_dim(pair, a.matrix())?;
    Ok(LinearOperator(adjoint_matrix(pair, a.matrix(), side)))
}

/// Worst relative residual of the defining identities over `samples` random
/// vector pairs, scaled by `|A| |x| |y| |M|`.
pub fn defining_residual<R: Rng + ?Sized>(
    pair: &GeometricPair,
    a: &Matrix,
    side: Side,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let form = pair.form();
    let star = adjoint_matrix(pair, a, side);
    let scale_base = a.norm() * form.gram().norm();
    let mut worst = 0f64;
    for _ in 0..samples {
        let x = sampling::uniform_vector(rng, pair.n(), 1.0);
        let y = sampling::uniform_vector(rng, pair.n(), 1.0);
        let (lhs, rhs) = match side {
            Side::Left => (form.evaluate(&(&star * &x), &y), form.evaluate(&x, &(a * &y))),
            Side::Right => (form.evaluate(&(a * &x), &y), form.evaluate(&x, &(&star * &y))),
        };
        let scale = scale_base * x.norm() * y.norm();
        let r = (lhs.unwrap() - rhs.unwrap()).abs();
        worst = worst.max(if scale == 0.0 { r } else { r / scale });
    }
    worst
}

/// Whether the involution-type identities hold, and whether that agrees with
/// the matrix predicate `B^T = eps B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvolutionReport {
    /// `Some(+1)` / `Some(-1)` when `||B^T - eps B|| <= tol ||B||`.
    pub epsilon: Option<i8>,
    pub samples: usize,
    /// `max ||(A^{*L})^{*L} - A||` (relative) over the sample.
    pub left_involution_residual: f64,
    /// `max ||(A^{*R})^{*R} - A||` (relative).
    pub right_involution_residual: f64,
    /// `max ||A^{*L} - A^{*R}||` (relative).
    pub left_right_residual: f64,
    /// All three identities hold exactly when the predicate does.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointReport {
    pub checks: Vec<CheckReport>,
    pub involution: InvolutionReport,
}

impl AdjointReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.involution.consistent
    }

    pub fn get(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `eps` with `||B^T - eps B|| <= tol ||B||`, if any.
pub fn transpose_sign(pair: &GeometricPair, tol: f64) -> Option<i8> {
    let b = pair.b();
    let bt = b.transpose();
    let scale = b.norm();
    if (&bt - b).norm() <= tol * scale {
        Some(1)
    } else if (&bt + b).norm() <= tol * scale {
        Some(-1)
    } else {
        None
    }
}

/// Quantifies the involution identities over random operators.
pub fn involution_report<R: Rng + ?Sized>(
    pair: &GeometricPair,
    samples: usize,
    tol: f64,
    predicate_tol: f64,
    rng: &mut R,
) -> InvolutionReport {
    let n = pair.n();
    let (mut ll, mut rr, mut lr) = (0f64, 0f64, 0f64);
    for _ in 0..samples {
        let a = sampling::uniform_matrix(rng, n, n);
        let l = adjoint_matrix(pair, &a, Side::Left);
        let r = adjoint_matrix(pair, &a, Side::Right);
        ll = ll.max(rel_diff(&adjoint_matrix(pair, &l, Side::Left), &a));
        rr = rr.max(rel_diff(&adjoint_matrix(pair, &r, Side::Right), &a));
        lr = lr.max(rel_diff(&l, &r));
    }
    let epsilon = transpose_sign(pair, predicate_tol);
    let predicate = epsilon.is_some();
    let consistent = [ll, rr, lr].iter().all(|&res| (res <= tol) == predicate);
    InvolutionReport {
        epsilon,
        samples,
        left_involution_residual: ll,
        right_involution_residual: rr,
        left_right_residual: lr,
        consistent,
    }
}

pub const INVOLUTION_SAMPLES: usize = 25;

/// Evaluates the algebraic identities satisfied by left/right adjoints for a
/// pair of operators. Residuals are relative Frobenius distances.
pub fn check_adjoint_identities<R: Rng + ?Sized>(
    pair: &GeometricPair,
    a1: &LinearOperator,
    a2: &LinearOperator,
    tol: f64,
    rng: &mut R,
) -> Result<AdjointReport> {
    let (a1, a2) = (a1.matrix(), a2.matrix());
    check_dim(pair, a1)?;
    check_dim(pair, a2)?;
    let n = pair.n();
    let adj = |a: &Matrix, s: Side| adjoint_matrix(pair, a, s);

    let mut defining = CheckReport::new("adjoint.defining", tol);
    for a in [a1, a2] {
        for side in Side::BOTH {
            defining.record(defining_residual(pair, a, side, 20, rng));
        }
    }

    let mut linearity = CheckReport::new("adjoint.linearity", tol);
    let (l1, l2): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    for side in Side::BOTH {
        let lhs = adj(&(a1 * l1 + a2 * l2), side);
        let rhs = adj(a1, side) * l1 + adj(a2, side) * l2;
        linearity.record(rel_diff(&lhs, &rhs));
    }

    let mut double = CheckReport::new("adjoint.double_cancellation", tol);
    for a in [a1, a2] {
        for side in Side::BOTH {
            double.record(rel_diff(&adj(&adj(a, side), side.flip()), a));
        }
    }

    let mut anti = CheckReport::new("adjoint.anti_multiplicative", tol);
    let mut commutator = CheckReport::new("adjoint.commutator", tol);
    let bracket = |x: &Matrix, y: &Matrix| x * y - y * x;
    for side in Side::BOTH {
        anti.record(rel_diff(&adj(&(a1 * a2), side), &(adj(a2, side) * adj(a1, side))));
        commutator.record(rel_diff(
            &adj(&bracket(a1, a2), side),
            &bracket(&adj(a2, side), &adj(a1, side)),
        ));
    }

    let mut inverse = CheckReport::new("adjoint.inverse", tol);
    if let Ok(inv) = numerics::inverse(a1, numerics::tol::RANK) {
        for side in Side::BOTH {
            match numerics::inverse(&adj(a1, side), numerics::tol::RANK) {
                Ok(star_inv) => inverse.record(rel_diff(&adj(&inv, side), &star_inv)),
                Err(_) => inverse.record(f64::MAX),
            }
        }
    } else {
        inverse.vacuous = true;
    }

    let mut det = CheckReport::new("adjoint.determinant", tol);
    let d = numerics::det(a1);
    for side in Side::BOTH {
        let ds = numerics::det(&adj(a1, side));
        det.record((ds - d).abs() / 1f64.max(d.abs()).max(a1.norm().powi(n as i32)));
    }

    let mut special = CheckReport::new("adjoint.special_operators", tol);
    let id = Matrix::identity(n, n);
    let b = pair.b();
    special.record(rel_diff(&adj(&id, Side::Left), &id));
    special.record(rel_diff(&adj(&id, Side::Right), &id));
    special.record(rel_diff(&adj(b, Side::Left), &b.transpose()));
    special.record(rel_diff(&adj(b, Side::Right), &(b * b.transpose() * pair.b_inv())));

    let involution = involution_report(pair, INVOLUTION_SAMPLES, tol, numerics::tol::CLASSIFY, rng);

    Ok(AdjointReport {
        checks: vec![defining, linearity, double, anti, inverse, commutator, det, special],
        involution,
    })
}
