//! The symmetry group `G_b = {A : A B A^T = B}` and its Lie algebra
//! `g_b = {X : X B = -B X^T}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adjoints::{adjoint_matrix, check_dim, LinearOperator, Side};
use crate::error::Result;
use crate::forms::{GeometricPair, StructureKind};
use crate::numerics::{self, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMembership {
    pub member: bool,
    /// `||A B A^T - B||_F / ||B||_F`.
    pub residual: f64,
    /// `|det(A)^2 - 1|`.
    pub det_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraMembership {
    pub member: bool,
    /// `||X B + B X^T||_F / (||X||_F ||B||_F)`.
    pub residual: f64,
    /// `||X^{*L} + X||_F / ||X||_F`.
    pub adjoint_residual: f64,
}

pub fn in_group(pair: &GeometricPair, a: &LinearOperator, tol: f64) -> Result<GroupMembership> {
    let a = a.matrix();
    check_dim(pair, a)?;
    let b = pair.b();
    let residual = (a * b * a.transpose() - b).norm() / b.norm();
    let d = numerics::det(a);
    Ok(GroupMembership { member: residual <= tol, residual, det_residual: (d * d - 1.0).abs() })
}

pub fn in_algebra(pair: &GeometricPair, x: &LinearOperator, tol: f64) -> Result<AlgebraMembership> {
    let x = x.matrix();
    check_dim(pair, x)?;
    let b = pair.b();
    let xn = x.norm();
    if xn == 0.0 {
        return Ok(AlgebraMembership { member: true, residual: 0.0, adjoint_residual: 0.0 });
    }
    let residual = (x * b + b * x.transpose()).norm() / (xn * b.norm());
    let adjoint_residual = (adjoint_matrix(pair, x, Side::Left) + x).norm() / xn;
    Ok(AlgebraMembership { member: residual <= tol, residual, adjoint_residual })
}

/// A Frobenius-orthonormal basis of `g_b`.
#[derive(Debug, Clone)]
pub struct AlgebraBasis {
    n: usize,
    elements: Vec<LinearOperator>,
}

impl AlgebraBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[LinearOperator] {
        &self.elements
    }

    /// `sum c_i X_i`.
    pub fn combine(&self, coefficients: &[f64]) -> Matrix {
        assert_eq!(coefficients.len(), self.dim());
        self.elements
            .iter()
            .zip(coefficients)
            .fold(Matrix::zeros(self.n, self.n), |acc, (x, c)| acc + x.matrix() * *c)
    }

    /// `exp(sum c_i X_i)` with `c_i ~ U(-scale, scale)`. This only reaches the
    /// identity component of `G_b`.
    pub fn sample_element<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> LinearOperator {
        if self.elements.is_empty() || scale == 0.0 {
            return LinearOperator::identity(self.n);
        }
        let c: Vec<f64> = (0..self.dim()).map(|_| rng.random_range(-scale..=scale)).collect();
        let x = self.combine(&c);
        LinearOperator::new(numerics::mat_exp(&x).expect("square generator")).expect("finite exponential")
    }
}

/// Null space of the linear map `X -> X B + B X^T`, assembled column by
/// column from its action on the elementary matrices.
pub fn algebra_basis(pair: &GeometricPair, tol: f64) -> AlgebraBasis {
    let n = pair.n();
    let b = pair.b();
    let mut map = Matrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            // E_ij B has row i equal to row j of B; B E_ij^T has column i equal to column j of B
            let mut img = Matrix::zeros(n, n);
            img.row_mut(i).copy_from(&b.row(j));
            let col = b.column(j).into_owned();
            let mut target = img.column_mut(i);
            target += &col;
            map.set_column(i * n + j, &Vector::from_iterator(n * n, img.transpose().iter().copied()));
        }
    }
    let kernel = numerics::rank_factor(&map, tol).expect("finite map").null_space;
    let elements = kernel
        .column_iter()
        .map(|c| LinearOperator::new(Matrix::from_row_slice(n, n, c.as_slice())).expect("finite"))
        .collect();
    AlgebraBasis { n, elements }
}

pub const DEFAULT_SAMPLE_SCALE: f64 = 1.0;

/// Deterministic exp-sampled element of `G_b` for a given seed.
pub fn sample_group_element(pair: &GeometricPair, seed: u64, scale: f64) -> LinearOperator {
    let basis = algebra_basis(pair, numerics::tol::RANK);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    basis.sample_element(&mut rng, scale)
}

/// Reflections in `G_b` outside the identity component, for the canonical
/// symmetric structures: a space reflection and, for indefinite forms, a
/// time reversal. Symplectic groups are connected, so none are needed there.
pub fn canonical_reflections(kind: StructureKind, n: usize) -> Vec<Matrix> {
    let flip = |idx: usize| {
        let mut d = Matrix::identity(n, n);
        d[(idx, idx)] = -1.0;
        d
    };
    match kind {
        StructureKind::Euclidean => vec![flip(0)],
        StructureKind::Minkowski | StructureKind::PseudoEuclidean(_) => vec![flip(0), flip(n - 1)],
        StructureKind::Symplectic | StructureKind::General => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::BilinearForm;

    fn m(n: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(n, n, data)
    }

    fn op(a: Matrix) -> LinearOperator {
        LinearOperator::new(a).unwrap()
    }

    fn pair(kind: StructureKind, n: usize) -> GeometricPair {
        BilinearForm::canonical(kind, n).unwrap().geometric_pair()
    }

    fn general_2x2() -> GeometricPair {
        BilinearForm::from_matrix(m(2, &[1.0, 1.0, 0.0, 1.0]), 1e-10).unwrap().geometric_pair()
    }

    #[test]
    fn group_membership() {
        for p in [pair(StructureKind::Euclidean, 3), pair(StructureKind::Symplectic, 4), general_2x2()] {
            let r = in_group(&p, &LinearOperator::identity(p.n()), 1e-12).unwrap();
            assert!(r.member && r.residual == 0.0);
        }
        let t: f64 = 0.7;
        let boost = m(2, &[t.cosh(), t.sinh(), t.sinh(), t.cosh()]);
        assert!(in_group(&pair(StructureKind::Minkowski, 2), &op(boost), 1e-12).unwrap().member);

        let r = in_group(&pair(StructureKind::Euclidean, 2), &op(m(2, &[2.0, 0.0, 0.0, 1.0])), 1e-8).unwrap();
        assert!(!r.member);
        // ||diag(4,1) - I||_F / ||I||_F = 3 / sqrt 2
        assert!((r.residual - 3.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!((r.det_residual - 3.0).abs() < 1e-14);
    }

    #[test]
    fn algebra_membership() {
        let e = pair(StructureKind::Euclidean, 2);
        assert!(in_algebra(&e, &op(Matrix::zeros(2, 2)), 1e-12).unwrap().member);
        assert!(in_algebra(&e, &op(m(2, &[0.0, -1.0, 1.0, 0.0])), 1e-12).unwrap().member);
        assert!(!in_algebra(&e, &op(Matrix::identity(2, 2)), 1e-12).unwrap().member);

        let g = general_2x2();
        let r = in_algebra(&g, &op(m(2, &[1.0, 2.0, -2.0, -1.0])), 1e-12).unwrap();
        assert!(r.member && r.adjoint_residual < 1e-14);
    }

    #[test]
    fn algebra_dimensions() {
        assert_eq!(algebra_basis(&pair(StructureKind::Euclidean, 3), 1e-10).dim(), 3);
        assert_eq!(algebra_basis(&pair(StructureKind::Symplectic, 2), 1e-10).dim(), 3);
        assert_eq!(algebra_basis(&pair(StructureKind::Minkowski, 4), 1e-10).dim(), 6);
        assert_eq!(algebra_basis(&pair(StructureKind::Symplectic, 6), 1e-10).dim(), 21);

        let g = general_2x2();
        let basis = algebra_basis(&g, 1e-10);
        assert_eq!(basis.dim(), 1);
        let x = basis.elements()[0].matrix();
        let reference = m(2, &[1.0, 2.0, -2.0, -1.0]);
        let scale = x[(0, 0)];
        assert!((x / scale - reference).norm() < 1e-12);
        for el in basis.elements() {
            assert!(in_algebra(&g, el, 1e-12).unwrap().member);
        }
    }

    #[test]
    fn sampling() {
        let e = pair(StructureKind::Euclidean, 2);
        assert_eq!(sample_group_element(&e, 3, 0.0), LinearOperator::identity(2));
        let r = sample_group_element(&e, 3, 1.0);
        let a = r.matrix();
        assert!((a.transpose() * a - Matrix::identity(2, 2)).norm() < 1e-14);
        assert!((numerics::det(a) - 1.0).abs() < 1e-14);
        assert_eq!(r, sample_group_element(&e, 3, 1.0));

        let mk = pair(StructureKind::Minkowski, 2);
        let t: f64 = 0.4;
        let boost = numerics::mat_exp(&m(2, &[0.0, t, t, 0.0])).unwrap();
        assert!((&boost - m(2, &[t.cosh(), t.sinh(), t.sinh(), t.cosh()])).norm() < 1e-15);
        assert!(in_group(&mk, &op(boost), 1e-12).unwrap().member);
        let s = sample_group_element(&mk, 9, 2.0);
        assert!(in_group(&mk, &s, 1e-8).unwrap().member);
    }

    #[test]
    fn reflections_are_members() {
        for (kind, n) in [
            (StructureKind::Euclidean, 3),
            (StructureKind::Minkowski, 4),
            (StructureKind::PseudoEuclidean(2), 5),
        ] {
            let p = pair(kind, n);
            let refl = canonical_reflections(kind, n);
            assert!(!refl.is_empty());
            for r in refl {
                let g = in_group(&p, &op(r.clone()), 1e-14).unwrap();
                assert!(g.member);
                assert!((numerics::det(&r) + 1.0).abs() < 1e-14);
            }
        }
    }
}
