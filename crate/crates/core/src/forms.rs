//! Geometric structures: non-degenerate bilinear forms `b(x, y) = x^T M y`
//! and the geometric pair `(b, B)` with `<x, y> = b(x, B y)`.

use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::numerics::{self, ensure_finite, ensure_square, Matrix, Vector};

/// Named families of geometric structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "k")]
pub enum StructureKind {
    Euclidean,
    /// Symmetric with `k` negative directions.
    PseudoEuclidean(usize),
    Minkowski,
    Symplectic,
    General,
}

impl StructureKind {
    pub fn label(&self) -> &'static str {
        match self {
            StructureKind::Euclidean => "euclidean",
            StructureKind::PseudoEuclidean(_) => "pseudo_euclidean",
            StructureKind::Minkowski => "minkowski",
            StructureKind::Symplectic => "symplectic",
            StructureKind::General => "general",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureClass {
    pub kind: StructureKind,
    /// `(p, q)`: positive and negative eigenvalue counts, for symmetric forms.
    pub signature: Option<(usize, usize)>,
}

/// A non-degenerate real bilinear form on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearForm {
    gram: Matrix,
    tol: f64,
}

impl BilinearForm {
    /// Accepts `m` iff `sigma_min(m) > tol * sigma_max(m)`.
    pub fn from_matrix(m: Matrix, tol: f64) -> Result<Self> {
        ensure_finite(&m)?;
        ensure_square(&m, "gram matrix")?;
        if m.nrows() == 0 {
            return Err(shape("gram matrix must be at least 1x1"));
        }
        let sv = numerics::singular_values(&m);
        let (sigma_max, sigma_min) = (sv[0], *sv.last().unwrap());
        if sigma_max == 0.0 || sigma_min <= tol * sigma_max {
            return Err(Error::DegenerateForm { sigma_min, sigma_max });
        }
        Ok(Self { gram: m, tol })
    }

    /// Constructors for the named structures: `I`, `diag(1..1, -1..-1)` and
    /// the block matrix `[[0, I], [-I, 0]]`.
    pub fn canonical(kind: StructureKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameters("dimension must be positive".into()));
        }
        let gram = match kind {
            StructureKind::Euclidean => Matrix::identity(n, n),
            StructureKind::Minkowski | StructureKind::PseudoEuclidean(_) => {
                let k = match kind {
                    StructureKind::PseudoEuclidean(k) => k,
                    _ => 1,
                };
                if k == 0 || k >= n {
                    return Err(Error::InvalidParameters(format!(
                        "pseudo-Euclidean index k = {k} must satisfy 1 <= k <= n - 1 (n = {n})"
                    )));
                }
                Matrix::from_diagonal(&Vector::from_fn(n, |i, _| if i < n - k { 1.0 } else { -1.0 }))
            }
            StructureKind::Symplectic => {
                if !n.is_multiple_of(2) {
                    return Err(Error::InvalidParameters(format!(
                        "symplectic structure needs even dimension, got {n}"
                    )));
                }
                let h = n / 2;
                let mut m = Matrix::zeros(n, n);
                for i in 0..h {
                    m[(i, h + i)] = 1.0;
                    m[(h + i, i)] = -1.0;
                }
                m
            }
            StructureKind::General => {
                return Err(Error::InvalidParameters(
                    "no canonical matrix for a general structure".into(),
                ))
            }
        };
        Self::from_matrix(gram, numerics::tol::NON_DEGENERATE)
    }

    pub fn n(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `x^T M y`.
    pub fn evaluate(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let n = self.n();
        if x.len() != n || y.len() != n {
            return Err(shape(format!(
                "vectors of length {} and {} for a form on R^{n}",
                x.len(),
                y.len()
            )));
        }
        Ok(x.dot(&(&self.gram * y)))
    }

    /// Symmetric forms are classified by the signature of `(M + M^T)/2`,
    /// skew forms are symplectic, anything else is general.
    pub fn classify(&self, tol: f64) -> StructureClass {
        let m = &self.gram;
        let norm = m.norm();
        let mt = m.transpose();
        if (m - &mt).norm() <= tol * norm {
            let ev = numerics::symmetric_eigenvalues(m);
            let cut = tol * ev.iter().fold(0f64, |a, v| a.max(v.abs()));
            let q = ev.iter().filter(|&&v| v < -cut).count();
            let p = ev.iter().filter(|&&v| v > cut).count();
            let kind = match q {
                0 => StructureKind::Euclidean,
                1 => StructureKind::Minkowski,
                q => StructureKind::PseudoEuclidean(q),
            };
            StructureClass { kind, signature: Some((p, q)) }
        } else if (m + &mt).norm() <= tol * norm {
            StructureClass { kind: StructureKind::Symplectic, signature: None }
        } else {
            StructureClass { kind: StructureKind::General, signature: None }
        }
    }

    pub fn geometric_pair(&self) -> GeometricPair {
        GeometricPair::new(self.clone())
    }
}

/// A form together with the unique `B` such that `<x, y> = b(x, B y)`.
///
/// With `b(x, y) = x^T M y` this forces `M B = I`, i.e. `B = M^{-1}`.
#[derive(Debug, Clone)]
pub struct GeometricPair {
    form: BilinearForm,
    b: Matrix,
    b_t_inv: Matrix,
}

impl GeometricPair {
    pub fn new(form: BilinearForm) -> Self {
        // non-degeneracy was certified at construction
        let b = numerics::inverse(form.gram(), 0.0).expect("non-degenerate form is invertible");
        let b_t_inv = form.gram().transpose();
        Self { form, b, b_t_inv }
    }

    pub fn form(&self) -> &BilinearForm {
        &self.form
    }

    pub fn n(&self) -> usize {
        self.form.n()
    }

    /// The operator `B`.
    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// `B^{-1}`, which is the gram matrix itself.
    pub fn b_inv(&self) -> &Matrix {
        self.form.gram()
    }

    /// `(B^T)^{-1} = M^T`.
    pub fn b_t_inv(&self) -> &Matrix {
        &self.b_t_inv
    }

    /// `|| M B - I ||_F`.
    pub fn pair_residual(&self) -> f64 {
        let n = self.n();
        (self.form.gram() * &self.b - Matrix::identity(n, n)).norm()
    }

    /// Relative residual of `<x, y> = b(x, B y)` at one pair of vectors,
    /// scaled by `|x| |M| |B| |y|`.
    pub fn law_residual(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let lhs = x.dot(y);
        let rhs = self.form.evaluate(x, &(&self.b * y))?;
        let scale = x.norm() * y.norm() * self.form.gram().norm() * self.b.norm();
        Ok(if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(n, n, data)
    }

    fn v(data: &[f64]) -> Vector {
        Vector::from_row_slice(data)
    }

    #[test]
    fn construction() {
        let e = BilinearForm::from_matrix(Matrix::identity(3, 3), 1e-10).unwrap();
        assert_eq!(e.classify(1e-10).kind, StructureKind::Euclidean);

        let err = BilinearForm::from_matrix(m(2, &[1.0, 2.0, 2.0, 4.0]), 1e-10).unwrap_err();
        match err {
            Error::DegenerateForm { sigma_min, sigma_max } => {
                assert!(sigma_min < 1e-12 && sigma_max > 4.0)
            }
            other => panic!("{other:?}"),
        }

        assert!(BilinearForm::from_matrix(m(2, &[0.0, 1.0, -1.0, 0.0]), 1e-10).is_ok());
        assert!(BilinearForm::from_matrix(Matrix::zeros(2, 3), 1e-10).is_err());
    }

    #[test]
    fn evaluation() {
        let e = BilinearForm::canonical(StructureKind::Euclidean, 2).unwrap();
        assert_eq!(e.evaluate(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        let mk = BilinearForm::canonical(StructureKind::Minkowski, 2).unwrap();
        assert_eq!(mk.evaluate(&v(&[1.0, 1.0]), &v(&[1.0, 1.0])).unwrap(), 0.0);
        let s = BilinearForm::canonical(StructureKind::Symplectic, 2).unwrap();
        assert_eq!(s.evaluate(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 1.0);
        assert!(matches!(s.evaluate(&v(&[1.0]), &v(&[0.0, 1.0])), Err(Error::ShapeMismatch(_))));
    }

    /// Oracle: `b(e_i, B e_j) = delta_ij` on the standard basis.
    fn assert_basis_oracle(p: &GeometricPair) {
        let n = p.n();
        for i in 0..n {
            for j in 0..n {
                let ei = Vector::from_fn(n, |k, _| (k == i) as u8 as f64);
                let ej = Vector::from_fn(n, |k, _| (k == j) as u8 as f64);
                let val = p.form().evaluate(&ei, &(p.b() * ej)).unwrap();
                assert!((val - (i == j) as u8 as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pairs() {
        let p = BilinearForm::canonical(StructureKind::Euclidean, 3).unwrap().geometric_pair();
        assert_eq!(p.b(), &Matrix::identity(3, 3));

        let p = BilinearForm::from_matrix(m(2, &[1.0, 0.0, 0.0, -1.0]), 1e-10).unwrap().geometric_pair();
        assert_basis_oracle(&p);
        assert!((p.b() - m(2, &[1.0, 0.0, 0.0, -1.0])).norm() < 1e-15);

        let p = BilinearForm::from_matrix(m(2, &[1.0, 1.0, 0.0, 1.0]), 1e-10).unwrap().geometric_pair();
        assert_basis_oracle(&p);
        assert!((p.b() - m(2, &[1.0, -1.0, 0.0, 1.0])).norm() < 1e-15);
        assert!(p.pair_residual() < 1e-15);
    }

    #[test]
    fn classification() {
        let mk = BilinearForm::from_matrix(
            Matrix::from_diagonal(&v(&[1.0, 1.0, 1.0, -1.0])),
            1e-10,
        )
        .unwrap();
        let c = mk.classify(1e-10);
        assert_eq!(c.kind, StructureKind::Minkowski);
        assert_eq!(c.signature, Some((3, 1)));

        let s = BilinearForm::from_matrix(m(2, &[0.0, 1.0, -1.0, 0.0]), 1e-10).unwrap();
        assert_eq!(s.classify(1e-10).kind, StructureKind::Symplectic);

        let g = BilinearForm::from_matrix(m(2, &[1.0, 1.0, 0.0, 1.0]), 1e-10).unwrap();
        assert_eq!(g.classify(1e-10).kind, StructureKind::General);

        let pe = BilinearForm::canonical(StructureKind::PseudoEuclidean(2), 5).unwrap();
        let c = pe.classify(1e-10);
        assert_eq!(c.kind, StructureKind::PseudoEuclidean(2));
        assert_eq!(c.signature, Some((3, 2)));
    }

    #[test]
    fn canonical_constructors() {
        assert_eq!(
            BilinearForm::canonical(StructureKind::Euclidean, 2).unwrap().gram(),
            &Matrix::identity(2, 2)
        );
        assert_eq!(
            BilinearForm::canonical(StructureKind::Minkowski, 4).unwrap().gram(),
            &Matrix::from_diagonal(&v(&[1.0, 1.0, 1.0, -1.0]))
        );
        assert!(matches!(
            BilinearForm::canonical(StructureKind::Symplectic, 3),
            Err(Error::InvalidParameters(_))
        ));
        assert!(BilinearForm::canonical(StructureKind::PseudoEuclidean(3), 3).is_err());
        assert!(BilinearForm::canonical(StructureKind::PseudoEuclidean(0), 3).is_err());
        assert!(BilinearForm::canonical(StructureKind::General, 3).is_err());

        for n in 2..=8 {
            for kind in [StructureKind::Euclidean, StructureKind::Minkowski, StructureKind::Symplectic]
            {
                if let Ok(f) = BilinearForm::canonical(kind, n) {
                    assert_eq!(f.classify(1e-10).kind, kind);
                }
            }
            for k in 2..n {
                let f = BilinearForm::canonical(StructureKind::PseudoEuclidean(k), n).unwrap();
                assert_eq!(f.classify(1e-10).kind, StructureKind::PseudoEuclidean(k));
            }
        }
    }
}
