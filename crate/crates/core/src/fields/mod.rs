//! Scalar and vector fields given by expressions in `x1 .. xm`, with exact
//! symbolic derivatives and a central-difference oracle.

pub mod expr;
mod parser;
mod tape;

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{shape, Error, Result};
use crate::numerics::{self, Matrix, Vector};
use expr::Node;
use tape::Tape;

/// A smooth function `R^m -> R`.
#[derive(Clone)]
pub struct ScalarField {
    nvars: usize,
    expr: Node,
    gradient: OnceLock<Arc<Vec<ScalarField>>>,
    tape: OnceLock<Arc<Tape>>,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.expr == other.expr
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("nvars", &self.nvars)
            .field("expr", &self.expr.to_string())
            .finish()
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

impl ScalarField {
    pub fn parse(text: &str, nvars: usize) -> Result<Self> {
        Ok(Self::from_node(nvars, parser::parse_expr(text, nvars)?))
    }

    /// Wraps an expression tree. Panics if it mentions a variable beyond
    /// `nvars`.
    pub fn from_node(nvars: usize, expr: Node) -> Self {
        assert!(expr.var_bound() <= nvars, "expression uses more than {nvars} variables");
        Self { nvars, expr, gradient: OnceLock::new(), tape: OnceLock::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_node(nvars, expr::constant(c))
    }

    /// The coordinate function `x_{i+1}`.
    pub fn coordinate(nvars: usize, i: usize) -> Self {
        Self::from_node(nvars, expr::var(i))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn node(&self) -> &Node {
        &self.expr
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.nvars {
            return Err(shape(format!("point of length {} for a field in {} variables", x.len(), self.nvars)));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let v = self.tape.get_or_init(|| Arc::new(Tape::compile(&self.expr))).eval(x)?;
        if !v.is_finite() {
            return Err(Error::EvalDomain(format!("non-finite value {v}")));
        }
        Ok(v)
    }

    pub fn eval_at(&self, x: &Vector) -> Result<f64> {
        self.eval(x.as_slice())
    }

    /// Exact partial derivative with respect to the zero-based variable `i`.
    pub fn differentiate(&self, i: usize) -> Result<ScalarField> {
        if i >= self.nvars {
            return Err(Error::VariableOutOfRange { index: i + 1, nvars: self.nvars });
        }
        Ok(self.partials()[i].clone())
    }

    /// All first partials, computed once and cached.
    pub fn partials(&self) -> Arc<Vec<ScalarField>> {
        self.gradient
            .get_or_init(|| {
                Arc::new(
                    (0..self.nvars)
                        .map(|i| ScalarField::from_node(self.nvars, expr::derivative(&self.expr, i)))
                        .collect(),
                )
            })
            .clone()
    }

    pub fn grad(&self, x: &Vector) -> Result<Vector> {
        self.check_point(x.as_slice())?;
        let p = self.partials();
        let vals = p.iter().map(|d| d.eval_at(x)).collect::<Result<Vec<_>>>()?;
        Ok(Vector::from_vec(vals))
    }

    /// Hessian from symbolic second partials; entry `(i, j)` is
    /// `d/dx_j (d f / d x_i)`.
    pub fn hessian(&self, x: &Vector) -> Result<Matrix> {
        self.check_point(x.as_slice())?;
        let n = self.nvars;
        let p = self.partials();
        let mut h = Matrix::zeros(n, n);
        for (i, di) in p.iter().enumerate() {
            let second = di.partials();
            for j in 0..n {
                h[(i, j)] = second[j].eval_at(x)?;
            }
        }
        Ok(h)
    }

    /// Central differences with per-component step `h (1 + |x_i|)`.
    pub fn fd_grad(&self, x: &Vector, h: Option<f64>) -> Result<Vector> {
        self.check_point(x.as_slice())?;
        let h = h.unwrap_or(numerics::tol::FD_STEP);
        let mut g = Vector::zeros(self.nvars);
        let mut probe = x.clone();
        for i in 0..self.nvars {
            let step = h * (1.0 + x[i].abs());
            probe[i] = x[i] + step;
            let up = self.eval_at(&probe)?;
            probe[i] = x[i] - step;
            let down = self.eval_at(&probe)?;
            probe[i] = x[i];
            g[i] = (up - down) / (2.0 * step);
        }
        Ok(g)
    }

    /// The field `x -> f(A x)`, built by substituting `x_i <- (A x)_i`.
    pub fn compose_linear(&self, a: &Matrix) -> Result<ScalarField> {
        if a.shape() != (self.nvars, self.nvars) {
            return Err(shape(format!(
                "{}x{} matrix composed with a field in {} variables",
                a.nrows(),
                a.ncols(),
                self.nvars
            )));
        }
        let rows = linear_forms(a);
        Ok(ScalarField::from_node(self.nvars, expr::substitute(&self.expr, &rows)))
    }

    /// Re-embeds the field in `nvars` variables, with its own variables
    /// shifted by `offset`.
    pub fn embed(&self, nvars: usize, offset: usize) -> ScalarField {
        assert!(offset + self.nvars <= nvars);
        let repl: Vec<Node> = (0..self.nvars).map(|i| expr::var(i + offset)).collect();
        ScalarField::from_node(nvars, expr::substitute(&self.expr, &repl))
    }

    /// Substitutes `fields[i]` for `x_{i+1}`; all `fields` share one arity.
    pub fn substitute(&self, fields: &[ScalarField]) -> Result<ScalarField> {
        if fields.len() != self.nvars {
            return Err(shape(format!("{} substitutions for {} variables", fields.len(), self.nvars)));
        }
        let nvars = fields.first().map_or(0, |f| f.nvars);
        if fields.iter().any(|f| f.nvars != nvars) {
            return Err(shape("substituted fields disagree on arity"));
        }
        let repl: Vec<Node> = fields.iter().map(|f| f.expr.clone()).collect();
        Ok(ScalarField::from_node(nvars, expr::substitute(&self.expr, &repl)))
    }

    /// Laplacian-style contraction `sum_ij c_ij d_i d_j f` as a field.
    pub fn second_order(&self, coefficients: &Matrix) -> ScalarField {
        let n = self.nvars;
        let p = self.partials();
        let mut terms = Vec::new();
        for (i, di) in p.iter().enumerate() {
            let second = di.partials();
            for j in 0..n {
                let c = coefficients[(i, j)];
                if c != 0.0 {
                    terms.push(expr::mul(expr::constant(c), second[j].expr.clone()));
                }
            }
        }
        ScalarField::from_node(n, expr::sum(terms))
    }
}

impl std::ops::Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(self.nvars, rhs.nvars);
        ScalarField::from_node(self.nvars, expr::add(self.expr.clone(), rhs.expr.clone()))
    }
}

impl std::ops::Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(self.nvars, rhs.nvars);
        ScalarField::from_node(self.nvars, expr::mul(self.expr.clone(), rhs.expr.clone()))
    }
}

impl std::ops::Mul<&ScalarField> for f64 {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        ScalarField::from_node(rhs.nvars, expr::mul(expr::constant(self), rhs.expr.clone()))
    }
}

/// `(A x)_i` as expression nodes, one per row.
fn linear_forms(a: &Matrix) -> Vec<Node> {
    (0..a.nrows())
        .map(|i| {
            expr::sum((0..a.ncols()).filter(|&k| a[(i, k)] != 0.0).map(|k| {
                expr::mul(expr::constant(a[(i, k)]), expr::var(k))
            }))
        })
        .collect()
}

/// Anything that can be evaluated pointwise as a map `R^m -> R^d`.
pub trait PointField {
    fn nvars(&self) -> usize;
    fn dim(&self) -> usize;
    fn eval(&self, x: &Vector) -> Result<Vector>;
}

/// A vector field `F: R^m -> R^n`, either componentwise or the linear field
/// `x -> A x`.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorField {
    Components(Vec<ScalarField>),
    Linear(Matrix),
}

impl VectorField {
    pub fn from_components(components: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(shape("vector field needs at least one component"));
        };
        if components.iter().any(|c| c.nvars != first.nvars) {
            return Err(shape("vector field components disagree on arity"));
        }
        Ok(VectorField::Components(components))
    }

    pub fn parse(texts: &[impl AsRef<str>], nvars: usize) -> Result<Self> {
        let comps = texts
            .iter()
            .map(|t| ScalarField::parse(t.as_ref(), nvars))
            .collect::<Result<Vec<_>>>()?;
        Self::from_components(comps)
    }

    pub fn identity(n: usize) -> Self {
        VectorField::Linear(Matrix::identity(n, n))
    }

    /// Componentwise form, expanding a linear field into expressions.
    pub fn components(&self) -> Vec<ScalarField> {
        match self {
            VectorField::Components(c) => c.clone(),
            VectorField::Linear(a) => {
                let n = a.ncols();
                linear_forms(a).into_iter().map(|e| ScalarField::from_node(n, e)).collect()
            }
        }
    }

    /// `sum_i d F_i / d x_i`.
    pub fn divergence(&self) -> Result<ScalarField> {
        let comps = self.components();
        let n = PointField::nvars(self);
        if comps.len() != n {
            return Err(shape("divergence needs a square field"));
        }
        let terms = comps.iter().enumerate().map(|(i, c)| c.partials()[i].expr.clone());
        Ok(ScalarField::from_node(n, expr::sum(terms)))
    }

    /// `x -> M F(x)`.
    pub fn left_multiply(&self, m: &Matrix) -> Result<VectorField> {
        if m.ncols() != self.dim() {
            return Err(shape("matrix does not match field dimension"));
        }
        if let VectorField::Linear(a) = self {
            return Ok(VectorField::Linear(m * a));
        }
        let comps = self.components();
        let nvars = PointField::nvars(self);
        let out = (0..m.nrows())
            .map(|i| {
                let terms = (0..m.ncols())
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| expr::mul(expr::constant(m[(i, j)]), comps[j].expr.clone()));
                ScalarField::from_node(nvars, expr::sum(terms))
            })
            .collect();
        Ok(VectorField::Components(out))
    }

    /// `x -> F(A x)`.
    pub fn compose_linear(&self, a: &Matrix) -> Result<VectorField> {
        match self {
            VectorField::Linear(m) => {
                if a.shape() != (m.ncols(), m.ncols()) {
                    return Err(shape("composition matrix does not match field arity"));
                }
                Ok(VectorField::Linear(m * a))
            }
            VectorField::Components(c) => Ok(VectorField::Components(
                c.iter().map(|f| f.compose_linear(a)).collect::<Result<_>>()?,
            )),
        }
    }
}

impl PointField for VectorField {
    fn nvars(&self) -> usize {
        match self {
            VectorField::Components(c) => c[0].nvars,
            VectorField::Linear(a) => a.ncols(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            VectorField::Components(c) => c.len(),
            VectorField::Linear(a) => a.nrows(),
        }
    }

    fn eval(&self, x: &Vector) -> Result<Vector> {
        match self {
            VectorField::Components(c) => {
                let vals = c.iter().map(|f| f.eval_at(x)).collect::<Result<Vec<_>>>()?;
                Ok(Vector::from_vec(vals))
            }
            VectorField::Linear(a) => {
                if x.len() != a.ncols() {
                    return Err(shape("point does not match linear field"));
                }
                Ok(a * x)
            }
        }
    }
}
