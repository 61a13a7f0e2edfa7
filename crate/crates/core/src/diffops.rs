//! Left/right b-gradients, the b-Laplacian, the actions of `G_b` on scalar
//! and vector fields, and pointwise checkers for invariance, equivariance
//! and the identities tying them together.
//!
//! Every "for all x" is realised as a finite set of sample points and every
//! subgroup `H <= G_b` as a finite [`GroupSample`]. Residuals are relative:
//! `|a - b| / max(1, |a|, |b|)`, so values near zero compare absolutely.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adjoints::{LinearOperator, Side};
use crate::error::{shape, Error, Result};
use crate::fields::{expr, PointField, ScalarField, VectorField};
use crate::forms::GeometricPair;
use crate::numerics::{self, rel_diff_scalar, rel_diff_vec, Matrix, Vector};
use crate::report::{CheckReport, IdentityReport};
use crate::symmetry;

/// Number of sample points used when none are given.
pub const DEFAULT_POINTS: usize = 20;
/// Half-width of the default sample cube.
pub const DEFAULT_BOX: f64 = 2.0;

pub fn default_points(n: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    crate::sampling::sample_points(&mut rng, n, DEFAULT_POINTS, DEFAULT_BOX)
}

fn check_arity(pair: &GeometricPair, nvars: usize) -> Result<()> {
    if nvars != pair.n() {
        return Err(shape(format!("field in {nvars} variables on R^{}", pair.n())));
    }
    Ok(())
}

/// `B^T` for the left gradient, `B` for the right one.
fn gradient_matrix(pair: &GeometricPair, side: Side) -> Matrix {
    match side {
        Side::Left => pair.b().transpose(),
        Side::Right => pair.b().clone(),
    }
}

/// The vector field `B^T grad f` (left) or `B grad f` (right), symbolically.
pub fn gradient_field(pair: &GeometricPair, f: &ScalarField, side: Side) -> Result<VectorField> {
    check_arity(pair, f.nvars())?;
    let grad = VectorField::Components(f.partials().to_vec());
    grad.left_multiply(&gradient_matrix(pair, side))
}

pub fn grad_b(pair: &GeometricPair, f: &ScalarField, x: &Vector, side: Side) -> Result<Vector> {
    check_arity(pair, f.nvars())?;
    Ok(gradient_matrix(pair, side) * f.grad(x)?)
}

/// Residual of the defining relation `b(grad^L f, v) = df . v` (left) or
/// `b(v, grad^R f) = df . v` (right), scaled by `|M| |grad^b f| |v|`.
pub fn gradient_defining_residual(
    pair: &GeometricPair,
    f: &ScalarField,
    x: &Vector,
    v: &Vector,
    side: Side,
) -> Result<f64> {
    let g = grad_b(pair, f, x, side)?;
    let form = pair.form();
    let lhs = match side {
        Side::Left => form.evaluate(&g, v)?,
        Side::Right => form.evaluate(v, &g)?,
    };
    let rhs = f.grad(x)?.dot(v);
    let scale = 1f64.max(form.gram().norm() * g.norm() * v.norm());
    Ok((lhs - rhs).abs() / scale)
}

/// `grad^L f` against `B^T B^{-1} grad^R f`, relative.
pub fn gradient_relation_residual(pair: &GeometricPair, f: &ScalarField, x: &Vector) -> Result<f64> {
    let left = grad_b(pair, f, x, Side::Left)?;
    let right = grad_b(pair, f, x, Side::Right)?;
    let mapped = pair.b().transpose() * pair.b_inv() * right;
    Ok(rel_diff_vec(&left, &mapped))
}

/// `sum_ij B_ij d_i d_j f` at `x`.
pub fn laplacian_b(pair: &GeometricPair, f: &ScalarField, x: &Vector) -> Result<f64> {
    check_arity(pair, f.nvars())?;
    let h = f.hessian(x)?;
    Ok(pair.b().component_mul(&h).sum())
}

/// The b-Laplacian as a field.
pub fn laplacian_field(pair: &GeometricPair, f: &ScalarField) -> Result<ScalarField> {
    check_arity(pair, f.nvars())?;
    Ok(f.second_order(pair.b()))
}

/// `q(x) = b(x, x)`, which every element of `G_b` preserves.
pub fn quadratic_field(form: &crate::forms::BilinearForm) -> ScalarField {
    let n = form.n();
    let m = form.gram();
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if m[(i, j)] != 0.0 {
                terms.push(expr::mul(expr::constant(m[(i, j)]), expr::mul(expr::var(i), expr::var(j))));
            }
        }
    }
    ScalarField::from_node(n, expr::sum(terms))
}

/// `(tau(A) f)(x) = f(A^{-1} x)`.
pub fn act_scalar(a: &LinearOperator, f: &ScalarField) -> Result<ScalarField> {
    let inv = numerics::inverse(a.matrix(), numerics::tol::RANK)?;
    f.compose_linear(&inv)
}

/// `(tau~(A) F)(x) = A F(A^{-1} x)`.
pub fn act_vector(a: &LinearOperator, field: &VectorField) -> Result<VectorField> {
    let inv = numerics::inverse(a.matrix(), numerics::tol::RANK)?;
    field.compose_linear(&inv)?.left_multiply(a.matrix())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Sampled,
    UserSupplied,
    Canonical,
}

/// A finite set of elements of `G_b` standing in for a subgroup `H`.
#[derive(Debug, Clone)]
pub struct GroupSample {
    pair: GeometricPair,
    elements: Vec<Matrix>,
    inverses: Vec<Matrix>,
    provenance: Provenance,
}

impl GroupSample {
    /// Every element must pass the membership test at `tol::GROUP`.
    pub fn new(pair: &GeometricPair, elements: Vec<Matrix>, provenance: Provenance) -> Result<Self> {
        let mut inverses = Vec::with_capacity(elements.len());
        for (k, a) in elements.iter().enumerate() {
            let op = LinearOperator::new(a.clone())?;
            let m = symmetry::in_group(pair, &op, numerics::tol::GROUP)?;
            if !m.member {
                return Err(Error::InvalidParameters(format!(
                    "element {k} is not in G_b (residual {:e})",
                    m.residual
                )));
            }
            inverses.push(numerics::inverse(a, numerics::tol::RANK)?);
        }
        Ok(Self { pair: pair.clone(), elements, inverses, provenance })
    }

    /// `count` elements `exp(X)` with `X` drawn from the Lie algebra.
    pub fn sampled(pair: &GeometricPair, count: usize, seed: u64, scale: f64) -> Result<Self> {
        let basis = symmetry::algebra_basis(pair, numerics::tol::RANK);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let elements = (0..count).map(|_| basis.sample_element(&mut rng, scale).into_matrix()).collect();
        Self::new(pair, elements, Provenance::Sampled)
    }

    pub fn pair(&self) -> &GeometricPair {
        &self.pair
    }

    pub fn elements(&self) -> &[Matrix] {
        &self.elements
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    fn iter(&self) -> impl Iterator<Item = (&Matrix, &Matrix)> {
        self.elements.iter().zip(&self.inverses)
    }

    fn operators(&self) -> impl Iterator<Item = LinearOperator> + '_ {
        self.elements.iter().map(|a| LinearOperator::new(a.clone()).expect("validated"))
    }
}

/// `max |f(A x) - f(x)|` over the sample.
pub fn check_invariant(f: &ScalarField, h: &GroupSample, points: &[Vector], tol: f64) -> Result<CheckReport> {
    let mut report = CheckReport::new("invariant", tol);
    for a in h.elements() {
        let mut worst = 0f64;
        for x in points {
            worst = worst.max(rel_diff_scalar(f.eval_at(&(a * x))?, f.eval_at(x)?));
        }
        report.record(worst);
    }
    Ok(report)
}

/// `max ||F(A x) - A F(x)||` over the sample.
pub fn check_equivariant<F: PointField + ?Sized>(
    field: &F,
    h: &GroupSample,
    points: &[Vector],
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("equivariant", tol);
    for a in h.elements() {
        let mut worst = 0f64;
        for x in points {
            worst = worst.max(rel_diff_vec(&field.eval(&(a * x))?, &(a * field.eval(x)?)));
        }
        report.record(worst);
    }
    Ok(report)
}

/// Result of the gradient/group compatibility checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEquivarianceReport {
    /// Invariance of `f` under the sample; the equivariance conclusion is
    /// only tested when this passes.
    pub premise: CheckReport,
    /// `gradient.equivariant.{left,right}` and `gradient.action.{left,right}`.
    pub checks: Vec<CheckReport>,
}

impl GradientEquivarianceReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// (a) invariant `f` has equivariant left/right gradients; (b) for any `f`,
/// `grad_b(tau(A) f) = tau~(A) grad_b f` pointwise.
pub fn gradient_equivariance_suite(
    pair: &GeometricPair,
    f: &ScalarField,
    h: &GroupSample,
    points: &[Vector],
    tol: f64,
) -> Result<GradientEquivarianceReport> {
    check_arity(pair, f.nvars())?;
    let premise = check_invariant(f, h, points, tol)?;
    let mut checks = Vec::new();
    for side in Side::BOTH {
        let grad = gradient_field(pair, f, side)?;
        let mut eq = CheckReport::new(format!("gradient.equivariant.{side}"), tol);
        if premise.pass {
            let r = check_equivariant(&grad, h, points, tol)?;
            eq.merge(&CheckReport { name: eq.name.clone(), ..r });
        } else {
            eq.vacuous = true;
        }
        checks.push(eq);

        let mut compat = CheckReport::new(format!("gradient.action.{side}"), tol);
        for a in h.operators() {
            let lhs = gradient_field(pair, &act_scalar(&a, f)?, side)?;
            let rhs = act_vector(&a, &grad)?;
            let mut worst = 0f64;
            for x in points {
                worst = worst.max(rel_diff_vec(&lhs.eval(x)?, &rhs.eval(x)?));
            }
            compat.record(worst);
        }
        checks.push(compat);
    }
    Ok(GradientEquivarianceReport { premise, checks })
}

/// `max |Delta_b(tau(A) f)(x) - (Delta_b f)(A^{-1} x)|`.
pub fn laplacian_equivariance(
    pair: &GeometricPair,
    f: &ScalarField,
    h: &GroupSample,
    points: &[Vector],
    tol: f64,
) -> Result<CheckReport> {
    check_arity(pair, f.nvars())?;
    let mut report = CheckReport::new("laplacian.equivariance", tol);
    for ((a, inv), op) in h.iter().zip(h.operators()) {
        debug_assert_eq!(a, op.matrix());
        let moved = act_scalar(&op, f)?;
        let mut worst = 0f64;
        for x in points {
            let lhs = laplacian_b(pair, &moved, x)?;
            let rhs = laplacian_b(pair, f, &(inv * x))?;
            worst = worst.max(rel_diff_scalar(lhs, rhs));
        }
        report.record(worst);
    }
    Ok(report)
}

/// `div(B^T grad f) = div(B grad f) = sum_ij B_ij d_i d_j f`, all three
/// computed independently.
pub fn laplacian_coincidence(
    pair: &GeometricPair,
    f: &ScalarField,
    points: &[Vector],
    tol: f64,
) -> Result<CheckReport> {
    let left = gradient_field(pair, f, Side::Left)?.divergence()?;
    let right = gradient_field(pair, f, Side::Right)?.divergence()?;
    let mut report = CheckReport::new("laplacian.left_right", tol);
    for x in points {
        let d = laplacian_b(pair, f, x)?;
        let l = left.eval_at(x)?;
        let r = right.eval_at(x)?;
        report.record(rel_diff_scalar(l, d).max(rel_diff_scalar(r, d)));
    }
    Ok(report)
}

/// Linearity and the left/right product rules of the b-Laplacian, plus the
/// collapsed symmetric form when `b` is symmetric.
pub fn product_rule_check<R: Rng + ?Sized>(
    pair: &GeometricPair,
    f: &ScalarField,
    g: &ScalarField,
    points: &[Vector],
    tol: f64,
    rng: &mut R,
) -> Result<IdentityReport> {
    check_arity(pair, f.nvars())?;
    check_arity(pair, g.nvars())?;
    let form = pair.form();
    let (lambda, mu): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let combo = &(lambda * f) + &(mu * g);
    let product = f * g;
    let symmetric = (form.gram() - form.gram().transpose()).norm() <= numerics::tol::CLASSIFY * form.gram().norm();

    let mut linearity = CheckReport::new("laplacian.linearity", tol);
    let mut left = CheckReport::new("laplacian.product.left", tol);
    let mut right = CheckReport::new("laplacian.product.right", tol);
    let mut collapsed = CheckReport::new("laplacian.product.symmetric", tol);
    for x in points {
        let (fx, gx) = (f.eval_at(x)?, g.eval_at(x)?);
        let (lf, lg) = (laplacian_b(pair, f, x)?, laplacian_b(pair, g, x)?);
        let lhs = laplacian_b(pair, &combo, x)?;
        let rhs = lambda * lf + mu * lg;
        linearity.record((lhs - rhs).abs() / 1f64.max(lhs.abs()).max((lambda * lf).abs()).max((mu * lg).abs()));

        let lp = laplacian_b(pair, &product, x)?;
        for (side, report) in [(Side::Left, &mut left), (Side::Right, &mut right)] {
            let (gf, gg) = (grad_b(pair, f, x, side)?, grad_b(pair, g, x, side)?);
            let terms = [fx * lg, gx * lf, form.evaluate(&gf, &gg)?, form.evaluate(&gg, &gf)?];
            let sum: f64 = terms.iter().sum();
            let scale = terms.iter().fold(1f64.max(lp.abs()), |a, t| a.max(t.abs()));
            report.record((lp - sum).abs() / scale);
        }
        if symmetric {
            let (gf, gg) = (grad_b(pair, f, x, Side::Left)?, grad_b(pair, g, x, Side::Left)?);
            let terms = [fx * lg, gx * lf, 2.0 * form.evaluate(&gf, &gg)?];
            let sum: f64 = terms.iter().sum();
            let scale = terms.iter().fold(1f64.max(lp.abs()), |a, t| a.max(t.abs()));
            collapsed.record((lp - sum).abs() / scale);
        }
    }
    let mut checks = vec![linearity, left, right];
    if symmetric {
        checks.push(collapsed);
    }
    Ok(IdentityReport { checks })
}

/// `f(x, y) = b(F(x), y)` (left) or `g(x, y) = b(x, F(y))` (right) as a
/// field in `2n` variables, `x = (x1..xn)` and `y = (x_{n+1}..x_{2n})`.
pub fn pair_field(pair: &GeometricPair, field: &VectorField, side: Side) -> Result<ScalarField> {
    let n = pair.n();
    if field.nvars() != n || field.dim() != n {
        return Err(shape(format!("vector field {}->{} on R^{n}", field.nvars(), field.dim())));
    }
    let m = pair.form().gram();
    let (f_offset, v_offset) = match side {
        Side::Left => (0, n),
        Side::Right => (n, 0),
    };
    let comps: Vec<ScalarField> = field.components().iter().map(|c| c.embed(2 * n, f_offset)).collect();
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let c = m[(i, j)];
            if c == 0.0 {
                continue;
            }
            // left: F_i(x) M_ij y_j; right: x_i M_ij F_j(y)
            let (fi, vj) = match side {
                Side::Left => (comps[i].node().clone(), expr::var(v_offset + j)),
                Side::Right => (comps[j].node().clone(), expr::var(v_offset + i)),
            };
            terms.push(expr::mul(expr::constant(c), expr::mul(fi, vj)));
        }
    }
    Ok(ScalarField::from_node(2 * n, expr::sum(terms)))
}

/// Pointwise evaluator for `x -> B^T grad_y f(x, 0)` (left) or
/// `y -> B grad_x f(0, y)` (right).
#[derive(Debug, Clone)]
pub struct RecoveredField {
    n: usize,
    side: Side,
    matrix: Matrix,
    partials: Vec<ScalarField>,
}

impl PointField for RecoveredField {
    fn nvars(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, p: &Vector) -> Result<Vector> {
        if p.len() != self.n {
            return Err(shape("point does not match recovered field"));
        }
        let point = embed_point(p, self.n, self.side);
        let vals = self.partials.iter().map(|d| d.eval(&point)).collect::<Result<Vec<_>>>()?;
        Ok(&self.matrix * Vector::from_vec(vals))
    }
}

/// `(p, 0)` for the left side, `(0, p)` for the right.
fn embed_point(p: &Vector, n: usize, side: Side) -> Vec<f64> {
    let mut point = vec![0.0; 2 * n];
    let offset = match side {
        Side::Left => 0,
        Side::Right => n,
    };
    point[offset..offset + n].copy_from_slice(p.as_slice());
    point
}

/// Block gradient offsets: the left side differentiates in `y`, the right
/// side in `x`.
fn block_partials(f: &ScalarField, n: usize, side: Side) -> Vec<ScalarField> {
    let offset = match side {
        Side::Left => n,
        Side::Right => 0,
    };
    let all = f.partials();
    all[offset..offset + n].to_vec()
}

pub fn recover_field(pair: &GeometricPair, fxy: &ScalarField, side: Side) -> Result<RecoveredField> {
    let n = pair.n();
    if fxy.nvars() != 2 * n {
        return Err(shape(format!("two-block field needs {} variables, has {}", 2 * n, fxy.nvars())));
    }
    Ok(RecoveredField {
        n,
        side,
        matrix: gradient_matrix(pair, side),
        partials: block_partials(fxy, n, side),
    })
}

/// `max ||F - recover(pair_field(F))||` over the points, for one side.
pub fn round_trip_residual(
    pair: &GeometricPair,
    field: &VectorField,
    side: Side,
    points: &[Vector],
) -> Result<f64> {
    let rec = recover_field(pair, &pair_field(pair, field, side)?, side)?;
    let mut worst = 0f64;
    for x in points {
        worst = worst.max(rel_diff_vec(&field.eval(x)?, &rec.eval(x)?));
    }
    Ok(worst)
}

/// Lifts `g in H` to the diagonal action `(x, y) -> (g x, g y)` on `R^{2n}`.
pub fn diagonal_sample(h: &GroupSample) -> Result<GroupSample> {
    let n = h.pair().n();
    let m = h.pair().form().gram();
    let mut big = Matrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(m);
    big.view_mut((n, n), (n, n)).copy_from(m);
    let doubled = crate::forms::BilinearForm::from_matrix(big, h.pair().form().tol())?.geometric_pair();
    let elements = h
        .elements()
        .iter()
        .map(|a| {
            let mut d = Matrix::zeros(2 * n, 2 * n);
            d.view_mut((0, 0), (n, n)).copy_from(a);
            d.view_mut((n, n), (n, n)).copy_from(a);
            d
        })
        .collect();
    GroupSample::new(&doubled, elements, h.provenance())
}

/// Checks a generator expansion of an equivariant field.
///
/// Left: `F(x) = sum_i d_i ftilde(u(x, 0)) B^T grad_y u_i(x, 0)`.
/// Right (when `gtilde` is given): `F(y) = sum_i d_i gtilde(u(0, y)) B grad_x u_i(0, y)`.
/// The two coefficient functions differ in general: `ftilde` represents
/// `b(F(x), y)` and `gtilde` represents `b(x, F(y))`.
pub fn generator_expansion_check(
    pair: &GeometricPair,
    ftilde: &ScalarField,
    gtilde: Option<&ScalarField>,
    us: &[ScalarField],
    field: &VectorField,
    points: &[Vector],
    tol: f64,
) -> Result<IdentityReport> {
    let n = pair.n();
    let p = us.len();
    if ftilde.nvars() != p || gtilde.is_some_and(|g| g.nvars() != p) {
        return Err(shape(format!("coefficient function must take {p} arguments")));
    }
    if us.iter().any(|u| u.nvars() != 2 * n) {
        return Err(shape(format!("generators must be fields in {} variables", 2 * n)));
    }
    if field.nvars() != n || field.dim() != n {
        return Err(shape("vector field does not live on R^n"));
    }
    if points.iter().any(|x| x.len() != n) {
        return Err(shape("sample point does not match the dimension"));
    }
    let mut checks = Vec::new();
    let sides: Vec<(Side, &ScalarField)> = std::iter::once((Side::Left, ftilde))
        .chain(gtilde.map(|g| (Side::Right, g)))
        .collect();
    for (side, coeff) in sides {
        let mut report = CheckReport::new(format!("generators.{side}"), tol);
        let mat = gradient_matrix(pair, side);
        let coeff_partials = coeff.partials();
        let u_partials: Vec<Vec<ScalarField>> = us.iter().map(|u| block_partials(u, n, side)).collect();
        for x in points {
            let point = embed_point(x, n, side);
            let u_vals = us.iter().map(|u| u.eval(&point)).collect::<Result<Vec<_>>>()?;
            let mut rhs = Vector::zeros(n);
            for (i, parts) in u_partials.iter().enumerate() {
                let weight = coeff_partials[i].eval(&u_vals)?;
                if weight == 0.0 {
                    continue;
                }
                let grad = parts.iter().map(|d| d.eval(&point)).collect::<Result<Vec<_>>>()?;
                rhs += &mat * Vector::from_vec(grad) * weight;
            }
            report.record(rel_diff_vec(&field.eval(x)?, &rhs));
        }
        checks.push(report);
    }
    Ok(IdentityReport { checks })
}
