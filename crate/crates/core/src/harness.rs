//! Randomized verification suite covering every identity of the library.
//!
//! A run draws, per trial and per structure family, a random structure of a
//! random dimension together with random operators, subspaces, fields and
//! group elements, and folds every residual into one [`CheckReport`] per
//! identity in [`MANIFEST`]. Trials run in parallel on per-task seeds derived
//! from the base seed, and results are merged in task order, so a fixed
//! config always yields the same report.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjoints::{self, adjoint, LinearOperator, Side};
use crate::diffops::{self, GroupSample, Provenance};
use crate::error::{Error, Result};
use crate::fields::{PointField, ScalarField, VectorField};
use crate::forms::{BilinearForm, GeometricPair, StructureKind};
use crate::numerics::{self, rel_diff, rel_diff_scalar, rel_diff_vec, Vector};
use crate::report::CheckReport;
use crate::sampling;
use crate::subspaces::{self, Subspace};
use crate::symmetry;

/// Structure families a suite can draw from. Pseudo-Euclidean draws its
/// index `k` at random; general draws a random well-conditioned matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureFamily {
    Euclidean,
    Minkowski,
    PseudoEuclidean,
    Symplectic,
    General,
}

impl StructureFamily {
    pub const ALL: [StructureFamily; 5] = [
        StructureFamily::Euclidean,
        StructureFamily::Minkowski,
        StructureFamily::PseudoEuclidean,
        StructureFamily::Symplectic,
        StructureFamily::General,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StructureFamily::Euclidean => "euclidean",
            StructureFamily::Minkowski => "minkowski",
            StructureFamily::PseudoEuclidean => "pseudo_euclidean",
            StructureFamily::Symplectic => "symplectic",
            StructureFamily::General => "general",
        }
    }
}

impl fmt::Display for StructureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StructureFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StructureFamily::ALL
            .into_iter()
            .find(|k| k.label() == s || k.label().replace('_', "-") == s)
            .ok_or_else(|| Error::InvalidParameters(format!("unknown structure kind '{s}'")))
    }
}

/// Global default tolerance for identity residuals.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Default for checks that involve finite differences.
pub const FINITE_DIFF_TOLERANCE: f64 = 1e-6;

/// Key in [`SuiteConfig::tolerances`] that overrides every identity.
pub const ALL_IDENTITIES: &str = "*";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: usize,
    pub n_range: (usize, usize),
    pub structure_kinds: Vec<StructureFamily>,
    /// Per-identity overrides of the manifest tolerances.
    pub tolerances: BTreeMap<String, f64>,
    pub point_box: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            trials: 50,
            n_range: (2, 6),
            structure_kinds: StructureFamily::ALL.to_vec(),
            tolerances: BTreeMap::new(),
            point_box: 2.0,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameters(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        let (lo, hi) = self.n_range;
        if lo < 2 || hi > 16 || lo > hi {
            return bad(format!("n_range ({lo}, {hi}) must satisfy 2 <= min <= max <= 16"));
        }
        if self.structure_kinds.is_empty() {
            return bad("structure_kinds is empty".into());
        }
        if self.structure_kinds.contains(&StructureFamily::Symplectic) && lo == hi && lo % 2 == 1 {
            return bad(format!("symplectic structures need an even dimension, n_range is ({lo}, {hi})"));
        }
        if !(self.point_box.is_finite() && self.point_box > 0.0) {
            return bad(format!("point_box must be positive, got {}", self.point_box));
        }
        for (name, &t) in &self.tolerances {
            if name != ALL_IDENTITIES && manifest_entry(name).is_none() {
                return bad(format!("tolerance given for unknown identity '{name}'"));
            }
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("tolerance for '{name}' must be positive, got {t}"));
            }
        }
        Ok(())
    }

    /// Effective tolerance for an identity: explicit override, then the
    /// wildcard override, then the manifest default.
    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .or_else(|| self.tolerances.get(ALL_IDENTITIES))
            .copied()
            .unwrap_or_else(|| manifest_entry(name).map_or(DEFAULT_TOLERANCE, |e| e.tolerance))
    }
}

/// One identity verified by the suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub name: &'static str,
    pub statement: &'static str,
    /// Default tolerance on the residual. Zero marks exact integer checks.
    pub tolerance: f64,
}

const fn entry(name: &'static str, statement: &'static str, tolerance: f64) -> ManifestEntry {
    ManifestEntry { name, statement, tolerance }
}

/// Every identity the suite checks, in report order.
pub const MANIFEST: &[ManifestEntry] = &[
    entry("pair.law", "<x, y> = b(x, B y)", 1e-9),
    entry("pair.gram_inverse", "M B = I", 1e-8),
    entry("forms.classification", "canonical structures classify as their own kind", 0.0),
    entry("adjoint.defining", "b(A*L x, y) = b(x, A y) and b(A x, y) = b(x, A*R y)", 1e-8),
    entry("adjoint.linearity", "(l A1 + m A2)* = l A1* + m A2*", 1e-8),
    entry("adjoint.double_cancellation", "(A*L)*R = (A*R)*L = A", 1e-8),
    entry("adjoint.anti_multiplicative", "(A1 A2)* = A2* A1*", 1e-8),
    entry("adjoint.inverse", "(A^-1)* = (A*)^-1", 1e-8),
    entry("adjoint.commutator", "[A1, A2]* = [A2*, A1*]", 1e-8),
    entry("adjoint.determinant", "det A* = det A", 1e-8),
    entry("adjoint.special_operators", "I* = I, B*L = B^T, B*R = B B^T B^-1", 1e-8),
    entry(
        "adjoint.involution_equivalence",
        "A** = A on each side and A*L = A*R hold exactly when b is symmetric or skew",
        1e-8,
    ),
    entry("subspace.perp_dimension", "dim V^L = dim V^R = n - dim V", 0.0),
    entry("subspace.double_perp", "(V^L)^R = (V^R)^L = V", 1e-8),
    entry("subspace.kernel_image", "kernels and images of A, A*L, A*R are mutual complements", 1e-8),
    entry("subspace.rank_nullity", "rank A + dim ker A = n", 0.0),
    entry("subspace.perp_sides_coincide", "V^L = V^R for symmetric or skew b", 1e-8),
    entry("group.membership", "exp of algebra elements satisfies A B A^T = B", 1e-8),
    entry("group.closure", "products of group elements stay in the group", 1e-8),
    entry("group.inverse_is_adjoint", "A^-1 = A*L = A*R on the group", 1e-8),
    entry("group.det_unit", "|det A| = 1 on the group", 1e-8),
    entry("algebra.membership", "algebra basis satisfies X B + B X^T = 0", 1e-8),
    entry("algebra.commutator_closure", "[X, Y] stays in the algebra", 1e-8),
    entry("algebra.dimension", "n(n-1)/2 for orthogonal types, n(n+1)/2 for symplectic", 0.0),
    entry("gradient.defining", "b(grad^L f, v) = df v and b(v, grad^R f) = df v", 1e-9),
    entry("gradient.left_right_relation", "grad^L f = B^T B^-1 grad^R f", 1e-9),
    entry("gradient.symbolic_vs_fd", "symbolic gradient matches central differences", FINITE_DIFF_TOLERANCE),
    entry("gradient.equivariance_invariant", "H-invariant f has H-equivariant left and right gradients", 1e-8),
    entry("gradient.action_compat", "grad_b(tau(A) f) = tau~(A) grad_b f for every f", 1e-8),
    entry("action.left_action", "tau(A1 A2) = tau(A1) tau(A2) on scalar and vector fields", 1e-8),
    entry("action.invariance_fixed", "invariant fields are fixed by tau and tau~", 1e-8),
    entry("laplacian.left_right_coincide", "div(B^T grad f) = div(B grad f) = sum B_ij d_i d_j f", 1e-10),
    entry("laplacian.specialization", "Laplace, d'Alembert and zero operator on canonical structures", 1e-12),
    entry("laplacian.linearity", "Delta_b(l f + m g) = l Delta_b f + m Delta_b g", 1e-8),
    entry("laplacian.product_left", "Delta_b(fg) with left-gradient cross terms", 1e-8),
    entry("laplacian.product_right", "Delta_b(fg) with right-gradient cross terms", 1e-8),
    entry("laplacian.product_symmetric", "Delta_b(fg) = f Delta g + g Delta f + 2 b(grad f, grad g), symmetric b", 1e-8),
    entry("laplacian.equivariance", "Delta_b(tau(A) f) = tau(A) Delta_b f", 1e-8),
    entry("laplacian.harmonic_transfer", "tau(A) maps b-harmonic functions to b-harmonic functions", 1e-8),
    entry("correspondence.round_trip", "F is recovered from b(F(x), y) and b(x, F(y))", 1e-10),
    entry("correspondence.invariance_transfer", "equivariant F gives a diagonally invariant b(F(x), y)", 1e-8),
    entry("generators.euclidean_expansion", "O(n) generator expansions of identity and cubic fields", 1e-10),
];

pub fn manifest_entry(name: &str) -> Option<&'static ManifestEntry> {
    MANIFEST.iter().find(|e| e.name == name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub checks: Vec<CheckReport>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl SuiteReport {
    pub fn get(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Number of sample points per structure.
const POINTS: usize = 20;
/// Group elements per structure, canonical reflections included.
const GROUP_ELEMENTS: usize = 10;
/// Random fields per structure; the last one is trigonometric.
const FIELDS: usize = 4;
const RANK_TOL: f64 = 1e-9;

pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let start = Instant::now();
    let tasks: Vec<(u64, StructureFamily)> = (0..config.trials as u64)
        .flat_map(|t| config.structure_kinds.iter().map(move |&k| (t, k)))
        .collect();
    let partial: Vec<Recorder> = tasks
        .par_iter()
        .enumerate()
        .map(|(i, &(_, family))| run_task(config, family, sampling::derive_seed(config.seed, i as u64)))
        .collect();

    let mut total = Recorder::new(config);
    for r in &partial {
        for (acc, c) in total.checks.iter_mut().zip(&r.checks) {
            acc.merge(c);
        }
    }
    let mut checks = total.checks;
    for c in &mut checks {
        // an identity that never applied to the drawn structures
        if c.trials == 0 {
            c.vacuous = true;
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport { config: config.clone(), checks, pass, wall_time_s: start.elapsed().as_secs_f64() })
}

/// Per-task accumulator with one report per manifest entry.
struct Recorder {
    checks: Vec<CheckReport>,
}

impl Recorder {
    fn new(config: &SuiteConfig) -> Self {
        Self { checks: MANIFEST.iter().map(|e| CheckReport::new(e.name, config.tolerance(e.name))).collect() }
    }

    fn slot(&mut self, name: &str) -> &mut CheckReport {
        let i = MANIFEST.iter().position(|e| e.name == name).unwrap_or_else(|| panic!("identity '{name}' missing from manifest"));
        &mut self.checks[i]
    }

    fn record(&mut self, name: &str, residual: f64) {
        self.slot(name).record(residual);
    }

    fn absorb(&mut self, name: &str, report: &CheckReport) {
        let slot = self.slot(name);
        if report.vacuous {
            return;
        }
        slot.trials += report.trials;
        slot.max_residual = slot.max_residual.max(report.max_residual);
        slot.pass = slot.max_residual <= slot.tolerance;
    }

    /// Runs one group of checks; an evaluation error fails all of them.
    fn section(&mut self, names: &[&str], body: impl FnOnce(&mut Recorder) -> Result<()>) {
        if body(self).is_err() {
            for name in names {
                self.record(name, f64::MAX);
            }
        }
    }
}

struct Task {
    family: StructureFamily,
    pair: GeometricPair,
    points: Vec<Vector>,
    fields: Vec<ScalarField>,
    group: GroupSample,
    rng: ChaCha8Rng,
}

fn draw_dimension(rng: &mut ChaCha8Rng, family: StructureFamily, (lo, hi): (usize, usize)) -> usize {
    if family == StructureFamily::Symplectic {
        let evens: Vec<usize> = (lo..=hi).filter(|n| n % 2 == 0).collect();
        if evens.is_empty() {
            // odd single-value ranges are rejected by validate; fall back to the nearest even n
            return (lo + 1).min(16);
        }
        evens[rng.random_range(0..evens.len())]
    } else {
        rng.random_range(lo..=hi)
    }
}

fn draw_form(rng: &mut ChaCha8Rng, family: StructureFamily, n: usize) -> BilinearForm {
    let kind = match family {
        StructureFamily::Euclidean => StructureKind::Euclidean,
        StructureFamily::Minkowski => StructureKind::Minkowski,
        StructureFamily::PseudoEuclidean => StructureKind::PseudoEuclidean(rng.random_range(1..n)),
        StructureFamily::Symplectic => StructureKind::Symplectic,
        StructureFamily::General => return sampling::random_form(rng, n, 1e-3),
    };
    BilinearForm::canonical(kind, n).expect("valid canonical parameters")
}

fn canonical_kind(pair: &GeometricPair, family: StructureFamily) -> Option<StructureKind> {
    (family != StructureFamily::General).then(|| pair.form().classify(numerics::tol::CLASSIFY).kind)
}

fn draw_group(rng: &mut ChaCha8Rng, pair: &GeometricPair, kind: Option<StructureKind>) -> Result<GroupSample> {
    let n = pair.n();
    let mut elements = kind.map(|k| symmetry::canonical_reflections(k, n)).unwrap_or_default();
    let basis = symmetry::algebra_basis(pair, numerics::tol::RANK);
    while elements.len() < GROUP_ELEMENTS {
        elements.push(basis.sample_element(rng, symmetry::DEFAULT_SAMPLE_SCALE).into_matrix());
    }
    GroupSample::new(pair, elements, Provenance::Sampled)
}

fn run_task(config: &SuiteConfig, family: StructureFamily, seed: u64) -> Recorder {
    let mut rec = Recorder::new(config);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = draw_dimension(&mut rng, family, config.n_range);
    let pair = draw_form(&mut rng, family, n).geometric_pair();
    let points = sampling::sample_points(&mut rng, n, POINTS, config.point_box);
    let fields = sampling::field_corpus(&mut rng, n, FIELDS);
    let group = match draw_group(&mut rng, &pair, canonical_kind(&pair, family)) {
        Ok(g) => g,
        Err(_) => {
            rec.record("group.membership", f64::MAX);
            return rec;
        }
    };
    let mut task = Task { family, pair, points, fields, group, rng };

    pair_checks(&mut rec, &mut task);
    adjoint_checks(&mut rec, &mut task);
    subspace_checks(&mut rec, &mut task);
    group_checks(&mut rec, &mut task);
    gradient_checks(&mut rec, &mut task);
    laplacian_checks(&mut rec, &mut task);
    correspondence_checks(&mut rec, &mut task);
    rec
}

fn pair_checks(rec: &mut Recorder, t: &mut Task) {
    rec.section(&["pair.law", "pair.gram_inverse", "forms.classification"], |rec| {
        let n = t.pair.n();
        for _ in 0..POINTS {
            let x = sampling::uniform_vector(&mut t.rng, n, 1.0);
            let y = sampling::uniform_vector(&mut t.rng, n, 1.0);
            rec.record("pair.law", t.pair.law_residual(&x, &y)?);
        }
        let scale = t.pair.form().gram().norm() * t.pair.b().norm();
        rec.record("pair.gram_inverse", t.pair.pair_residual() / scale);
        let expected = match t.family {
            StructureFamily::Euclidean => Some(StructureKind::Euclidean),
            StructureFamily::Minkowski => Some(StructureKind::Minkowski),
            StructureFamily::PseudoEuclidean => {
                let k = (0..n).filter(|&i| t.pair.form().gram()[(i, i)] < 0.0).count();
                Some(if k == 1 { StructureKind::Minkowski } else { StructureKind::PseudoEuclidean(k) })
            }
            StructureFamily::Symplectic => Some(StructureKind::Symplectic),
            StructureFamily::General => None,
        };
        if let Some(kind) = expected {
            let got = t.pair.form().classify(numerics::tol::CLASSIFY).kind;
            rec.record("forms.classification", if got == kind { 0.0 } else { 1.0 });
        }
        Ok(())
    });
}

const ADJOINT_CHECKS: [&str; 8] = [
    "adjoint.defining",
    "adjoint.linearity",
    "adjoint.double_cancellation",
    "adjoint.anti_multiplicative",
    "adjoint.inverse",
    "adjoint.commutator",
    "adjoint.determinant",
    "adjoint.special_operators",
];

fn adjoint_checks(rec: &mut Recorder, t: &mut Task) {
    let mut names = ADJOINT_CHECKS.to_vec();
    names.push("adjoint.involution_equivalence");
    rec.section(&names, |rec| {
        let n = t.pair.n();
        let a1 = LinearOperator::new(sampling::uniform_matrix(&mut t.rng, n, n))?;
        let a2 = LinearOperator::new(sampling::uniform_matrix(&mut t.rng, n, n))?;
        let tol = rec.slot("adjoint.defining").tolerance;
        let report = adjoints::check_adjoint_identities(&t.pair, &a1, &a2, tol, &mut t.rng)?;
        for c in &report.checks {
            rec.absorb(&c.name, c);
        }
        let inv = &report.involution;
        let residual = if inv.epsilon.is_some() {
            inv.left_involution_residual.max(inv.right_involution_residual).max(inv.left_right_residual)
        } else if inv.consistent {
            0.0
        } else {
            1.0
        };
        rec.record("adjoint.involution_equivalence", residual);
        Ok(())
    });
}

fn subspace_checks(rec: &mut Recorder, t: &mut Task) {
    let names = [
        "subspace.perp_dimension",
        "subspace.double_perp",
        "subspace.kernel_image",
        "subspace.rank_nullity",
        "subspace.perp_sides_coincide",
    ];
    rec.section(&names, |rec| {
        let n = t.pair.n();
        let form = t.pair.form();
        let k = t.rng.random_range(0..=n);
        let vectors: Vec<Vector> = (0..k).map(|_| sampling::uniform_vector(&mut t.rng, n, 1.0)).collect();
        let v = Subspace::from_vectors(n, &vectors, RANK_TOL)?;
        let l = subspaces::perp(form, &v, Side::Left)?;
        let r = subspaces::perp(form, &v, Side::Right)?;
        for p in [&l, &r] {
            rec.record("subspace.perp_dimension", (n - v.dim()).abs_diff(p.dim()) as f64);
        }
        rec.record("subspace.double_perp", subspaces::perp(form, &l, Side::Right)?.distance(&v)?);
        rec.record("subspace.double_perp", subspaces::perp(form, &r, Side::Left)?.distance(&v)?);
        if adjoints::transpose_sign(&t.pair, numerics::tol::CLASSIFY).is_some() {
            rec.record("subspace.perp_sides_coincide", l.distance(&r)?);
        }

        let rank = t.rng.random_range(0..n);
        let a = LinearOperator::new(sampling::rank_deficient(&mut t.rng, n, rank))?;
        let tol = rec.slot("subspace.kernel_image").tolerance;
        let report = subspaces::check_kernel_image_theorem(&t.pair, &a, RANK_TOL, tol)?;
        for c in &report.checks {
            let target = if c.name.starts_with("rank") {
                "subspace.rank_nullity"
            } else if c.name.starts_with('(') {
                "subspace.double_perp"
            } else {
                "subspace.kernel_image"
            };
            rec.record(target, c.max_residual);
        }
        Ok(())
    });
}

fn expected_algebra_dim(family: StructureFamily, n: usize) -> Option<usize> {
    match family {
        StructureFamily::Euclidean | StructureFamily::Minkowski | StructureFamily::PseudoEuclidean => Some(n * (n - 1) / 2),
        StructureFamily::Symplectic => Some(n * (n + 1) / 2),
        StructureFamily::General => None,
    }
}

fn group_checks(rec: &mut Recorder, t: &mut Task) {
    let names = [
        "group.membership",
        "group.closure",
        "group.inverse_is_adjoint",
        "group.det_unit",
        "algebra.membership",
        "algebra.commutator_closure",
        "algebra.dimension",
    ];
    rec.section(&names, |rec| {
        let pair = &t.pair;
        let elems = t.group.elements();
        for (i, a) in elems.iter().enumerate() {
            let op = LinearOperator::new(a.clone())?;
            rec.record("group.membership", symmetry::in_group(pair, &op, 1.0)?.residual);
            let next = &elems[(i + 1) % elems.len()];
            let prod = LinearOperator::new(a * next)?;
            rec.record("group.closure", symmetry::in_group(pair, &prod, 1.0)?.residual);
            let inv = numerics::inverse(a, numerics::tol::RANK)?;
            for side in Side::BOTH {
                rec.record("group.inverse_is_adjoint", rel_diff(&inv, adjoint(pair, &op, side)?.matrix()));
            }
            rec.record("group.det_unit", (numerics::det(a).abs() - 1.0).abs());
        }
        let basis = symmetry::algebra_basis(pair, numerics::tol::RANK);
        for x in basis.elements() {
            rec.record("algebra.membership", symmetry::in_algebra(pair, x, 1.0)?.residual);
        }
        let els = basis.elements();
        for i in 0..els.len().min(4) {
            let (x, y) = (els[i].matrix(), els[(i + 1) % els.len()].matrix());
            let c = x * y - y * x;
            // scaled by the factors, since [X, Y] itself may vanish
            let scale = x.norm() * y.norm() * pair.b().norm();
            rec.record("algebra.commutator_closure", (&c * pair.b() + pair.b() * c.transpose()).norm() / scale);
        }
        if let Some(d) = expected_algebra_dim(t.family, pair.n()) {
            rec.record("algebra.dimension", d.abs_diff(basis.dim()) as f64);
        }
        Ok(())
    });
}

/// `(1 + q(x)) x`, equivariant under the whole group.
fn equivariant_field(q: &ScalarField) -> Result<VectorField> {
    let n = q.nvars();
    let weight = &ScalarField::constant(n, 1.0) + q;
    VectorField::from_components((0..n).map(|i| &weight * &ScalarField::coordinate(n, i)).collect())
}

fn gradient_checks(rec: &mut Recorder, t: &mut Task) {
    let names = [
        "gradient.defining",
        "gradient.left_right_relation",
        "gradient.symbolic_vs_fd",
        "gradient.equivariance_invariant",
        "gradient.action_compat",
        "action.left_action",
        "action.invariance_fixed",
    ];
    rec.section(&names, |rec| {
        let pair = &t.pair;
        let n = pair.n();
        for f in &t.fields {
            for x in &t.points {
                for side in Side::BOTH {
                    let v = sampling::uniform_vector(&mut t.rng, n, 1.0);
                    rec.record("gradient.defining", diffops::gradient_defining_residual(pair, f, x, &v, side)?);
                }
                rec.record("gradient.left_right_relation", diffops::gradient_relation_residual(pair, f, x)?);
                rec.record("gradient.symbolic_vs_fd", rel_diff_vec(&f.grad(x)?, &f.fd_grad(x, None)?));
            }
        }

        let tol = rec.slot("gradient.equivariance_invariant").tolerance;
        let q = diffops::quadratic_field(pair.form());
        let wrapped = ScalarField::parse("sin(x1) + x1^2", 1)?.substitute(std::slice::from_ref(&q))?;
        for f in [&q, &wrapped] {
            let report = diffops::gradient_equivariance_suite(pair, f, &t.group, &t.points, tol)?;
            rec.absorb("action.invariance_fixed", &report.premise);
            for c in &report.checks {
                let target = if c.name.starts_with("gradient.equivariant") {
                    "gradient.equivariance_invariant"
                } else {
                    "gradient.action_compat"
                };
                if c.vacuous {
                    // the premise holds by construction, so a skipped conclusion is a failure
                    rec.record(target, f64::MAX);
                } else {
                    rec.absorb(target, c);
                }
            }
        }
        let field = equivariant_field(&q)?;
        for a in t.group.elements() {
            let moved = diffops::act_vector(&LinearOperator::new(a.clone())?, &field)?;
            for x in &t.points {
                rec.record("action.invariance_fixed", rel_diff_vec(&moved.eval(x)?, &field.eval(x)?));
            }
        }

        for f in &t.fields {
            let report = diffops::gradient_equivariance_suite(pair, f, &t.group, &t.points, tol)?;
            for c in report.checks.iter().filter(|c| c.name.starts_with("gradient.action")) {
                rec.absorb("gradient.action_compat", c);
            }
        }

        let f = &t.fields[0];
        let vfield = sampling::random_vector_field(&mut t.rng, n, 2);
        let elems = t.group.elements();
        for i in 0..3.min(elems.len()) {
            let a1 = LinearOperator::new(elems[i].clone())?;
            let a2 = LinearOperator::new(elems[(i + 1) % elems.len()].clone())?;
            let prod = LinearOperator::new(a1.matrix() * a2.matrix())?;
            let direct = diffops::act_scalar(&prod, f)?;
            let nested = diffops::act_scalar(&a1, &diffops::act_scalar(&a2, f)?)?;
            let direct_v = diffops::act_vector(&prod, &vfield)?;
            let nested_v = diffops::act_vector(&a1, &diffops::act_vector(&a2, &vfield)?)?;
            for x in &t.points {
                rec.record("action.left_action", rel_diff_scalar(direct.eval_at(x)?, nested.eval_at(x)?));
                rec.record("action.left_action", rel_diff_vec(&direct_v.eval(x)?, &nested_v.eval(x)?));
            }
        }
        Ok(())
    });
}

/// A b-harmonic function for each canonical family, when one is at hand.
fn harmonic_function(family: StructureFamily, pair: &GeometricPair, fallback: &ScalarField) -> Result<Option<ScalarField>> {
    let n = pair.n();
    let text = match family {
        StructureFamily::Euclidean => "x1^3 - 3*x1*x2^2".to_string(),
        // a cubic in a null direction of the form
        StructureFamily::Minkowski | StructureFamily::PseudoEuclidean => format!("(x1 - x{n})^3"),
        StructureFamily::Symplectic => return Ok(Some(fallback.clone())),
        StructureFamily::General => return Ok(None),
    };
    ScalarField::parse(&text, n).map(Some)
}

fn laplacian_checks(rec: &mut Recorder, t: &mut Task) {
    let names = [
        "laplacian.left_right_coincide",
        "laplacian.specialization",
        "laplacian.linearity",
        "laplacian.product_left",
        "laplacian.product_right",
        "laplacian.product_symmetric",
        "laplacian.equivariance",
        "laplacian.harmonic_transfer",
    ];
    rec.section(&names, |rec| {
        let pair = &t.pair;
        let n = pair.n();
        let b = pair.b();
        let tol = rec.slot("laplacian.left_right_coincide").tolerance;
        for f in &t.fields {
            rec.absorb("laplacian.left_right_coincide", &diffops::laplacian_coincidence(pair, f, &t.points, tol)?);
        }

        // diagonal signs of the canonical orthogonal types; symplectic expects zero
        let signs: Option<Vec<f64>> = match t.family {
            StructureFamily::Euclidean | StructureFamily::Minkowski | StructureFamily::PseudoEuclidean => {
                Some((0..n).map(|i| pair.form().gram()[(i, i)]).collect())
            }
            StructureFamily::Symplectic => Some(vec![0.0; n]),
            StructureFamily::General => None,
        };
        if let Some(signs) = signs {
            for f in &t.fields {
                for x in &t.points {
                    let h = f.hessian(x)?;
                    let expected: f64 = (0..n).map(|i| signs[i] * h[(i, i)]).sum();
                    let got = diffops::laplacian_b(pair, f, x)?;
                    let scale = b.abs().component_mul(&h.abs()).sum().max(1.0);
                    rec.record("laplacian.specialization", (got - expected).abs() / scale);
                }
            }
        }

        let tol = rec.slot("laplacian.product_left").tolerance;
        for (f, g) in [(&t.fields[0], &t.fields[1]), (&t.fields[2], &t.fields[3])] {
            let report = diffops::product_rule_check(pair, f, g, &t.points, tol, &mut t.rng)?;
            for c in &report.checks {
                rec.absorb(&c.name.replace("product.", "product_"), c);
            }
        }

        let tol = rec.slot("laplacian.equivariance").tolerance;
        for f in [&t.fields[0], &t.fields[3]] {
            rec.absorb("laplacian.equivariance", &diffops::laplacian_equivariance(pair, f, &t.group, &t.points, tol)?);
        }

        if let Some(u) = harmonic_function(t.family, pair, &t.fields[0])? {
            for x in &t.points {
                rec.record("laplacian.harmonic_transfer", rel_diff_scalar(diffops::laplacian_b(pair, &u, x)?, 0.0));
            }
            for a in t.group.elements().iter().take(4) {
                let moved = diffops::act_scalar(&LinearOperator::new(a.clone())?, &u)?;
                for x in &t.points {
                    let value = diffops::laplacian_b(pair, &moved, x)?;
                    let scale = b.abs().component_mul(&moved.hessian(x)?.abs()).sum().max(1.0);
                    rec.record("laplacian.harmonic_transfer", value.abs() / scale);
                }
            }
        }
        Ok(())
    });
}

/// `<x, x>`, `<x, y>`, `<y, y>` on `R^{2n}`.
pub fn euclidean_generators(n: usize) -> Vec<ScalarField> {
    let dot = |a: usize, b: usize| {
        let terms: Vec<ScalarField> =
            (0..n).map(|i| &ScalarField::coordinate(2 * n, a + i) * &ScalarField::coordinate(2 * n, b + i)).collect();
        terms.iter().skip(1).fold(terms[0].clone(), |acc, t| &acc + t)
    };
    vec![dot(0, 0), dot(0, n), dot(n, n)]
}

/// Runs the two built-in Euclidean generator expansions on `R^n`: the
/// identity field with coefficient `u2`, and `<x, x> x` with `u1 u2` (left)
/// and `u2 u3` (right).
pub fn euclidean_generator_examples(n: usize, points: &[Vector], tol: f64) -> Result<Vec<CheckReport>> {
    let pair = BilinearForm::canonical(StructureKind::Euclidean, n)?.geometric_pair();
    let us = euclidean_generators(n);
    let coeff = |text: &str| ScalarField::parse(text, 3);
    let q = diffops::quadratic_field(pair.form());
    let cubic = VectorField::from_components((0..n).map(|i| &q * &ScalarField::coordinate(n, i)).collect())?;
    let mut out = Vec::new();
    let cases = [
        (VectorField::identity(n), coeff("x2")?, coeff("x2")?),
        (cubic, coeff("x1*x2")?, coeff("x2*x3")?),
    ];
    for (field, f, g) in &cases {
        out.extend(diffops::generator_expansion_check(&pair, f, Some(g), &us, field, points, tol)?.checks);
    }
    Ok(out)
}

fn correspondence_checks(rec: &mut Recorder, t: &mut Task) {
    let names = ["correspondence.round_trip", "correspondence.invariance_transfer", "generators.euclidean_expansion"];
    rec.section(&names, |rec| {
        let pair = &t.pair;
        let n = pair.n();
        for _ in 0..2 {
            let field = sampling::random_vector_field(&mut t.rng, n, 3);
            for side in Side::BOTH {
                rec.record("correspondence.round_trip", diffops::round_trip_residual(pair, &field, side, &t.points)?);
            }
        }

        let tol = rec.slot("correspondence.invariance_transfer").tolerance;
        let field = equivariant_field(&diffops::quadratic_field(pair.form()))?;
        let few = GroupSample::new(pair, t.group.elements().iter().take(5).cloned().collect(), t.group.provenance())?;
        rec.absorb("correspondence.invariance_transfer", &diffops::check_equivariant(&field, &few, &t.points, tol)?);
        let diag = diffops::diagonal_sample(&few)?;
        let fxy = diffops::pair_field(pair, &field, Side::Left)?;
        let points2 = sampling::sample_points(&mut t.rng, 2 * n, POINTS, 2.0);
        rec.absorb("correspondence.invariance_transfer", &diffops::check_invariant(&fxy, &diag, &points2, tol)?);

        let tol = rec.slot("generators.euclidean_expansion").tolerance;
        for c in euclidean_generator_examples(n, &t.points, tol)? {
            rec.absorb("generators.euclidean_expansion", &c);
        }
        Ok(())
    });
}
