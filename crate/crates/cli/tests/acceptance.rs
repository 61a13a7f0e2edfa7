//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use geostruct::diffops::{self, GroupSample};
use geostruct::harness::{euclidean_generator_examples, MANIFEST};
use geostruct::numerics::{self, singular_values};
use geostruct::{
    adjoints, sampling, subspaces, symmetry, BilinearForm, GeometricPair, LinearOperator, Matrix, ScalarField, Side,
    StructureKind, Subspace, Vector,
};

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.1?}, limit {limit:?}"))
}

fn well_conditioned(m: &Matrix) -> bool {
    let sv = singular_values(m);
    sv.last().copied().unwrap_or(0.0) > 1e-3 * sv[0]
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, skew: bool) -> BilinearForm {
    loop {
        let a = sampling::uniform_matrix(rng, n, n);
        let m = if skew { &a - a.transpose() } else { &a + a.transpose() };
        if well_conditioned(&m) {
            return BilinearForm::from_matrix(m, numerics::tol::NON_DEGENERATE).unwrap();
        }
    }
}

/// Mixed corpus: general, random symmetric, random skew, canonical orthogonal
/// and symplectic structures with n in 2..=8.
fn corpus(seed: u64, count: usize) -> Vec<BilinearForm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.random_range(2..=8usize);
            let even = 2 * (n / 2);
            match i % 5 {
                0 => sampling::random_form(&mut rng, n, 1e-3),
                1 => random_symmetric(&mut rng, n, false),
                2 => random_symmetric(&mut rng, even, true),
                3 => {
                    let k = rng.random_range(1..n);
                    BilinearForm::canonical(StructureKind::PseudoEuclidean(k), n).unwrap()
                }
                _ if i % 2 == 0 => BilinearForm::canonical(StructureKind::Symplectic, even).unwrap(),
                _ => BilinearForm::canonical(StructureKind::Euclidean, n).unwrap(),
            }
        })
        .collect()
}

/// One representative per structure family for n in 2..=6.
fn family_pairs() -> Vec<(&'static str, GeometricPair)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = Vec::new();
    for n in 2..=6usize {
        out.push(("euclidean", BilinearForm::canonical(StructureKind::Euclidean, n).unwrap()));
        out.push(("minkowski", BilinearForm::canonical(StructureKind::Minkowski, n).unwrap()));
        if n >= 3 {
            out.push(("pseudo_euclidean", BilinearForm::canonical(StructureKind::PseudoEuclidean(n / 2), n).unwrap()));
        }
        if n % 2 == 0 {
            out.push(("symplectic", BilinearForm::canonical(StructureKind::Symplectic, n).unwrap()));
        }
        out.push(("general", sampling::random_form(&mut rng, n, 1e-3)));
    }
    out.into_iter().map(|(k, f)| (k, f.geometric_pair())).collect()
}

fn dot(a: &Vector, b: &Vector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// `x^T M y` by explicit summation.
fn bilinear(m: &Matrix, x: &Vector, y: &Vector) -> f64 {
    let mut s = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            s += x[i] * m[(i, j)] * y[j];
        }
    }
    s
}

fn pair_law() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0f64;
    for form in corpus(1, 200) {
        let pair = form.geometric_pair();
        let n = form.n();
        for _ in 0..20 {
            let x = sampling::uniform_vector(&mut rng, n, 1.0);
            let y = sampling::uniform_vector(&mut rng, n, 1.0);
            let by = pair.b() * &y;
            let scale = x.norm() * y.norm() * form.gram().norm() * pair.b().norm();
            worst = worst.max((dot(&x, &y) - bilinear(form.gram(), &x, &by)).abs() / scale.max(1.0));
        }
    }
    ensure(worst <= 1e-9, || format!("max residual {worst:e}"))?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("max residual {worst:.2e}"))
}

fn adjoint_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst, mut structured, mut violated) = (0f64, 0usize, 0usize);
    for form in corpus(1, 200) {
        let pair = form.geometric_pair();
        let n = form.n();
        let a1 = LinearOperator::new(sampling::uniform_matrix(&mut rng, n, n)).unwrap();
        let a2 = LinearOperator::new(sampling::uniform_matrix(&mut rng, n, n)).unwrap();
        let r = adjoints::check_adjoint_identities(&pair, &a1, &a2, 1e-8, &mut rng).map_err(|e| e.to_string())?;
        for c in &r.checks {
            ensure(c.pass, || format!("{} residual {:e} on n = {n}", c.name, c.max_residual))?;
            worst = worst.max(c.max_residual);
        }

        // involution identities against the predicate B^T = +-B
        let b = pair.b();
        let bt = b.transpose();
        let sym = (&bt - b).norm() <= 1e-10 * b.norm() || (&bt + b).norm() <= 1e-10 * b.norm();
        let inv = &r.involution;
        let res = [inv.left_involution_residual, inv.right_involution_residual, inv.left_right_residual];
        if sym {
            structured += 1;
            ensure(res.iter().all(|&x| x <= 1e-8), || format!("involution fails on a symmetric/skew form: {res:?}"))?;
        } else if res.iter().all(|&x| x > 1e-4) {
            violated += 1;
        }
        // independent recomputation of A^{*L} = B^T A^T M^T on one operator
        let star = adjoints::adjoint(&pair, &a1, Side::Left).unwrap();
        let expected = b.transpose() * a1.matrix().transpose() * form.gram().transpose();
        ensure(numerics::rel_diff(star.matrix(), &expected) <= 1e-12, || "left adjoint formula".into())?;
    }
    ensure(structured > 0, || "no symmetric or skew structure in corpus".into())?;
    ensure(violated > 0, || "involution identities never fail on a general structure".into())?;
    within(start, Duration::from_secs(10))?;
    Ok(format!("max residual {worst:.2e}; involution on {structured} symmetric/skew forms, fails on {violated} general"))
}

fn kernel_image() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let forms = corpus(3, 100);
    let mut worst = 0f64;
    for form in &forms {
        let pair = form.geometric_pair();
        let n = form.n();
        let r = rng.random_range(0..n);
        let a = LinearOperator::new(sampling::rank_deficient(&mut rng, n, r)).unwrap();
        let report = subspaces::check_kernel_image_theorem(&pair, &a, 1e-9, 1e-8).map_err(|e| e.to_string())?;
        for c in &report.checks {
            ensure(c.pass, || format!("{} distance {:e} (n = {n}, rank {r})", c.name, c.max_residual))?;
            worst = worst.max(c.max_residual);
        }
        // dimension of complements of random subspaces
        let k = rng.random_range(0..=n);
        let vs: Vec<Vector> = (0..k).map(|_| sampling::uniform_vector(&mut rng, n, 1.0)).collect();
        let v = Subspace::from_vectors(n, &vs, 1e-10).unwrap();
        for side in Side::BOTH {
            let p = subspaces::perp(form, &v, side).unwrap();
            ensure(p.dim() == n - v.dim(), || format!("dim perp {} for dim V {} in R^{n}", p.dim(), v.dim()))?;
            // every basis vector is b-orthogonal to V on the requested side
            for w in p.basis_vectors() {
                for u in v.basis_vectors() {
                    let val = match side {
                        Side::Left => bilinear(form.gram(), &w, &u),
                        Side::Right => bilinear(form.gram(), &u, &w),
                    };
                    ensure(val.abs() <= 1e-9 * form.gram().norm(), || format!("b-orthogonality {val:e}"))?;
                }
            }
        }
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("max projector distance {worst:.2e}"))
}

fn group_laws() -> Outcome {
    let start = Instant::now();
    let mut worst = 0f64;
    for (kind, pair) in family_pairs() {
        let n = pair.n();
        for s in 0..50u64 {
            let a = symmetry::sample_group_element(&pair, 1000 + s, symmetry::DEFAULT_SAMPLE_SCALE);
            let m = a.matrix();
            // A B A^T = B computed directly
            let res = numerics::rel_diff(&(m * pair.b() * m.transpose()), pair.b());
            ensure(res <= 1e-8, || format!("{kind} n = {n}: A B A^T residual {res:e}"))?;
            let inv = m.clone().try_inverse().ok_or("singular group element")?;
            for side in Side::BOTH {
                let star = adjoints::adjoint(&pair, &a, side).unwrap();
                let r = numerics::rel_diff(&inv, star.matrix());
                ensure(r <= 1e-8, || format!("{kind} n = {n}: inverse vs adjoint {r:e}"))?;
                worst = worst.max(r);
            }
            let d = m.determinant().abs();
            ensure((d - 1.0).abs() <= 1e-8, || format!("{kind} n = {n}: |det| = {d}"))?;
            worst = worst.max(res);
        }
        let dim = symmetry::algebra_basis(&pair, numerics::tol::RANK).dim();
        let expected = match kind {
            "euclidean" | "minkowski" | "pseudo_euclidean" => Some(n * (n - 1) / 2),
            "symplectic" => Some(n * (n + 1) / 2),
            _ => None,
        };
        if let Some(e) = expected {
            ensure(dim == e, || format!("{kind} n = {n}: algebra dim {dim}, expected {e}"))?;
        }
    }
    let m = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let pair = BilinearForm::from_matrix(m, 1e-10).unwrap().geometric_pair();
    let basis = symmetry::algebra_basis(&pair, numerics::tol::RANK);
    ensure(basis.dim() == 1, || format!("dim g_b = {} for [[1,1],[0,1]]", basis.dim()))?;
    let g = basis.elements()[0].matrix();
    let target = Matrix::from_row_slice(2, 2, &[1.0, 2.0, -2.0, -1.0]);
    let cos = g.dot(&target).abs() / (g.norm() * target.norm());
    ensure((cos - 1.0).abs() <= 1e-10, || format!("generator not proportional: {g}"))?;
    within(start, Duration::from_secs(10))?;
    Ok(format!("max residual {worst:.2e}; [[1,1],[0,1]] algebra spanned by [[1,2],[-2,-1]]"))
}

fn gradient_calculus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut worst_def, mut worst_fd) = (0f64, 0f64);
    for (kind, pair) in family_pairs() {
        let n = pair.n();
        let form = pair.form();
        let fields = sampling::field_corpus(&mut rng, n, 30);
        let points = diffops::default_points(n, 17);
        for f in &fields {
            for x in points.iter().take(5) {
                let g = f.grad(x).map_err(|e| e.to_string())?;
                let left = diffops::grad_b(&pair, f, x, Side::Left).unwrap();
                let right = diffops::grad_b(&pair, f, x, Side::Right).unwrap();
                let v = sampling::uniform_vector(&mut rng, n, 1.0);
                let df = dot(&g, &v);
                let scale = g.norm().max(1.0) * v.norm() * form.gram().norm() * pair.b().norm();
                let r1 = (bilinear(form.gram(), &left, &v) - df).abs() / scale;
                let r2 = (bilinear(form.gram(), &v, &right) - df).abs() / scale;
                let rel = numerics::rel_diff_vec(&left, &(pair.b().transpose() * pair.b_inv() * &right));
                worst_def = worst_def.max(r1).max(r2).max(rel);
                ensure(r1.max(r2).max(rel) <= 1e-9, || format!("{kind} n = {n}: defining residual {:e}", r1.max(r2).max(rel)))?;

                // central differences, h = 1e-5
                let h = 1e-5;
                let fd = Vector::from_fn(n, |i, _| {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    (f.eval_at(&xp).unwrap() - f.eval_at(&xm).unwrap()) / (2.0 * h)
                });
                let r = (&g - &fd).amax() / g.amax().max(1.0);
                worst_fd = worst_fd.max(r);
                ensure(r <= 1e-5, || format!("{kind} n = {n}: symbolic vs FD {r:e} for {f}"))?;
            }
        }
    }
    Ok(format!("defining/relation max {worst_def:.2e}; symbolic vs FD max {worst_fd:.2e}"))
}

fn equivariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst = 0f64;
    for (i, (kind, pair)) in family_pairs().into_iter().enumerate() {
        let n = pair.n();
        let h = GroupSample::sampled(&pair, 10, 900 + i as u64, symmetry::DEFAULT_SAMPLE_SCALE).unwrap();
        let points = diffops::default_points(n, 23);
        let invariant = diffops::quadratic_field(pair.form());
        let arbitrary = sampling::random_polynomial(&mut rng, n, 3, 4);
        for f in [&invariant, &arbitrary] {
            let r = diffops::gradient_equivariance_suite(&pair, f, &h, &points, 1e-8).map_err(|e| e.to_string())?;
            for c in &r.checks {
                ensure(c.pass, || format!("{kind} n = {n}: {} residual {:e}", c.name, c.max_residual))?;
                if !c.vacuous {
                    worst = worst.max(c.max_residual);
                }
            }
            let l = diffops::laplacian_equivariance(&pair, f, &h, &points, 1e-8).map_err(|e| e.to_string())?;
            ensure(l.pass, || format!("{kind} n = {n}: laplacian equivariance {:e}", l.max_residual))?;
            worst = worst.max(l.max_residual);
        }
        let r = diffops::gradient_equivariance_suite(&pair, &invariant, &h, &points, 1e-8).unwrap();
        ensure(r.premise.pass && r.checks.iter().all(|c| !c.vacuous), || format!("{kind}: b(x, x) not invariant"))?;
    }
    Ok(format!("max residual {worst:.2e} over 20 points x 10 elements"))
}

fn laplacian_specializations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = 0f64;
    for n in 2..=6 {
        let pair = BilinearForm::canonical(StructureKind::Euclidean, n).unwrap().geometric_pair();
        let points = diffops::default_points(n, 31);
        for f in sampling::field_corpus(&mut rng, n, 30) {
            let second: Vec<ScalarField> = (0..n).map(|i| f.differentiate(i).unwrap().differentiate(i).unwrap()).collect();
            for x in &points {
                let terms: Vec<f64> = second.iter().map(|d| d.eval_at(x).unwrap()).collect();
                let classical: f64 = terms.iter().sum();
                let scale = terms.iter().map(|t| t.abs()).sum::<f64>().max(1.0);
                let r = (diffops::laplacian_b(&pair, &f, x).unwrap() - classical).abs() / scale;
                worst = worst.max(r);
                ensure(r <= 1e-12, || format!("euclidean n = {n}: {r:e} for {f}"))?;
            }
        }
    }

    let mink = BilinearForm::canonical(StructureKind::Minkowski, 2).unwrap().geometric_pair();
    let q = ScalarField::parse("x1^2 + x2^2", 2).unwrap();
    for x in diffops::default_points(2, 37) {
        let v = diffops::laplacian_b(&mink, &q, &x).unwrap();
        ensure(v == 0.0, || format!("minkowski laplacian of x1^2 + x2^2 is {v}"))?;
    }

    for n in [2, 4, 6] {
        let pair = BilinearForm::canonical(StructureKind::Symplectic, n).unwrap().geometric_pair();
        let points = diffops::default_points(n, 41);
        for f in sampling::field_corpus(&mut rng, n, 20) {
            for x in &points {
                let v = diffops::laplacian_b(&pair, &f, x).unwrap();
                let scale = pair.b().abs().component_mul(&f.hessian(x).unwrap().abs()).sum().max(1.0);
                worst = worst.max(v.abs() / scale);
                ensure(v.abs() / scale <= 1e-12, || format!("symplectic n = {n}: {v:e} for {f}"))?;
            }
        }
    }

    for (kind, pair) in family_pairs() {
        let n = pair.n();
        let points = diffops::default_points(n, 43);
        let fields = sampling::field_corpus(&mut rng, n, 4);
        for (f, g) in [(&fields[0], &fields[1]), (&fields[2], &fields[3])] {
            let r = diffops::product_rule_check(&pair, f, g, &points, 1e-8, &mut rng).map_err(|e| e.to_string())?;
            for c in &r.checks {
                ensure(c.pass, || format!("{kind} n = {n}: {} residual {:e}", c.name, c.max_residual))?;
            }
        }
    }
    Ok(format!("specialization max {worst:.2e}; product rules within 1e-8"))
}

fn correspondence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0f64;
    for (kind, pair) in family_pairs() {
        let n = pair.n();
        let points = diffops::default_points(n, 47);
        for _ in 0..20 {
            let field = sampling::random_vector_field(&mut rng, n, 3);
            for side in Side::BOTH {
                let r = diffops::round_trip_residual(&pair, &field, side, &points).map_err(|e| e.to_string())?;
                worst = worst.max(r);
                ensure(r <= 1e-10, || format!("{kind} n = {n} {side}: round trip {r:e}"))?;
            }
        }
    }
    for n in 1..=4 {
        let points = diffops::default_points(n, 53);
        for c in euclidean_generator_examples(n, &points, 1e-10).map_err(|e| e.to_string())? {
            ensure(c.pass, || format!("generator expansion n = {n}: {} residual {:e}", c.name, c.max_residual))?;
        }
    }
    Ok(format!("round trip max {worst:.2e}; generator expansions within 1e-10"))
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_geostruct"))
        .args(["verify", "--seed", "42", "--trials", "50", "--quiet"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(out.status.code() == Some(0), || format!("exit status {:?}", out.status))?;
    within(start, Duration::from_secs(60))?;
    let report: Value = serde_json::from_slice(&out.stdout).map_err(|e| format!("report is not JSON: {e}"))?;
    ensure(report["config"].is_object(), || "missing config".into())?;
    ensure(report["pass"] == Value::Bool(true), || "overall pass is not true".into())?;
    let checks = report["checks"].as_array().ok_or("missing checks")?;
    for c in checks {
        ensure(
            c["name"].is_string() && c["trials"].is_u64() && c["max_residual"].is_number() && c["pass"].is_boolean(),
            || format!("malformed check entry {c}"),
        )?;
    }
    for entry in MANIFEST {
        ensure(checks.iter().any(|c| c["name"] == entry.name), || format!("identity {} missing from report", entry.name))?;
    }
    Ok(format!("{} identities, all pass, {elapsed:.1?}", checks.len()))
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("geometric-pair law", pair_law),
        ("adjoint identities", adjoint_suite),
        ("kernel/image theorem", kernel_image),
        ("group and algebra laws", group_laws),
        ("gradient calculus", gradient_calculus),
        ("equivariance", equivariance),
        ("laplacian specializations", laplacian_specializations),
        ("correspondence round trip", correspondence),
        ("end-to-end verify", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let t = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}) [{t:.2} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why} [{t:.2} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria pass");
}
