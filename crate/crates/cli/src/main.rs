//! Command-line front end: structure queries, single identity checks and the
//! randomized verification suite.
//!
//! Exit codes: 0 on success or passing checks, 1 when a check fails, 2 on
//! usage or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use geostruct::diffops::{self, GroupSample, Provenance};
use geostruct::harness::{self, StructureFamily, SuiteConfig, ALL_IDENTITIES};
use geostruct::{
    adjoints, io, sampling, subspaces, symmetry, BilinearForm, CheckReport, GeometricPair, LinearOperator,
    Matrix, PointField, ScalarField, Side, StructureKind, Subspace, Vector, VectorField,
};

#[derive(Parser)]
#[command(name = "geostruct", version, about = "Geometric structures on R^n: adjoints, complements, symmetry groups, gradients and the b-Laplacian")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FormArg {
    /// Form file ({"n": .., "matrix": [[..]]}) or a shorthand: euclidean:N,
    /// minkowski:N, pseudo:N:K, symplectic:N.
    #[arg(long)]
    form: String,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a form as Euclidean, Minkowski, pseudo-Euclidean, symplectic or general.
    Classify {
        #[command(flatten)]
        form: FormArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Print B with <x, y> = b(x, B y).
    Pair {
        #[command(flatten)]
        form: FormArg,
    },
    /// Left or right adjoint of an operator, as a JSON matrix.
    Adjoint {
        #[command(flatten)]
        form: FormArg,
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        side: Side,
    },
    /// Left or right b-orthogonal complement of the span of some vectors.
    Perp {
        #[command(flatten)]
        form: FormArg,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        side: Side,
    },
    /// Test whether an operator preserves the form.
    GroupCheck {
        #[command(flatten)]
        form: FormArg,
        #[arg(long)]
        op: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Basis of the Lie algebra of the symmetry group, as JSON matrices.
    AlgebraBasis {
        #[command(flatten)]
        form: FormArg,
    },
    /// Left or right b-gradient of a field at a point.
    Grad {
        #[command(flatten)]
        form: FormArg,
        /// Field file ({"nvars": .., "expr": ..}) or an inline expression.
        #[arg(long)]
        field: String,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long)]
        side: Side,
    },
    /// The b-Laplacian of a field at a point.
    Laplacian {
        #[command(flatten)]
        form: FormArg,
        #[arg(long)]
        field: String,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Run one identity check and print the report as JSON.
    Check(CheckArgs),
    /// Run the randomized suite over every identity and print the JSON report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// One of: invariant, equivariant, gradient-defining, gradient-equivariance,
    /// laplacian-coincidence, laplacian-equivariance, product-rule, round-trip,
    /// invariance-transfer, adjoint, kernel-image.
    identity: String,
    #[command(flatten)]
    form: FormArg,
    #[arg(long)]
    field: Option<String>,
    /// Second scalar field, for product-rule.
    #[arg(long)]
    field2: Option<String>,
    /// Vector field file ({"nvars": .., "components": [..]}) or inline
    /// components separated by ';'.
    #[arg(long)]
    vector_field: Option<String>,
    #[arg(long)]
    op: Option<PathBuf>,
    #[arg(long)]
    op2: Option<PathBuf>,
    /// JSON list of group elements; replaces the sampled group.
    #[arg(long)]
    group: Option<PathBuf>,
    /// Number of exp-sampled group elements.
    #[arg(long, default_value_t = 10)]
    group_sample: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of random sample points in [-2, 2]^n.
    #[arg(long, default_value_t = 20)]
    points: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite configuration file; the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Comma-separated structure kinds.
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<StructureFamily>>,
    /// Tolerance applied to every identity.
    #[arg(long)]
    tol: Option<f64>,
    /// Also write the report to this file.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Suppress the per-identity summary on stderr.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_form(arg: &str) -> Result<BilinearForm> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(io::read_form(path)?);
    }
    let parts: Vec<&str> = arg.split(':').collect();
    let dim = |s: &str| s.parse::<usize>().map_err(|_| anyhow!("form '{arg}': '{s}' is not a dimension"));
    let kind = match parts.as_slice() {
        ["euclidean", n] => (StructureKind::Euclidean, dim(n)?),
        ["minkowski", n] => (StructureKind::Minkowski, dim(n)?),
        ["pseudo" | "pseudo_euclidean" | "pseudo-euclidean", n, k] => (StructureKind::PseudoEuclidean(dim(k)?), dim(n)?),
        ["symplectic", n] => (StructureKind::Symplectic, dim(n)?),
        _ => bail!(anyhow!("form '{arg}': no such file, and not a shorthand like euclidean:3")),
    };
    BilinearForm::canonical(kind.0, kind.1).map_err(|e| anyhow!("form '{arg}': {e}"))
}

fn parse_field(arg: &str, n: usize, flag: &str) -> Result<ScalarField> {
    let path = Path::new(arg);
    let field = if path.exists() {
        io::read_scalar_field(path)?
    } else {
        ScalarField::parse(arg, n).map_err(|e| anyhow!("{flag} '{arg}': {e}"))?
    };
    if field.nvars() != n {
        bail!(anyhow!("{flag} '{arg}': field has {} variables, the form is on R^{n}", field.nvars()));
    }
    Ok(field)
}

fn parse_vector_field(arg: &str, n: usize) -> Result<VectorField> {
    let path = Path::new(arg);
    let field = if path.exists() {
        io::read_vector_field(path)?
    } else {
        let parts: Vec<&str> = arg.split(';').map(str::trim).collect();
        VectorField::parse(&parts, n).map_err(|e| anyhow!("--vector-field '{arg}': {e}"))?
    };
    if field.nvars() != n || field.dim() != n {
        bail!(anyhow!("--vector-field '{arg}': expected a field R^{n} -> R^{n}"));
    }
    Ok(field)
}

fn parse_point(arg: &str, n: usize) -> Result<Vector> {
    let coords = arg
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| anyhow!("--point '{arg}': '{s}' is not a number")))
        .collect::<Result<Vec<_>>>()?;
    if coords.len() != n {
        bail!(anyhow!("--point '{arg}': {} coordinates for R^{n}", coords.len()));
    }
    Ok(Vector::from_vec(coords))
}

fn read_operator(path: &Path, n: usize) -> Result<LinearOperator> {
    let op = io::read_operator(path)?;
    if op.n() != n {
        bail!(anyhow!("{}: operator is {m}x{m}, the form is on R^{n}", path.display(), m = op.n()));
    }
    Ok(op)
}

/// `-0` prints as `0`.
fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

/// Orthonormal basis vectors with tiny entries zeroed and the largest entry
/// made positive, for stable output.
fn display_basis(s: &Subspace) -> Vec<Vector> {
    s.basis_vectors()
        .into_iter()
        .map(|mut v| {
            v.apply(|x| *x = if x.abs() < 1e-14 { 0.0 } else { *x });
            let lead = v.iter().copied().fold(0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            if lead < 0.0 {
                v = -v;
            }
            v.map(clean)
        })
        .collect()
}

fn run(cli: Cli) -> Result<bool> {
    let json_out = cli.json;
    match cli.command {
        Command::Classify { form, tol } => {
            let form = parse_form(&form.form)?;
            let class = form.classify(tol);
            let k = match class.kind {
                StructureKind::PseudoEuclidean(k) => Some(k),
                _ => None,
            };
            if json_out {
                print_json(&json!({"n": form.n(), "kind": class.kind.label(), "k": k, "signature": class.signature}));
            } else {
                let mut line = class.kind.label().to_string();
                if let Some((p, q)) = class.signature {
                    line += &format!(" signature ({p}, {q})");
                }
                println!("{line}");
            }
            Ok(true)
        }
        Command::Pair { form } => {
            let pair = parse_form(&form.form)?.geometric_pair();
            if json_out {
                print_json(&json!({"b": io::matrix_to_value(&pair.b().map(clean)), "residual": pair.pair_residual()}));
            } else {
                println!("{}", serde_json::to_string(&io::matrix_to_value(&pair.b().map(clean)))?);
            }
            Ok(true)
        }
        Command::Adjoint { form, op, side } => {
            let pair = parse_form(&form.form)?.geometric_pair();
            let a = read_operator(&op, pair.n())?;
            let star = adjoints::adjoint(&pair, &a, side)?;
            print_json(&io::matrix_to_value(&star.matrix().map(clean)));
            Ok(true)
        }
        Command::Perp { form, vectors, side } => {
            let form = parse_form(&form.form)?;
            let vs = io::read_vectors(&vectors)?;
            let v = Subspace::from_vectors(form.n(), &vs, geostruct::numerics::tol::RANK).map_err(|e| anyhow!("{}: {e}", vectors.display()))?;
            let p = subspaces::perp(&form, &v, side)?;
            let basis: Vec<Value> = display_basis(&p).iter().map(io::vector_to_value).collect();
            print_json(&Value::from(basis));
            Ok(true)
        }
        Command::GroupCheck { form, op, tol } => {
            let pair = parse_form(&form.form)?.geometric_pair();
            let a = read_operator(&op, pair.n())?;
            let m = symmetry::in_group(&pair, &a, tol)?;
            if json_out {
                print_json(&serde_json::to_value(m)?);
            } else {
                println!("{} (residual {:e})", if m.member { "member" } else { "not a member" }, m.residual);
            }
            Ok(m.member)
        }
        Command::AlgebraBasis { form } => {
            let pair = parse_form(&form.form)?.geometric_pair();
            let basis = symmetry::algebra_basis(&pair, geostruct::numerics::tol::RANK);
            let mats: Vec<Value> = basis.elements().iter().map(|x| io::matrix_to_value(&x.matrix().map(clean))).collect();
            print_json(&Value::from(mats));
            Ok(true)
        }
        Command::Grad { form, field, point, side } => {
            let pair = parse_form(&form.form)?.geometric_pair();
            let f = parse_field(&field, pair.n(), "--field")?;
            let x = parse_point(&point, pair.n())?;
            let g = diffops::grad_b(&pair, &f, &x, side)?.map(clean);
            print_json(&io::vector_to_value(&g));
            Ok(true)
        }
        Command::Laplacian { form, field, point } => {
            let pair = parse_form(&form.form)?.geometric_pair();
            let f = parse_field(&field, pair.n(), "--field")?;
            let x = parse_point(&point, pair.n())?;
            let value = clean(diffops::laplacian_b(&pair, &f, &x)?);
            if json_out {
                print_json(&json!({ "value": value }));
            } else {
                println!("{value}");
            }
            Ok(true)
        }
        Command::Check(args) => run_check(args),
        Command::Verify(args) => run_verify(args),
    }
}

fn read_group(path: &Path, pair: &GeometricPair) -> Result<GroupSample> {
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| anyhow!("{source}: {e}"))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| anyhow!("{source}: {e}"))?;
    let items = doc.as_array().ok_or_else(|| anyhow!("{source}: expected a list of matrices"))?;
    let elements = items
        .iter()
        .enumerate()
        .map(|(i, m)| io::matrix_from_value(m, &format!("{source}[{i}]")))
        .collect::<geostruct::Result<Vec<Matrix>>>()?;
    GroupSample::new(pair, elements, Provenance::UserSupplied).map_err(|e| anyhow!("{source}: {e}"))
}

fn run_check(args: CheckArgs) -> Result<bool> {
    let pair = parse_form(&args.form.form)?.geometric_pair();
    let n = pair.n();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let points = sampling::sample_points(&mut rng, n, args.points, 2.0);
    let tol = args.tol;
    let need = |opt: &Option<String>, flag: &str| {
        opt.clone().ok_or_else(|| anyhow!("identity '{}' needs {flag}", args.identity))
    };
    let group = || -> Result<GroupSample> {
        match &args.group {
            Some(path) => read_group(path, &pair),
            None => Ok(GroupSample::sampled(&pair, args.group_sample, args.seed, symmetry::DEFAULT_SAMPLE_SCALE)?),
        }
    };
    let named = |mut r: CheckReport, name: &str| {
        r.name = name.to_string();
        r
    };

    let mut extra = serde_json::Map::new();
    let checks: Vec<CheckReport> = match args.identity.as_str() {
        "invariant" => {
            let f = parse_field(&need(&args.field, "--field")?, n, "--field")?;
            vec![named(diffops::check_invariant(&f, &group()?, &points, tol)?, "invariant")]
        }
        "equivariant" => {
            let v = parse_vector_field(&need(&args.vector_field, "--vector-field")?, n)?;
            vec![named(diffops::check_equivariant(&v, &group()?, &points, tol)?, "equivariant")]
        }
        "gradient-defining" => {
            let f = parse_field(&need(&args.field, "--field")?, n, "--field")?;
            let mut out = Vec::new();
            for side in Side::BOTH {
                let mut c = CheckReport::new(format!("gradient.defining.{side}"), tol);
                for x in &points {
                    let v = sampling::uniform_vector(&mut rng, n, 1.0);
                    c.record(diffops::gradient_defining_residual(&pair, &f, x, &v, side)?);
                }
                out.push(c);
            }
            let mut rel = CheckReport::new("gradient.left_right_relation", tol);
            for x in &points {
                rel.record(diffops::gradient_relation_residual(&pair, &f, x)?);
            }
            out.push(rel);
            out
        }
        "gradient-equivariance" => {
            let f = parse_field(&need(&args.field, "--field")?, n, "--field")?;
            let r = diffops::gradient_equivariance_suite(&pair, &f, &group()?, &points, tol)?;
            extra.insert("premise".into(), serde_json::to_value(&r.premise)?);
            r.checks
        }
        "laplacian-coincidence" => {
            let f = parse_field(&need(&args.field, "--field")?, n, "--field")?;
            vec![diffops::laplacian_coincidence(&pair, &f, &points, tol)?]
        }
        "laplacian-equivariance" => {
            let f = parse_field(&need(&args.field, "--field")?, n, "--field")?;
            vec![diffops::laplacian_equivariance(&pair, &f, &group()?, &points, tol)?]
        }
        "product-rule" => {
            let f = parse_field(&need(&args.field, "--field")?, n, "--field")?;
            let g = parse_field(&need(&args.field2, "--field2")?, n, "--field2")?;
            diffops::product_rule_check(&pair, &f, &g, &points, tol, &mut rng)?.checks
        }
        "round-trip" => {
            let v = parse_vector_field(&need(&args.vector_field, "--vector-field")?, n)?;
            let mut out = Vec::new();
            for side in Side::BOTH {
                let mut c = CheckReport::new(format!("correspondence.round_trip.{side}"), tol);
                c.record(diffops::round_trip_residual(&pair, &v, side, &points)?);
                out.push(c);
            }
            out
        }
        "invariance-transfer" => {
            let v = parse_vector_field(&need(&args.vector_field, "--vector-field")?, n)?;
            let h = group()?;
            let fxy = diffops::pair_field(&pair, &v, Side::Left)?;
            let points2 = sampling::sample_points(&mut rng, 2 * n, args.points, 2.0);
            vec![
                named(diffops::check_equivariant(&v, &h, &points, tol)?, "premise.equivariant"),
                named(diffops::check_invariant(&fxy, &diffops::diagonal_sample(&h)?, &points2, tol)?, "pair_field.invariant"),
            ]
        }
        "adjoint" => {
            let a1 = read_operator(args.op.as_deref().ok_or_else(|| anyhow!("identity 'adjoint' needs --op"))?, n)?;
            let a2 = match &args.op2 {
                Some(p) => read_operator(p, n)?,
                None => LinearOperator::new(sampling::uniform_matrix(&mut rng, n, n))?,
            };
            let r = adjoints::check_adjoint_identities(&pair, &a1, &a2, tol, &mut rng)?;
            extra.insert("involution".into(), serde_json::to_value(&r.involution)?);
            r.checks
        }
        "kernel-image" => {
            let a = read_operator(args.op.as_deref().ok_or_else(|| anyhow!("identity 'kernel-image' needs --op"))?, n)?;
            subspaces::check_kernel_image_theorem(&pair, &a, geostruct::numerics::tol::RANK, tol)?.checks
        }
        other => bail!(anyhow!("unknown identity '{other}'; see `geostruct check --help`")),
    };
    let pass = checks.iter().all(|c| c.pass);
    let mut out = serde_json::Map::new();
    out.insert("identity".into(), Value::from(args.identity.clone()));
    out.insert("checks".into(), serde_json::to_value(&checks)?);
    out.extend(extra);
    out.insert("pass".into(), Value::from(pass));
    print_json(&Value::Object(out));
    Ok(pass)
}

fn run_verify(args: VerifyArgs) -> Result<bool> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            serde_json::from_str::<SuiteConfig>(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?
        }
        None => SuiteConfig::default(),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(lo) = args.n_min {
        config.n_range.0 = lo;
    }
    if let Some(hi) = args.n_max {
        config.n_range.1 = hi;
    }
    if let Some(kinds) = args.kinds {
        config.structure_kinds = kinds;
    }
    if let Some(t) = args.tol {
        config.tolerances.insert(ALL_IDENTITIES.to_string(), t);
    }
    let report = harness::run_suite(&config)?;
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(path) = &args.output {
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    if !args.quiet {
        for c in &report.checks {
            let status = if c.vacuous { "SKIP" } else if c.pass { "PASS" } else { "FAIL" };
            eprintln!("{status} {:36} trials {:7} max residual {:.3e} (tol {:.0e})", c.name, c.trials, c.max_residual, c.tolerance);
        }
        eprintln!("{} in {:.1} s", if report.pass { "all identities hold" } else { "some identities FAILED" }, report.wall_time_s);
    }
    Ok(report.pass)
}
