//! Expression trees with light algebraic simplification, evaluation and
//! exact partial derivatives.

use rustc_hash::FxHashMap as HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Shared subtree handle. Derivatives reuse subtrees instead of copying.
pub type Node = Arc<Expr>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub(crate) fn apply(self, v: f64) -> Result<f64> {
        match self {
            Func::Sin => Ok(v.sin()),
            Func::Cos => Ok(v.cos()),
            Func::Exp => Ok(v.exp()),
            Func::Sqrt if v < 0.0 => Err(Error::EvalDomain(format!("sqrt of negative value {v}"))),
            Func::Sqrt => Ok(v.sqrt()),
        }
    }
}

/// Variables are zero-based: `Var(0)` prints as `x1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Node),
    Add(Node, Node),
    Sub(Node, Node),
    Mul(Node, Node),
    Div(Node, Node),
    Pow(Node, i32),
    Func(Func, Node),
}

fn as_const(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

fn folded(v: f64) -> Option<Node> {
    v.is_finite().then(|| constant(v))
}

pub fn constant(c: f64) -> Node {
    Arc::new(Expr::Const(c))
}

pub fn var(i: usize) -> Node {
    Arc::new(Expr::Var(i))
}

pub fn zero() -> Node {
    constant(0.0)
}

pub fn one() -> Node {
    constant(1.0)
}

pub fn is_zero(e: &Expr) -> bool {
    as_const(e) == Some(0.0)
}

pub fn neg(a: Node) -> Node {
    match &*a {
        Expr::Const(c) => constant(-c),
        Expr::Neg(inner) => inner.clone(),
        _ => Arc::new(Expr::Neg(a)),
    }
}

pub fn add(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => folded(x + y).unwrap_or_else(|| Arc::new(Expr::Add(a, b))),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Arc::new(Expr::Add(a, b)),
    }
}

pub fn sub(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => folded(x - y).unwrap_or_else(|| Arc::new(Expr::Sub(a, b))),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Arc::new(Expr::Sub(a, b)),
    }
}

pub fn mul(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => folded(x * y).unwrap_or_else(|| Arc::new(Expr::Mul(a, b))),
        (Some(0.0), _) | (_, Some(0.0)) => zero(),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        (Some(-1.0), _) => neg(b),
        (_, Some(-1.0)) => neg(a),
        _ => Arc::new(Expr::Mul(a, b)),
    }
}

/// Never folds a zero denominator; callers that build from user input reject
/// it separately.
pub fn div(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (_, Some(0.0)) => Arc::new(Expr::Div(a, b)),
        (Some(x), Some(y)) => folded(x / y).unwrap_or_else(|| Arc::new(Expr::Div(a, b))),
        (Some(0.0), _) => zero(),
        (_, Some(1.0)) => a,
        _ => Arc::new(Expr::Div(a, b)),
    }
}

pub fn pow(a: Node, k: i32) -> Node {
    match (k, as_const(&a)) {
        (0, _) => one(),
        (1, _) => a,
        (_, Some(x)) if !(x == 0.0 && k < 0) => {
            folded(x.powi(k)).unwrap_or_else(|| Arc::new(Expr::Pow(a, k)))
        }
        _ => Arc::new(Expr::Pow(a, k)),
    }
}

pub fn func(f: Func, a: Node) -> Node {
    if let Some(x) = as_const(&a) {
        if let Ok(v) = f.apply(x) {
            if let Some(c) = folded(v) {
                return c;
            }
        }
    }
    Arc::new(Expr::Func(f, a))
}

/// Sum of nodes, folding zeros.
pub fn sum(terms: impl IntoIterator<Item = Node>) -> Node {
    terms.into_iter().fold(zero(), add)
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let d = b.eval(x)?;
                if d == 0.0 {
                    return Err(Error::EvalDomain("division by zero".into()));
                }
                a.eval(x)? / d
            }
            Expr::Pow(a, k) => {
                let base = a.eval(x)?;
                if base == 0.0 && *k < 0 {
                    return Err(Error::EvalDomain("negative power of zero".into()));
                }
                base.powi(*k)
            }
            Expr::Func(f, a) => f.apply(a.eval(x)?)?,
        })
    }

    /// Largest variable index used, plus one.
    pub fn var_bound(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.var_bound(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.var_bound().max(b.var_bound())
            }
        }
    }

    pub fn depends_on(&self, i: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(j) => *j == i,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.depends_on(i),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(i) || b.depends_on(i)
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => 1 + a.node_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }
}

/// Exact partial derivative with respect to variable `i`.
pub fn derivative(e: &Node, i: usize) -> Node {
    derivative_memo(e, i, &mut HashMap::default())
}

// Shared subtrees are differentiated once, so the result keeps the sharing
// of the input.
fn derivative_memo(e: &Node, i: usize, memo: &mut HashMap<*const Expr, Node>) -> Node {
    if let Some(d) = memo.get(&Arc::as_ptr(e)) {
        return d.clone();
    }
    let mut d = |a: &Node| derivative_memo(a, i, memo);
    let out = match &**e {
        Expr::Const(_) => zero(),
        Expr::Var(j) => constant(if *j == i { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(d(a)),
        Expr::Add(a, b) => add(d(a), d(b)),
        Expr::Sub(a, b) => sub(d(a), d(b)),
        Expr::Mul(a, b) => {
            let (da, db) = (d(a), d(b));
            add(mul(da, b.clone()), mul(a.clone(), db))
        }
        Expr::Div(a, b) => {
            let (da, db) = (d(a), d(b));
            match (is_zero(&da), is_zero(&db)) {
                (true, true) => zero(),
                (_, true) => div(da, b.clone()),
                _ => div(sub(mul(da, b.clone()), mul(a.clone(), db)), pow(b.clone(), 2)),
            }
        }
        Expr::Pow(a, k) => mul(mul(constant(*k as f64), pow(a.clone(), k - 1)), d(a)),
        Expr::Func(f, a) => {
            let da = d(a);
            if is_zero(&da) {
                zero()
            } else {
                match f {
                    Func::Sin => mul(func(Func::Cos, a.clone()), da),
                    Func::Cos => neg(mul(func(Func::Sin, a.clone()), da)),
                    Func::Exp => mul(e.clone(), da),
                    Func::Sqrt => div(da, mul(constant(2.0), e.clone())),
                }
            }
        }
    };
    // a derivative that folds to zero is the canonical zero constant
    let out = if is_zero(&out) { zero() } else { out };
    memo.insert(Arc::as_ptr(e), out.clone());
    out
}

/// Replaces every `Var(j)` by `replacements[j]`, re-simplifying on the way
/// up.
pub fn substitute(e: &Node, replacements: &[Node]) -> Node {
    substitute_memo(e, replacements, &mut HashMap::default())
}

fn substitute_memo(e: &Node, replacements: &[Node], memo: &mut HashMap<*const Expr, Node>) -> Node {
    if let Some(s) = memo.get(&Arc::as_ptr(e)) {
        return s.clone();
    }
    let mut s = |a: &Node| substitute_memo(a, replacements, memo);
    let out = match &**e {
        Expr::Const(_) => e.clone(),
        Expr::Var(j) => replacements[*j].clone(),
        Expr::Neg(a) => neg(s(a)),
        Expr::Add(a, b) => {
            let a = s(a);
            add(a, s(b))
        }
        Expr::Sub(a, b) => {
            let a = s(a);
            sub(a, s(b))
        }
        Expr::Mul(a, b) => {
            let a = s(a);
            mul(a, s(b))
        }
        Expr::Div(a, b) => {
            let a = s(a);
            div(a, s(b))
        }
        Expr::Pow(a, k) => pow(s(a), *k),
        Expr::Func(f, a) => func(*f, s(a)),
    };
    memo.insert(Arc::as_ptr(e), out.clone());
    out
}

fn write_base(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    // everything except a power prints self-delimited
    match e {
        Expr::Pow(..) => write!(f, "({e})"),
        _ => write!(f, "{e}"),
    }
}

/// Fully parenthesised, re-parseable text.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => {
                write_base(f, a)?;
                write!(f, "^{k}")
            }
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
