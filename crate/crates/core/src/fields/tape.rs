//! Flat evaluation order for expression trees.
//!
//! Structurally equal subtrees are merged, so a subexpression shared by
//! several derivative terms is computed once per point. Each node performs
//! the same floating-point operation as the tree walk, so results are
//! bit-identical to [`Expr::eval`].

use rustc_hash::FxHashMap as HashMap;

use super::expr::{Expr, Func, Node};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, i32),
    Func(Func, usize),
}

#[derive(Debug, Clone)]
pub(crate) struct Tape {
    ops: Vec<Op>,
}

#[derive(PartialEq, Eq, Hash)]
struct Key(u8, u64, u64);

struct Builder {
    ops: Vec<Op>,
    seen: HashMap<Key, usize>,
    by_ptr: HashMap<*const Expr, usize>,
}

impl Builder {
    fn intern(&mut self, key: Key, op: Op) -> usize {
        *self.seen.entry(key).or_insert_with(|| {
            self.ops.push(op);
            self.ops.len() - 1
        })
    }

    fn visit(&mut self, node: &Node) -> usize {
        let ptr = Node::as_ptr(node);
        if let Some(&slot) = self.by_ptr.get(&ptr) {
            return slot;
        }
        let slot = match &**node {
            Expr::Const(c) => self.intern(Key(0, c.to_bits(), 0), Op::Const(*c)),
            Expr::Var(i) => self.intern(Key(1, *i as u64, 0), Op::Var(*i)),
            Expr::Neg(a) => {
                let a = self.visit(a);
                self.intern(Key(2, a as u64, 0), Op::Neg(a))
            }
            Expr::Add(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                self.intern(Key(3, a as u64, b as u64), Op::Add(a, b))
            }
            Expr::Sub(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                self.intern(Key(4, a as u64, b as u64), Op::Sub(a, b))
            }
            Expr::Mul(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                self.intern(Key(5, a as u64, b as u64), Op::Mul(a, b))
            }
            Expr::Div(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                self.intern(Key(6, a as u64, b as u64), Op::Div(a, b))
            }
            Expr::Pow(a, k) => {
                let a = self.visit(a);
                self.intern(Key(7, a as u64, *k as i64 as u64), Op::Pow(a, *k))
            }
            Expr::Func(f, a) => {
                let a = self.visit(a);
                self.intern(Key(8 + *f as u8, a as u64, 0), Op::Func(*f, a))
            }
        };
        self.by_ptr.insert(ptr, slot);
        slot
    }
}

impl Tape {
    pub(crate) fn compile(root: &Node) -> Tape {
        let mut b = Builder { ops: Vec::new(), seen: HashMap::default(), by_ptr: HashMap::default() };
        b.visit(root);
        Tape { ops: b.ops }
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.ops.len()
    }

    /// The root is always the last instruction.
    pub(crate) fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut v: Vec<f64> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let value = match *op {
                Op::Const(c) => c,
                Op::Var(i) => x[i],
                Op::Neg(a) => -v[a],
                Op::Add(a, b) => v[a] + v[b],
                Op::Sub(a, b) => v[a] - v[b],
                Op::Mul(a, b) => v[a] * v[b],
                Op::Div(a, b) => {
                    if v[b] == 0.0 {
                        return Err(Error::EvalDomain("division by zero".into()));
                    }
                    v[a] / v[b]
                }
                Op::Pow(a, k) => {
                    if v[a] == 0.0 && k < 0 {
                        return Err(Error::EvalDomain("negative power of zero".into()));
                    }
                    v[a].powi(k)
                }
                Op::Func(f, a) => f.apply(v[a])?,
            };
            v.push(value);
        }
        Ok(*v.last().expect("tape has a root"))
    }
}
