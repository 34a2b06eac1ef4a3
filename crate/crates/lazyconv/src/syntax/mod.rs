//! Term syntax: AST, global definitions, parser, printer, alpha-equality,
//! and the closed-subterm pre-sharing pass.
//!
//! Lexical classes keep name resolution trivial: lowercase identifiers are
//! variables (or constants, once declared with `def`), uppercase identifiers
//! are constructors. Constructors are saturated in the AST; partial
//! application of a constructor is a parse error.

mod parse;
mod preshare;
mod print;

pub use parse::{parse_defs, parse_term, ParseError};
pub use preshare::preshare;
pub use print::{print_term, tidy_binders};

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

/// Interned-enough name: cheap to clone, compares by content.
pub type Name = Rc<str>;

/// Shared term node. Terms are immutable and refcounted so that machine
/// states can hold subterms without copying.
pub type Term = Rc<TermNode>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermNode {
    Var(Name),
    Lam(Name, Term),
    App(Term, Term),
    Const(Name),
    /// Saturated constructor application: `args.len()` equals the declared arity.
    Ctor(Name, Vec<Term>),
    /// `match scrutinee with branches end`; branches cover each constructor of
    /// one data type exactly once.
    Match(Term, Vec<Branch>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub ctor: Name,
    pub binders: Vec<Name>,
    pub body: Term,
}

/// One `data` declaration: the type name and its constructors with arities.
#[derive(Debug, Clone)]
pub struct DataDecl {
    pub name: Name,
    pub ctors: Vec<(Name, usize)>,
}

/// All top-level declarations, in source order, plus lookup indices.
#[derive(Debug, Clone, Default)]
pub struct GlobalDefs {
    pub data_decls: Vec<DataDecl>,
    pub const_defs: Vec<(Name, Term)>,
    ctor_index: HashMap<Name, (Name, usize)>,
    const_index: HashMap<Name, usize>,
}

impl GlobalDefs {
    pub fn new() -> GlobalDefs {
        GlobalDefs::default()
    }

    pub fn has_const(&self, name: &str) -> bool {
        self.const_index.contains_key(name)
    }

    pub fn const_body(&self, name: &str) -> Option<&Term> {
        self.const_index.get(name).map(|&i| &self.const_defs[i].1)
    }

    pub fn ctor_arity(&self, name: &str) -> Option<usize> {
        self.ctor_index.get(name).map(|&(_, a)| a)
    }

    /// Data type a constructor belongs to.
    pub fn ctor_type(&self, name: &str) -> Option<&Name> {
        self.ctor_index.get(name).map(|(t, _)| t)
    }

    pub fn data_decl(&self, name: &str) -> Option<&DataDecl> {
        self.data_decls.iter().find(|d| &*d.name == name)
    }

    pub(crate) fn add_data(&mut self, decl: DataDecl) {
        for (c, a) in &decl.ctors {
            self.ctor_index
                .insert(c.clone(), (decl.name.clone(), *a));
        }
        self.data_decls.push(decl);
    }

    pub(crate) fn add_const(&mut self, name: Name, body: Term) {
        self.const_index.insert(name.clone(), self.const_defs.len());
        self.const_defs.push((name, body));
    }
}

/// A convertibility problem with shared bindings: `bindings[i]` may reference
/// binders `0..i`, and both sides may reference all of them.
#[derive(Debug, Clone)]
pub struct GeneralizedProblem {
    pub bindings: Vec<(Name, Term)>,
    pub lhs: Term,
    pub rhs: Term,
}

impl GeneralizedProblem {
    /// Problem with no shared bindings.
    pub fn plain(lhs: Term, rhs: Term) -> GeneralizedProblem {
        GeneralizedProblem { bindings: Vec::new(), lhs, rhs }
    }
}

/// The user-written binder behind a machine-generated fresh name
/// ("#x/17" yields "x"); other names pass through unchanged.
pub fn binder_base(name: &str) -> &str {
    let Some(rest) = name.strip_prefix('#') else {
        return name;
    };
    let base = rest.split('/').next().unwrap_or("");
    if base.is_empty() {
        "y"
    } else {
        base
    }
}

/// Term construction helpers, used by tests and the benchmark suites.
pub mod mk {
    use super::*;

    pub fn var(n: &str) -> Term {
        Rc::new(TermNode::Var(Rc::from(n)))
    }

    pub fn lam(x: &str, body: Term) -> Term {
        Rc::new(TermNode::Lam(Rc::from(x), body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Rc::new(TermNode::App(f, a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, app)
    }

    pub fn constant(n: &str) -> Term {
        Rc::new(TermNode::Const(Rc::from(n)))
    }

    pub fn ctor(n: &str, args: Vec<Term>) -> Term {
        Rc::new(TermNode::Ctor(Rc::from(n), args))
    }

    pub fn match_(scrutinee: Term, branches: Vec<Branch>) -> Term {
        Rc::new(TermNode::Match(scrutinee, branches))
    }

    pub fn branch(ctor: &str, binders: &[&str], body: Term) -> Branch {
        Branch {
            ctor: Rc::from(ctor),
            binders: binders.iter().map(|b| Rc::from(*b)).collect(),
            body,
        }
    }

    /// Church-free Nat literal: `S (S (... O))`.
    pub fn nat(n: u64) -> Term {
        let mut t = ctor("O", vec![]);
        for _ in 0..n {
            t = ctor("S", vec![t]);
        }
        t
    }
}

impl fmt::Display for TermNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::print_node(self))
    }
}

/// Alpha-equality: identical up to consistent renaming of bound variables.
/// Free variables, constants, and constructors compare by name; match
/// branches compare positionally.
pub fn alpha_equal(t: &Term, u: &Term) -> bool {
    fn bound_index(stack: &[Name], x: &str) -> Option<usize> {
        stack.iter().rposition(|b| &**b == x)
    }

    fn go(t: &TermNode, u: &TermNode, lb: &mut Vec<Name>, rb: &mut Vec<Name>) -> bool {
        match (t, u) {
            (TermNode::Var(x), TermNode::Var(y)) => {
                match (bound_index(lb, x), bound_index(rb, y)) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                }
            }
            (TermNode::Lam(x, b1), TermNode::Lam(y, b2)) => {
                lb.push(x.clone());
                rb.push(y.clone());
                let r = go(b1, b2, lb, rb);
                lb.pop();
                rb.pop();
                r
            }
            (TermNode::App(f1, a1), TermNode::App(f2, a2)) => {
                go(f1, f2, lb, rb) && go(a1, a2, lb, rb)
            }
            (TermNode::Const(c1), TermNode::Const(c2)) => c1 == c2,
            (TermNode::Ctor(c1, as1), TermNode::Ctor(c2, as2)) => {
                c1 == c2
                    && as1.len() == as2.len()
                    && as1.iter().zip(as2).all(|(a, b)| go(a, b, lb, rb))
            }
            (TermNode::Match(s1, bs1), TermNode::Match(s2, bs2)) => {
                if !go(s1, s2, lb, rb) || bs1.len() != bs2.len() {
                    return false;
                }
                bs1.iter().zip(bs2).all(|(b1, b2)| {
                    if b1.ctor != b2.ctor || b1.binders.len() != b2.binders.len() {
                        return false;
                    }
                    lb.extend(b1.binders.iter().cloned());
                    rb.extend(b2.binders.iter().cloned());
                    let r = go(&b1.body, &b2.body, lb, rb);
                    lb.truncate(lb.len() - b1.binders.len());
                    rb.truncate(rb.len() - b2.binders.len());
                    r
                })
            }
            _ => false,
        }
    }

    go(t, u, &mut Vec::new(), &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_identity_lambdas() {
        let t = mk::lam("x", mk::var("x"));
        let u = mk::lam("y", mk::var("y"));
        assert!(alpha_equal(&t, &u));
    }

    #[test]
    fn alpha_distinct_free_vars() {
        assert!(!alpha_equal(&mk::var("x"), &mk::var("y")));
    }

    #[test]
    fn alpha_k_vs_flipped_k() {
        let k = mk::lam("x", mk::lam("y", mk::var("x")));
        let flip = mk::lam("a", mk::lam("b", mk::var("b")));
        assert!(!alpha_equal(&k, &flip));
    }

    #[test]
    fn alpha_free_vs_bound() {
        // \x. x versus \x. y: the bound occurrence never equals a free one.
        let t = mk::lam("x", mk::var("x"));
        let u = mk::lam("x", mk::var("y"));
        assert!(!alpha_equal(&t, &u));
    }

    #[test]
    fn alpha_shadowing() {
        let t = mk::lam("x", mk::lam("x", mk::var("x")));
        let u = mk::lam("a", mk::lam("b", mk::var("b")));
        let v = mk::lam("a", mk::lam("b", mk::var("a")));
        assert!(alpha_equal(&t, &u));
        assert!(!alpha_equal(&t, &v));
    }

    #[test]
    fn alpha_match_binders() {
        let t = mk::match_(
            mk::var("n"),
            vec![
                mk::branch("O", &[], mk::ctor("O", vec![])),
                mk::branch("S", &["k"], mk::var("k")),
            ],
        );
        let u = mk::match_(
            mk::var("n"),
            vec![
                mk::branch("O", &[], mk::ctor("O", vec![])),
                mk::branch("S", &["m"], mk::var("m")),
            ],
        );
        assert!(alpha_equal(&t, &u));
    }
}
