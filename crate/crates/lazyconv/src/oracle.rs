//! Naive reference semantics used for differential testing: fueled strong
//! normalization by leftmost-outermost reduction, plus a small random term
//! generator. Deliberately shares no evaluation code with the machine; it
//! works on plain terms with direct capture-avoiding substitution.

use crate::syntax::{alpha_equal, mk, Branch, GlobalDefs, Name, Term, TermNode};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::rc::Rc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleResult {
    Decided(bool),
    OutOfFuel,
}

/// Strong normalization by repeated contraction of the leftmost-outermost
/// redex (beta, constant unfolding, match on a constructor). Fuel counts
/// contractions; `None` means it ran out before reaching a normal form.
pub fn normalize_naive(defs: &GlobalDefs, t: &Term, fuel: u64) -> Option<Term> {
    let mut t = t.clone();
    let mut left = fuel;
    loop {
        match contract(defs, &t) {
            Some(next) => {
                if left == 0 {
                    return None;
                }
                left -= 1;
                t = next;
            }
            None => return Some(t),
        }
    }
}

/// Decide convertibility by normalizing both sides and comparing the
/// normal forms up to alpha. Each side gets the full fuel budget.
pub fn oracle_convertible(defs: &GlobalDefs, t: &Term, u: &Term, fuel: u64) -> OracleResult {
    match (normalize_naive(defs, t, fuel), normalize_naive(defs, u, fuel)) {
        (Some(nt), Some(nu)) => OracleResult::Decided(alpha_equal(&nt, &nu)),
        _ => OracleResult::OutOfFuel,
    }
}

fn is_redex(defs: &GlobalDefs, t: &TermNode) -> bool {
    match t {
        TermNode::App(f, _) => matches!(&**f, TermNode::Lam(_, _)),
        TermNode::Const(c) => defs.has_const(c),
        TermNode::Match(s, _) => matches!(&**s, TermNode::Ctor(_, _)),
        _ => false,
    }
}

/// Contract a term whose root is a redex.
fn step_here(defs: &GlobalDefs, t: &TermNode) -> Term {
    match t {
        TermNode::App(f, a) => match &**f {
            TermNode::Lam(x, body) => subst(body, x, a),
            _ => unreachable!("not a beta redex"),
        },
        TermNode::Const(c) => defs.const_body(c).expect("undeclared constant").clone(),
        TermNode::Match(s, branches) => match &**s {
            TermNode::Ctor(c, args) => {
                let b = branches
                    .iter()
                    .find(|b| b.ctor == *c)
                    .expect("match is exhaustive");
                // Rename the binders apart first so the argument
                // substitutions cannot interfere with one another.
                let mut body = b.body.clone();
                let mut fresh = Vec::with_capacity(b.binders.len());
                for x in &b.binders {
                    let f = fresh_name(x, |cand| {
                        mentions(&body, cand)
                            || args.iter().any(|a| mentions(a, cand))
                            || fresh.iter().any(|f: &Name| &**f == cand)
                    });
                    body = subst(&body, x, &Rc::new(TermNode::Var(f.clone())));
                    fresh.push(f);
                }
                for (f, a) in fresh.iter().zip(args) {
                    body = subst(&body, f, a);
                }
                body
            }
            _ => unreachable!("scrutinee is not a constructor"),
        },
        _ => unreachable!("not a redex"),
    }
}

/// One leftmost-outermost contraction, or `None` on a normal form.
fn contract(defs: &GlobalDefs, t: &Term) -> Option<Term> {
    if is_redex(defs, t) {
        return Some(step_here(defs, t));
    }
    match &**t {
        TermNode::Var(_) | TermNode::Const(_) => None,
        TermNode::Lam(x, body) => {
            contract(defs, body).map(|b| Rc::new(TermNode::Lam(x.clone(), b)))
        }
        TermNode::App(f, a) => {
            if let Some(f2) = contract(defs, f) {
                return Some(Rc::new(TermNode::App(f2, a.clone())));
            }
            contract(defs, a).map(|a2| Rc::new(TermNode::App(f.clone(), a2)))
        }
        TermNode::Ctor(c, args) => {
            for (i, a) in args.iter().enumerate() {
                if let Some(a2) = contract(defs, a) {
                    let mut args = args.clone();
                    args[i] = a2;
                    return Some(Rc::new(TermNode::Ctor(c.clone(), args)));
                }
            }
            None
        }
        TermNode::Match(s, branches) => {
            if let Some(s2) = contract(defs, s) {
                return Some(Rc::new(TermNode::Match(s2, branches.clone())));
            }
            for (i, b) in branches.iter().enumerate() {
                if let Some(b2) = contract(defs, &b.body) {
                    let mut branches = branches.clone();
                    branches[i] = Branch {
                        ctor: b.ctor.clone(),
                        binders: b.binders.clone(),
                        body: b2,
                    };
                    return Some(Rc::new(TermNode::Match(s.clone(), branches)));
                }
            }
            None
        }
    }
}

/// Capture-avoiding substitution of `with` for free occurrences of `x`.
fn subst(t: &Term, x: &str, with: &Term) -> Term {
    match &**t {
        TermNode::Var(y) if &**y == x => with.clone(),
        TermNode::Var(_) | TermNode::Const(_) => t.clone(),
        TermNode::Lam(y, _) if &**y == x => t.clone(),
        TermNode::Lam(y, body) => {
            if occurs_free(with, y) && occurs_free(body, x) {
                let y2 = fresh_name(y, |cand| {
                    occurs_free(with, cand) || mentions(body, cand) || cand == x
                });
                let body = subst(body, y, &Rc::new(TermNode::Var(y2.clone())));
                Rc::new(TermNode::Lam(y2, subst(&body, x, with)))
            } else {
                Rc::new(TermNode::Lam(y.clone(), subst(body, x, with)))
            }
        }
        TermNode::App(f, a) => Rc::new(TermNode::App(subst(f, x, with), subst(a, x, with))),
        TermNode::Ctor(c, args) => Rc::new(TermNode::Ctor(
            c.clone(),
            args.iter().map(|a| subst(a, x, with)).collect(),
        )),
        TermNode::Match(s, branches) => {
            let s = subst(s, x, with);
            let branches = branches
                .iter()
                .map(|b| {
                    if b.binders.iter().any(|y| &**y == x) {
                        b.clone()
                    } else {
                        let mut binders = b.binders.clone();
                        let mut body = b.body.clone();
                        for bi in binders.iter_mut() {
                            if occurs_free(with, bi) && occurs_free(&body, x) {
                                let y2 = fresh_name(bi, |cand| {
                                    occurs_free(with, cand) || mentions(&body, cand) || cand == x
                                });
                                body = subst(&body, bi, &Rc::new(TermNode::Var(y2.clone())));
                                *bi = y2;
                            }
                        }
                        Branch { ctor: b.ctor.clone(), binders, body: subst(&body, x, with) }
                    }
                })
                .collect();
            Rc::new(TermNode::Match(s, branches))
        }
    }
}

fn occurs_free(t: &Term, x: &str) -> bool {
    match &**t {
        TermNode::Var(y) => &**y == x,
        TermNode::Const(_) => false,
        TermNode::Lam(y, body) => &**y != x && occurs_free(body, x),
        TermNode::App(f, a) => occurs_free(f, x) || occurs_free(a, x),
        TermNode::Ctor(_, args) => args.iter().any(|a| occurs_free(a, x)),
        TermNode::Match(s, branches) => {
            occurs_free(s, x)
                || branches.iter().any(|b| {
                    !b.binders.iter().any(|y| &**y == x) && occurs_free(&b.body, x)
                })
        }
    }
}

/// Whether `x` appears anywhere in `t`, free, bound, or as a binder.
fn mentions(t: &Term, x: &str) -> bool {
    match &**t {
        TermNode::Var(y) => &**y == x,
        TermNode::Const(c) => &**c == x,
        TermNode::Lam(y, body) => &**y == x || mentions(body, x),
        TermNode::App(f, a) => mentions(f, x) || mentions(a, x),
        TermNode::Ctor(_, args) => args.iter().any(|a| mentions(a, x)),
        TermNode::Match(s, branches) => {
            mentions(s, x)
                || branches.iter().any(|b| {
                    b.binders.iter().any(|y| &**y == x) || mentions(&b.body, x)
                })
        }
    }
}

fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> Name {
    for i in 1u32.. {
        let cand = format!("{base}{i}");
        if !taken(&cand) {
            return Rc::from(cand);
        }
    }
    unreachable!()
}

/// Strong normalization contracting a randomly chosen redex at each step.
/// Exists to spot-check confluence against the leftmost-outermost result.
pub fn normalize_random(
    defs: &GlobalDefs,
    t: &Term,
    fuel: u64,
    rng: &mut impl Rng,
) -> Option<Term> {
    let mut t = t.clone();
    let mut left = fuel;
    loop {
        let sites = redex_paths(defs, &t);
        if sites.is_empty() {
            return Some(t);
        }
        if left == 0 {
            return None;
        }
        left -= 1;
        let path = &sites[rng.random_range(0..sites.len())];
        t = contract_at(defs, &t, path);
    }
}

fn redex_paths(defs: &GlobalDefs, t: &Term) -> Vec<Vec<u32>> {
    fn walk(defs: &GlobalDefs, t: &Term, path: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if is_redex(defs, t) {
            out.push(path.clone());
        }
        let child = |i: u32, c: &Term, defs: &GlobalDefs, out: &mut Vec<Vec<u32>>, path: &mut Vec<u32>| {
            path.push(i);
            walk(defs, c, path, out);
            path.pop();
        };
        match &**t {
            TermNode::Var(_) | TermNode::Const(_) => {}
            TermNode::Lam(_, b) => child(0, b, defs, out, path),
            TermNode::App(f, a) => {
                child(0, f, defs, out, path);
                child(1, a, defs, out, path);
            }
            TermNode::Ctor(_, args) => {
                for (i, a) in args.iter().enumerate() {
                    child(i as u32, a, defs, out, path);
                }
            }
            TermNode::Match(s, branches) => {
                child(0, s, defs, out, path);
                for (i, b) in branches.iter().enumerate() {
                    child(i as u32 + 1, &b.body, defs, out, path);
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(defs, t, &mut Vec::new(), &mut out);
    out
}

fn contract_at(defs: &GlobalDefs, t: &Term, path: &[u32]) -> Term {
    let Some((&i, rest)) = path.split_first() else {
        return step_here(defs, t);
    };
    match &**t {
        TermNode::Lam(x, b) => Rc::new(TermNode::Lam(x.clone(), contract_at(defs, b, rest))),
        TermNode::App(f, a) => {
            if i == 0 {
                Rc::new(TermNode::App(contract_at(defs, f, rest), a.clone()))
            } else {
                Rc::new(TermNode::App(f.clone(), contract_at(defs, a, rest)))
            }
        }
        TermNode::Ctor(c, args) => {
            let mut args = args.clone();
            args[i as usize] = contract_at(defs, &args[i as usize], rest);
            Rc::new(TermNode::Ctor(c.clone(), args))
        }
        TermNode::Match(s, branches) => {
            if i == 0 {
                Rc::new(TermNode::Match(contract_at(defs, s, rest), branches.clone()))
            } else {
                let mut branches = branches.clone();
                let b = &branches[i as usize - 1];
                branches[i as usize - 1] = Branch {
                    ctor: b.ctor.clone(),
                    binders: b.binders.clone(),
                    body: contract_at(defs, &b.body, rest),
                };
                Rc::new(TermNode::Match(s.clone(), branches))
            }
        }
        _ => unreachable!("path into a leaf"),
    }
}

/// The fixed signature the random corpus draws from.
pub const CORPUS_DEFS: &str = "\
data Bool := True 0 | False 0;
data Nat := O 0 | S 1;
data Pair := P 2;
def idn := \\x. x;
def kconst := \\x. \\y. x;
def compose := \\f. \\g. \\x. f (g x);
def plus := \\n. \\m. match n with O -> m | S k -> S (plus k m) end;
def double := \\n. match n with O -> O | S k -> S (S (double k)) end;
def even := \\n. match n with O -> True | S k -> odd k end;
def odd := \\n. match n with O -> False | S k -> even k end;
def ifb := \\b. \\t. \\e. match b with True -> t | False -> e end;
";

pub fn corpus_defs() -> GlobalDefs {
    crate::syntax::parse_defs(CORPUS_DEFS).expect("corpus signature parses")
}

/// How a corpus pair was constructed, which fixes the expected verdict
/// where the transformation guarantees one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    /// Right side is an alpha-renamed copy of the left.
    AlphaRenamed,
    /// One constant occurrence replaced by its definition.
    ConstantUnfolded,
    /// Left side wrapped in an identity redex.
    BetaExpanded,
    /// Pair constructor applied to two values with swapped, distinct fields.
    ArgsPermuted,
    /// Right side computes the successor of the left.
    Successor,
    /// Both sides generated independently.
    Independent,
}

impl PairKind {
    /// The verdict guaranteed by construction, if any.
    pub fn expected(self) -> Option<bool> {
        match self {
            PairKind::AlphaRenamed | PairKind::ConstantUnfolded | PairKind::BetaExpanded => {
                Some(true)
            }
            PairKind::ArgsPermuted | PairKind::Successor => Some(false),
            PairKind::Independent => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub defs: Rc<GlobalDefs>,
    pub lhs: Term,
    pub rhs: Term,
    pub kind: PairKind,
}

/// Deterministically generate `count` closed term pairs over the corpus
/// signature. Every generated term normalizes (values are kept small), so
/// modest fuel decides nearly all pairs.
pub fn gen_corpus(seed: u64, count: usize, max_size: usize) -> Vec<CorpusEntry> {
    let defs = Rc::new(corpus_defs());
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), fresh: 0 };
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let kind = match g.rng.random_range(0..12u32) {
            0..=2 => PairKind::AlphaRenamed,
            3..=4 => PairKind::ConstantUnfolded,
            5..=6 => PairKind::BetaExpanded,
            7..=8 => PairKind::ArgsPermuted,
            9 => PairKind::Successor,
            _ => PairKind::Independent,
        };
        let (lhs, rhs) = g.pair(&defs, kind, max_size);
        out.push(CorpusEntry { defs: defs.clone(), lhs, rhs, kind });
    }
    out
}

struct Gen {
    rng: ChaCha8Rng,
    fresh: u32,
}

/// Cap on the nat value a generated term may evaluate to, which keeps
/// normal forms shallow and oracle runs cheap.
const VALUE_CAP: u64 = 64;

impl Gen {
    fn pair(&mut self, defs: &GlobalDefs, kind: PairKind, max_size: usize) -> (Term, Term) {
        match kind {
            PairKind::AlphaRenamed => {
                let t = self.any_term(max_size);
                let u = self.alpha_rename(&t);
                (t, u)
            }
            PairKind::ConstantUnfolded => {
                let t = self.any_term(max_size);
                let u = self.unfold_one(defs, &t);
                (t, u)
            }
            PairKind::BetaExpanded => {
                let t = self.any_term(max_size);
                let x = self.binder();
                let u = mk::app(mk::lam(&x, mk::var(&x)), t.clone());
                (t, u)
            }
            PairKind::ArgsPermuted => {
                let n = self.rng.random_range(0..6u64);
                let m = (n + 1 + self.rng.random_range(0..5u64)) % 7;
                let (n, m) = if n == m { (n, m + 7) } else { (n, m) };
                let lhs = mk::ctor("P", vec![self.dress(mk::nat(n)), self.dress(mk::nat(m))]);
                let rhs = mk::ctor("P", vec![self.dress(mk::nat(m)), self.dress(mk::nat(n))]);
                (lhs, rhs)
            }
            PairKind::Successor => {
                let (t, _) = self.nat(max_size, VALUE_CAP);
                let u = mk::ctor("S", vec![self.dress(t.clone())]);
                (t, u)
            }
            PairKind::Independent => {
                if self.rng.random_bool(0.5) {
                    (self.nat(max_size, VALUE_CAP).0, self.nat(max_size, VALUE_CAP).0)
                } else {
                    (self.boolean(max_size).0, self.boolean(max_size).0)
                }
            }
        }
    }

    fn any_term(&mut self, size: usize) -> Term {
        if self.rng.random_bool(0.6) {
            self.nat(size, VALUE_CAP).0
        } else {
            self.boolean(size).0
        }
    }

    fn binder(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    /// A closed term of nat shape together with the exact value it
    /// normalizes to (kept at or below `cap`).
    fn nat(&mut self, size: usize, cap: u64) -> (Term, u64) {
        if size == 0 || cap == 0 {
            let v = self.rng.random_range(0..=cap.min(4));
            return (mk::nat(v), v);
        }
        match self.rng.random_range(0..8u32) {
            0 => {
                let v = self.rng.random_range(0..=cap.min(6));
                (mk::nat(v), v)
            }
            1 => {
                let (t, v) = self.nat(size - 1, cap - 1);
                (mk::ctor("S", vec![t]), v + 1)
            }
            2 => {
                let (a, va) = self.nat(size / 2, cap / 2);
                let (b, vb) = self.nat(size / 2, cap / 2);
                (mk::apps(mk::constant("plus"), [a, b]), va + vb)
            }
            3 => {
                let (t, v) = self.nat(size - 1, cap / 2);
                (mk::app(mk::constant("double"), t), 2 * v)
            }
            4 => {
                let (t, v) = self.nat(size - 1, cap);
                (mk::app(mk::constant("idn"), t), v)
            }
            5 => {
                let x = self.binder();
                let (t, v) = self.nat(size - 1, cap.saturating_sub(1));
                let f = mk::lam(&x, mk::ctor("S", vec![mk::var(&x)]));
                (mk::app(f, t), v + 1)
            }
            6 => {
                let (b, vb) = self.boolean(size / 2);
                let (t, vt) = self.nat(size / 2, cap);
                let (e, ve) = self.nat(size / 2, cap);
                let out = if vb { vt } else { ve };
                (mk::apps(mk::constant("ifb"), [b, t, e]), out)
            }
            _ => {
                let (a, va) = self.nat(size / 2, cap);
                let (b, _) = self.nat(size / 2, cap);
                (mk::apps(mk::constant("kconst"), [a, b]), va)
            }
        }
    }

    /// A closed term of bool shape and the boolean it normalizes to.
    fn boolean(&mut self, size: usize) -> (Term, bool) {
        if size == 0 {
            let v = self.rng.random_bool(0.5);
            return (mk::ctor(if v { "True" } else { "False" }, vec![]), v);
        }
        match self.rng.random_range(0..4u32) {
            0 => {
                let v = self.rng.random_bool(0.5);
                (mk::ctor(if v { "True" } else { "False" }, vec![]), v)
            }
            1 => {
                let (t, v) = self.nat(size - 1, 16);
                (mk::app(mk::constant("even"), t), v % 2 == 0)
            }
            2 => {
                let (t, v) = self.nat(size - 1, 16);
                (mk::app(mk::constant("odd"), t), v % 2 == 1)
            }
            _ => {
                let (b, vb) = self.boolean(size / 2);
                let (t, vt) = self.boolean(size / 2);
                let (e, ve) = self.boolean(size / 2);
                let out = if vb { vt } else { ve };
                (mk::apps(mk::constant("ifb"), [b, t, e]), out)
            }
        }
    }

    /// Wrap a term in a computation that preserves its value.
    fn dress(&mut self, t: Term) -> Term {
        match self.rng.random_range(0..4u32) {
            0 => t,
            1 => mk::app(mk::constant("idn"), t),
            2 => {
                let x = self.binder();
                mk::app(mk::lam(&x, mk::var(&x)), t)
            }
            _ => mk::apps(mk::constant("plus"), [mk::nat(0), t]),
        }
    }

    /// Systematically rename every binder to a fresh name.
    fn alpha_rename(&mut self, t: &Term) -> Term {
        match &**t {
            TermNode::Var(_) | TermNode::Const(_) => t.clone(),
            TermNode::Lam(x, body) => {
                let x2 = self.binder();
                let body = subst(body, x, &Rc::new(TermNode::Var(Rc::from(x2.as_str()))));
                Rc::new(TermNode::Lam(Rc::from(x2.as_str()), self.alpha_rename(&body)))
            }
            TermNode::App(f, a) => {
                Rc::new(TermNode::App(self.alpha_rename(f), self.alpha_rename(a)))
            }
            TermNode::Ctor(c, args) => Rc::new(TermNode::Ctor(
                c.clone(),
                args.iter().map(|a| self.alpha_rename(a)).collect(),
            )),
            TermNode::Match(s, branches) => {
                let s = self.alpha_rename(s);
                let branches = branches
                    .iter()
                    .map(|b| {
                        let mut body = b.body.clone();
                        let mut binders = Vec::with_capacity(b.binders.len());
                        for x in &b.binders {
                            let x2: Name = Rc::from(self.binder().as_str());
                            body = subst(&body, x, &Rc::new(TermNode::Var(x2.clone())));
                            binders.push(x2);
                        }
                        Branch { ctor: b.ctor.clone(), binders, body: self.alpha_rename(&body) }
                    })
                    .collect();
                Rc::new(TermNode::Match(s, branches))
            }
        }
    }

    /// Replace one randomly chosen constant occurrence by its definition.
    /// Terms without constants are returned unchanged.
    fn unfold_one(&mut self, defs: &GlobalDefs, t: &Term) -> Term {
        fn count(t: &Term) -> usize {
            match &**t {
                TermNode::Var(_) => 0,
                TermNode::Const(_) => 1,
                TermNode::Lam(_, b) => count(b),
                TermNode::App(f, a) => count(f) + count(a),
                TermNode::Ctor(_, args) => args.iter().map(count).sum(),
                TermNode::Match(s, bs) => count(s) + bs.iter().map(|b| count(&b.body)).sum::<usize>(),
            }
        }
        fn replace(defs: &GlobalDefs, t: &Term, k: &mut usize) -> Term {
            match &**t {
                TermNode::Const(c) => {
                    if *k == 0 {
                        *k = usize::MAX;
                        return defs.const_body(c).expect("declared").clone();
                    }
                    *k -= 1;
                    t.clone()
                }
                TermNode::Var(_) => t.clone(),
                TermNode::Lam(x, b) => Rc::new(TermNode::Lam(x.clone(), replace(defs, b, k))),
                TermNode::App(f, a) => {
                    Rc::new(TermNode::App(replace(defs, f, k), replace(defs, a, k)))
                }
                TermNode::Ctor(c, args) => Rc::new(TermNode::Ctor(
                    c.clone(),
                    args.iter().map(|a| replace(defs, a, k)).collect(),
                )),
                TermNode::Match(s, bs) => Rc::new(TermNode::Match(
                    replace(defs, s, k),
                    bs.iter()
                        .map(|b| Branch {
                            ctor: b.ctor.clone(),
                            binders: b.binders.clone(),
                            body: replace(defs, &b.body, k),
                        })
                        .collect(),
                )),
            }
        }
        let n = count(t);
        if n == 0 {
            return t.clone();
        }
        let mut k = self.rng.random_range(0..n);
        replace(defs, t, &mut k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_defs, parse_term, print_term};

    fn nat_value(t: &Term) -> Option<u64> {
        match &**t {
            TermNode::Ctor(c, args) if &**c == "O" && args.is_empty() => Some(0),
            TermNode::Ctor(c, args) if &**c == "S" && args.len() == 1 => {
                nat_value(&args[0]).map(|v| v + 1)
            }
            _ => None,
        }
    }

    #[test]
    fn beta_in_one_step() {
        let defs = GlobalDefs::new();
        let t = parse_term("(\\x. x) y", &defs).unwrap();
        assert!(normalize_naive(&defs, &t, 0).is_none());
        let nf = normalize_naive(&defs, &t, 1).unwrap();
        assert!(alpha_equal(&nf, &mk::var("y")));
    }

    #[test]
    fn odd_three_is_true() {
        let defs = corpus_defs();
        let t = parse_term("odd (S (S (S O)))", &defs).unwrap();
        let nf = normalize_naive(&defs, &t, 1000).unwrap();
        assert!(alpha_equal(&nf, &mk::ctor("True", vec![])));
    }

    #[test]
    fn self_application_runs_out_of_fuel() {
        let defs = GlobalDefs::new();
        let t = parse_term("(\\x. x x) (\\x. x x)", &defs).unwrap();
        assert_eq!(normalize_naive(&defs, &t, 100), None);
    }

    #[test]
    fn exp2_of_four_is_sixteen() {
        let defs = parse_defs(&format!(
            "{}\
             def mult := \\n. \\m. match n with O -> O | S k -> plus m (mult k m) end;\n\
             def exp2 := \\n. match n with O -> S O | S k -> mult (S (S O)) (exp2 k) end;",
            CORPUS_DEFS
        ))
        .unwrap();
        let t = parse_term("exp2 (S (S (S (S O))))", &defs).unwrap();
        let u = mk::nat(16);
        assert_eq!(oracle_convertible(&defs, &t, &u, 100_000), OracleResult::Decided(true));
    }

    #[test]
    fn distinct_constructors_differ() {
        let defs = corpus_defs();
        let t = parse_term("True", &defs).unwrap();
        let u = parse_term("False", &defs).unwrap();
        assert_eq!(oracle_convertible(&defs, &t, &u, 10), OracleResult::Decided(false));
        let i1 = parse_term("\\x. x", &defs).unwrap();
        let i2 = parse_term("\\y. y", &defs).unwrap();
        assert_eq!(oracle_convertible(&defs, &i1, &i2, 10), OracleResult::Decided(true));
    }

    #[test]
    fn capture_avoided_in_substitution() {
        let defs = GlobalDefs::new();
        // (\x. \y. x) y: the free y must not be captured by the binder.
        let t = parse_term("(\\x. \\y. x) y", &defs).unwrap();
        let nf = normalize_naive(&defs, &t, 10).unwrap();
        let want = mk::lam("z", mk::var("y"));
        assert!(alpha_equal(&nf, &want), "got {}", print_term(&nf));
    }

    #[test]
    fn normal_forms_are_stable() {
        for e in gen_corpus(7, 40, 10) {
            let nf = normalize_naive(&e.defs, &e.lhs, 100_000).expect("corpus terms normalize");
            assert!(
                normalize_naive(&e.defs, &nf, 0).is_some(),
                "normal form still had a redex: {}",
                print_term(&nf)
            );
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let a = gen_corpus(1, 3, 12);
        let b = gen_corpus(1, 3, 12);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.kind, y.kind);
            assert_eq!(print_term(&x.lhs), print_term(&y.lhs));
            assert_eq!(print_term(&x.rhs), print_term(&y.rhs));
        }
    }

    #[test]
    fn corpus_labels_confirmed_by_oracle() {
        let mut decided = 0;
        for e in gen_corpus(42, 120, 12) {
            let got = oracle_convertible(&e.defs, &e.lhs, &e.rhs, 100_000);
            if let OracleResult::Decided(v) = got {
                decided += 1;
                if let Some(want) = e.kind.expected() {
                    assert_eq!(v, want, "{:?}: {} vs {}", e.kind, print_term(&e.lhs), print_term(&e.rhs));
                }
            }
        }
        assert!(decided >= 114, "only {decided}/120 decided");
    }

    #[test]
    fn generated_values_match_oracle() {
        let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(5), fresh: 0 };
        let defs = corpus_defs();
        for _ in 0..30 {
            let (t, v) = g.nat(10, VALUE_CAP);
            let nf = normalize_naive(&defs, &t, 100_000).unwrap();
            assert_eq!(nat_value(&nf), Some(v), "term {}", print_term(&t));
        }
    }

    #[test]
    fn random_order_reaches_same_normal_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for e in gen_corpus(11, 25, 9) {
            let a = normalize_naive(&e.defs, &e.lhs, 50_000);
            let b = normalize_random(&e.defs, &e.lhs, 50_000, &mut rng);
            if let (Some(a), Some(b)) = (a, b) {
                assert!(alpha_equal(&a, &b));
            }
        }
    }

    #[test]
    fn convertibility_is_symmetric_and_reflexive() {
        for e in gen_corpus(13, 30, 10) {
            assert_eq!(
                oracle_convertible(&e.defs, &e.lhs, &e.lhs, 100_000),
                OracleResult::Decided(true)
            );
            let fwd = oracle_convertible(&e.defs, &e.lhs, &e.rhs, 100_000);
            let bwd = oracle_convertible(&e.defs, &e.rhs, &e.lhs, 100_000);
            assert_eq!(fwd, bwd);
        }
    }
}
