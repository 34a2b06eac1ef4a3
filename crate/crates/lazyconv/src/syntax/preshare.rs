//! Closed-subterm sharing: hash-cons the closed subterms of a problem so
//! that repeated work (e.g. two copies of the same big argument) is bound
//! once and referenced by name.
//!
//! Every closed subterm occurring at least twice across the two sides is
//! bound to a fresh variable `#s0`, `#s1`, ... (a namespace the surface
//! grammar cannot produce). Occurrence classes are de Bruijn trees interned
//! bottom-up, so the whole pass is linear in the input size.

use super::{Branch, GeneralizedProblem, Name, Term, TermNode};
use std::collections::HashMap;
use std::rc::Rc;

pub fn preshare(lhs: &Term, rhs: &Term) -> GeneralizedProblem {
    let mut sh = Sharer::default();
    sh.count(lhs, &mut Vec::new());
    sh.count(rhs, &mut Vec::new());
    let new_lhs = sh.rebuild(lhs, &mut Vec::new()).2;
    let new_rhs = sh.rebuild(rhs, &mut Vec::new()).2;
    GeneralizedProblem { bindings: sh.bindings, lhs: new_lhs, rhs: new_rhs }
}

type Class = u32;

/// Structural key of a node over its children's classes. Variables appear
/// as de Bruijn indices, so alpha-equal closed subterms land in the same
/// class; a variable its subterm does not bind keeps the class distinct
/// from any closed one via the openness flag tracked alongside.
#[derive(Hash, PartialEq, Eq)]
enum Key {
    Bound(usize),
    Free(Name),
    Lam(Class),
    App(Class, Class),
    Const(Name),
    Ctor(Name, Vec<Class>),
    Match(Class, Vec<(Name, usize, Class)>),
}

/// Depth of the shallowest enclosing binder a subterm references;
/// `CLOSED` when it references none, `UNBOUND` when it mentions a
/// variable no enclosing binder introduces.
type FreeDepth = isize;
const CLOSED: FreeDepth = isize::MAX;
const UNBOUND: FreeDepth = -1;

#[derive(Default)]
struct Sharer {
    classes: HashMap<Key, Class>,
    counts: HashMap<Class, u32>,
    binder_of: HashMap<Class, Name>,
    bindings: Vec<(Name, Term)>,
}

impl Sharer {
    fn class_of(&mut self, key: Key) -> Class {
        let next = self.classes.len() as Class;
        *self.classes.entry(key).or_insert(next)
    }

    /// First pass: intern every subterm and count occurrences per class.
    fn count(&mut self, t: &Term, env: &mut Vec<Name>) -> (Class, FreeDepth) {
        let depth = env.len();
        let (key, fv) = match &**t {
            TermNode::Var(x) => match env.iter().rposition(|b| b == x) {
                Some(p) => (Key::Bound(depth - 1 - p), p as FreeDepth),
                None => (Key::Free(x.clone()), UNBOUND),
            },
            TermNode::Const(c) => (Key::Const(c.clone()), CLOSED),
            TermNode::Lam(x, body) => {
                env.push(x.clone());
                let (bc, bfv) = self.count(body, env);
                env.pop();
                (Key::Lam(bc), bfv)
            }
            TermNode::App(f, a) => {
                let (fc, ffv) = self.count(f, env);
                let (ac, afv) = self.count(a, env);
                (Key::App(fc, ac), ffv.min(afv))
            }
            TermNode::Ctor(c, args) => {
                let mut fv = CLOSED;
                let mut cs = Vec::with_capacity(args.len());
                for a in args {
                    let (ac, afv) = self.count(a, env);
                    cs.push(ac);
                    fv = fv.min(afv);
                }
                (Key::Ctor(c.clone(), cs), fv)
            }
            TermNode::Match(s, branches) => {
                let (sc, mut fv) = self.count(s, env);
                let mut bs = Vec::with_capacity(branches.len());
                for b in branches {
                    env.extend(b.binders.iter().cloned());
                    let (bc, bfv) = self.count(&b.body, env);
                    env.truncate(depth);
                    bs.push((b.ctor.clone(), b.binders.len(), bc));
                    fv = fv.min(bfv);
                }
                (Key::Match(sc, bs), fv)
            }
        };
        let class = self.class_of(key);
        if fv >= depth as FreeDepth {
            *self.counts.entry(class).or_insert(0) += 1;
        }
        (class, fv)
    }

    fn shared(&self, class: Class) -> bool {
        self.counts.get(&class).copied().unwrap_or(0) >= 2
    }

    /// Second pass: replace shared closed subterms by binder references,
    /// emitting each binding (dependencies first) at its first occurrence.
    fn rebuild(&mut self, t: &Term, env: &mut Vec<Name>) -> (Class, FreeDepth, Term) {
        let depth = env.len();
        let (key, fv, new) = match &**t {
            TermNode::Var(x) => match env.iter().rposition(|b| b == x) {
                Some(p) => (Key::Bound(depth - 1 - p), p as FreeDepth, t.clone()),
                None => (Key::Free(x.clone()), UNBOUND, t.clone()),
            },
            TermNode::Const(c) => (Key::Const(c.clone()), CLOSED, t.clone()),
            TermNode::Lam(x, body) => {
                env.push(x.clone());
                let (bc, bfv, nb) = self.rebuild(body, env);
                env.pop();
                let new = if Rc::ptr_eq(&nb, body) {
                    t.clone()
                } else {
                    Rc::new(TermNode::Lam(x.clone(), nb))
                };
                (Key::Lam(bc), bfv, new)
            }
            TermNode::App(f, a) => {
                let (fc, ffv, nf) = self.rebuild(f, env);
                let (ac, afv, na) = self.rebuild(a, env);
                let new = if Rc::ptr_eq(&nf, f) && Rc::ptr_eq(&na, a) {
                    t.clone()
                } else {
                    Rc::new(TermNode::App(nf, na))
                };
                (Key::App(fc, ac), ffv.min(afv), new)
            }
            TermNode::Ctor(c, args) => {
                let mut fv = CLOSED;
                let mut cs = Vec::with_capacity(args.len());
                let mut ns = Vec::with_capacity(args.len());
                let mut changed = false;
                for a in args {
                    let (ac, afv, na) = self.rebuild(a, env);
                    changed |= !Rc::ptr_eq(&na, a);
                    cs.push(ac);
                    ns.push(na);
                    fv = fv.min(afv);
                }
                let new = if changed { Rc::new(TermNode::Ctor(c.clone(), ns)) } else { t.clone() };
                (Key::Ctor(c.clone(), cs), fv, new)
            }
            TermNode::Match(s, branches) => {
                let (sc, mut fv, nscrutinee) = self.rebuild(s, env);
                let mut bs = Vec::with_capacity(branches.len());
                let mut nbranches = Vec::with_capacity(branches.len());
                let mut changed = !Rc::ptr_eq(&nscrutinee, s);
                for b in branches {
                    env.extend(b.binders.iter().cloned());
                    let (bc, bfv, nbody) = self.rebuild(&b.body, env);
                    env.truncate(depth);
                    changed |= !Rc::ptr_eq(&nbody, &b.body);
                    bs.push((b.ctor.clone(), b.binders.len(), bc));
                    nbranches.push(Branch {
                        ctor: b.ctor.clone(),
                        binders: b.binders.clone(),
                        body: nbody,
                    });
                    fv = fv.min(bfv);
                }
                let new = if changed {
                    Rc::new(TermNode::Match(nscrutinee, nbranches))
                } else {
                    t.clone()
                };
                (Key::Match(sc, bs), fv, new)
            }
        };
        let class = self.class_of(key);
        if self.shared(class) && fv >= depth as FreeDepth {
            let binder = match self.binder_of.get(&class) {
                Some(b) => b.clone(),
                None => {
                    // Children were rebuilt above, so `new` already references
                    // the binders of any shared subterm: emit it as the body.
                    let b: Name = Rc::from(format!("#s{}", self.bindings.len()));
                    self.binder_of.insert(class, b.clone());
                    self.bindings.push((b.clone(), new));
                    b
                }
            };
            return (class, fv, Rc::new(TermNode::Var(binder)));
        }
        (class, fv, new)
    }
}
