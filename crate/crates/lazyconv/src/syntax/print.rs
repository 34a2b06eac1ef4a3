//! Term pretty-printer. Inverse of the parser up to alpha-renaming:
//! `parse_term(print_term(t), defs)` is alpha-equal to `t` whenever `t`
//! only mentions names the surface grammar can express.

use super::{binder_base, Branch, Name, Term, TermNode};
use std::collections::{HashMap, HashSet};
use std::fmt::Write;
use std::rc::Rc;

/// How tightly the surrounding context binds.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Prec {
    /// Top level, lambda/branch bodies, match scrutinees.
    Term,
    /// Head of an application or constructor spine.
    Spine,
    /// Argument position: only single tokens survive unparenthesized.
    Atom,
}

pub fn print_term(t: &Term) -> String {
    print_node(t)
}

pub(super) fn print_node(n: &TermNode) -> String {
    let mut out = String::new();
    go(n, Prec::Term, &mut out);
    out
}

fn go(n: &TermNode, prec: Prec, out: &mut String) {
    match n {
        TermNode::Var(x) => out.push_str(x),
        TermNode::Const(c) => out.push_str(c),
        TermNode::Ctor(c, args) if args.is_empty() => out.push_str(c),
        TermNode::Lam(x, body) => paren(prec >= Prec::Spine, out, |out| {
            let _ = write!(out, "\\{x}. ");
            go(body, Prec::Term, out);
        }),
        TermNode::App(f, a) => paren(prec >= Prec::Atom, out, |out| {
            go(f, Prec::Spine, out);
            out.push(' ');
            go(a, Prec::Atom, out);
        }),
        TermNode::Ctor(c, args) => paren(prec >= Prec::Atom, out, |out| {
            out.push_str(c);
            for a in args {
                out.push(' ');
                go(a, Prec::Atom, out);
            }
        }),
        TermNode::Match(scrutinee, branches) => paren(prec >= Prec::Spine, out, |out| {
            out.push_str("match ");
            go(scrutinee, Prec::Term, out);
            out.push_str(" with ");
            for (i, b) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                out.push_str(&b.ctor);
                for x in &b.binders {
                    let _ = write!(out, " {x}");
                }
                out.push_str(" -> ");
                go(&b.body, Prec::Term, out);
            }
            out.push_str(" end");
        }),
    }
}

fn paren(needed: bool, out: &mut String, body: impl FnOnce(&mut String)) {
    if needed {
        out.push('(');
    }
    body(out);
    if needed {
        out.push(')');
    }
}

/// Rename machine-generated binders ("#x/17") back to readable names so the
/// printed term parses again. A binder keeps the user name it stands for
/// when that is safe and gets a numbered variant otherwise; user-written
/// binders stay untouched unless an enclosing renaming would capture them.
pub fn tidy_binders(t: &Term) -> Term {
    let mut taken = HashSet::new();
    collect_user_names(t, &mut taken);
    tidy(t, &HashMap::new(), &mut Vec::new(), &taken)
}

fn collect_user_names(t: &TermNode, taken: &mut HashSet<Name>) {
    match t {
        TermNode::Var(x) => {
            if !x.starts_with('#') {
                taken.insert(x.clone());
            }
        }
        TermNode::Const(c) => {
            taken.insert(c.clone());
        }
        TermNode::Lam(x, body) => {
            if !x.starts_with('#') {
                taken.insert(x.clone());
            }
            collect_user_names(body, taken);
        }
        TermNode::App(f, a) => {
            collect_user_names(f, taken);
            collect_user_names(a, taken);
        }
        TermNode::Ctor(_, args) => {
            for a in args {
                collect_user_names(a, taken);
            }
        }
        TermNode::Match(scrutinee, branches) => {
            collect_user_names(scrutinee, taken);
            for b in branches {
                for x in &b.binders {
                    if !x.starts_with('#') {
                        taken.insert(x.clone());
                    }
                }
                collect_user_names(&b.body, taken);
            }
        }
    }
}

fn pick_name(base: &str, taken: &HashSet<Name>, scope: &[Name]) -> Name {
    let free = |cand: &str| !taken.contains(cand) && scope.iter().all(|n| &**n != cand);
    if free(base) {
        return Rc::from(base);
    }
    (1u64..)
        .map(|i| format!("{base}{i}"))
        .find(|cand| free(cand))
        .map(|s| Rc::from(s.as_str()))
        .expect("some numbered variant is unused")
}

fn tidy(
    t: &Term,
    env: &HashMap<Name, Name>,
    scope: &mut Vec<Name>,
    taken: &HashSet<Name>,
) -> Term {
    let rebind = |x: &Name, scope: &[Name]| -> Option<Name> {
        if x.starts_with('#') || scope.contains(x) {
            Some(pick_name(binder_base(x), taken, scope))
        } else {
            None
        }
    };
    match &**t {
        TermNode::Var(x) => match env.get(x) {
            Some(n) => Rc::new(TermNode::Var(n.clone())),
            None => t.clone(),
        },
        TermNode::Const(_) => t.clone(),
        TermNode::Lam(x, body) => match rebind(x, scope) {
            Some(n) => {
                let mut env2 = env.clone();
                env2.insert(x.clone(), n.clone());
                scope.push(n.clone());
                let body2 = tidy(body, &env2, scope, taken);
                scope.pop();
                Rc::new(TermNode::Lam(n, body2))
            }
            None => Rc::new(TermNode::Lam(x.clone(), tidy(body, env, scope, taken))),
        },
        TermNode::App(f, a) => Rc::new(TermNode::App(
            tidy(f, env, scope, taken),
            tidy(a, env, scope, taken),
        )),
        TermNode::Ctor(c, args) => Rc::new(TermNode::Ctor(
            c.clone(),
            args.iter().map(|a| tidy(a, env, scope, taken)).collect(),
        )),
        TermNode::Match(scrutinee, branches) => {
            let scrutinee = tidy(scrutinee, env, scope, taken);
            let branches = branches
                .iter()
                .map(|b| {
                    let mut env2 = env.clone();
                    let mut pushed = 0;
                    let binders = b
                        .binders
                        .iter()
                        .map(|x| match rebind(x, scope) {
                            Some(n) => {
                                env2.insert(x.clone(), n.clone());
                                scope.push(n.clone());
                                pushed += 1;
                                n
                            }
                            None => x.clone(),
                        })
                        .collect();
                    let body = tidy(&b.body, &env2, scope, taken);
                    scope.truncate(scope.len() - pushed);
                    Branch { ctor: b.ctor.clone(), binders, body }
                })
                .collect();
            Rc::new(TermNode::Match(scrutinee, branches))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_equal, mk, parse_defs, parse_term};

    #[test]
    fn identity() {
        assert_eq!(print_term(&mk::lam("x", mk::var("x"))), "\\x. x");
    }

    #[test]
    fn minimal_parens_in_applications() {
        let t = mk::app(mk::var("f"), mk::app(mk::var("g"), mk::var("x")));
        assert_eq!(print_term(&t), "f (g x)");
        let t = mk::app(mk::app(mk::var("f"), mk::var("x")), mk::var("y"));
        assert_eq!(print_term(&t), "f x y");
    }

    #[test]
    fn ctor_spines() {
        assert_eq!(print_term(&mk::nat(2)), "S (S O)");
        assert_eq!(print_term(&mk::ctor("O", vec![])), "O");
    }

    #[test]
    fn lambda_needs_parens_in_head_position() {
        let t = mk::app(mk::lam("x", mk::var("x")), mk::var("y"));
        assert_eq!(print_term(&t), "(\\x. x) y");
    }

    #[test]
    fn roundtrip_nested_match() {
        let defs = parse_defs("data Nat := O 0 | S 1; data Bool := True 0 | False 0;").unwrap();
        let src = "\\n. match n with O -> True | S k -> (\\x. match x with O -> False | S j -> j end) k end";
        let t = parse_term(src, &defs).unwrap();
        let u = parse_term(&print_term(&t), &defs).unwrap();
        assert!(alpha_equal(&t, &u), "printed as {}", print_term(&t));
    }

    #[test]
    fn tidy_restores_the_original_binder() {
        let t = mk::lam("#y/3", mk::var("#y/3"));
        assert_eq!(print_term(&tidy_binders(&t)), "\\y. y");
    }

    #[test]
    fn tidy_avoids_capturing_free_variables() {
        let t = mk::lam("#y/0", mk::var("y"));
        assert_eq!(print_term(&tidy_binders(&t)), "\\y1. y");
    }

    #[test]
    fn tidy_keeps_nested_binders_apart() {
        let t = mk::lam(
            "#x/0",
            mk::lam("#x/1", mk::app(mk::var("#x/0"), mk::var("#x/1"))),
        );
        assert_eq!(print_term(&tidy_binders(&t)), "\\x. \\x1. x x1");
    }

    #[test]
    fn tidy_renames_match_binders() {
        let defs = parse_defs("data Nat := O 0 | S 1;").unwrap();
        let t = mk::match_(
            mk::var("n"),
            vec![
                crate::syntax::Branch {
                    ctor: Rc::from("O"),
                    binders: vec![],
                    body: mk::ctor("O", vec![]),
                },
                crate::syntax::Branch {
                    ctor: Rc::from("S"),
                    binders: vec![Rc::from("#k/7")],
                    body: mk::var("#k/7"),
                },
            ],
        );
        let printed = print_term(&tidy_binders(&t));
        assert_eq!(printed, "match n with O -> O | S k -> k end");
        parse_term(&printed, &defs).unwrap();
    }

    #[test]
    fn match_parenthesized_as_head() {
        let defs = parse_defs("data Nat := O 0 | S 1;").unwrap();
        let m = parse_term("match x with O -> O | S k -> k end", &defs).unwrap();
        let t = mk::app(m, mk::var("y"));
        let printed = print_term(&t);
        assert_eq!(printed, "(match x with O -> O | S k -> k end) y");
        let u = parse_term(&printed, &defs).unwrap();
        assert!(alpha_equal(&t, &u));
    }
}
