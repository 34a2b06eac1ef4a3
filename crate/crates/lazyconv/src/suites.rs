//! Benchmark problem families over a fixed signature of recursive
//! constants: arithmetic whose values are exponentially large but cheap to
//! share, tree builders with internal sharing, pairs that pin down
//! argument-comparison order, and a deeply nested constant chain. Each
//! family scales by one size parameter and carries its expected verdict.

use std::rc::Rc;

use crate::syntax::{mk, parse_defs, GlobalDefs, Term};

/// Signature shared by every family.
pub const SUITE_DEFS: &str = "\
data Bool := True 0 | False 0;
data Nat := O 0 | S 1;
data Tree := L 0 | N 2;
data Pair := P 2;
def kconst := \\x. \\y. x;
def plus := \\n. \\m. match n with O -> m | S k -> S (plus k m) end;
def mult := \\n. \\m. match n with O -> O | S k -> plus m (mult k m) end;
def exp2 := \\n. match n with O -> S O | S k -> mult (S (S O)) (exp2 k) end;
def zero := \\n. O;
def perfect := \\n. \\t. match n with O -> t | S k -> perfect k (N t t) end;
def ldepth := \\t. match t with L -> O | N l r -> S (ldepth l) end;
def ldepth2 := \\t. match t with L -> O | N l r -> plus (ldepth2 l) (S O) end;
def is_zero := \\n. match n with O -> True | S k -> False end;
def pair1 := \\n. P (is_zero n) n;
def pair2 := \\n. P n (is_zero n);
def even := \\n. match n with O -> True | S k -> odd k end;
def odd := \\n. match n with O -> False | S k -> even k end;
def f0 := \\n. n;
def f1 := \\n. f0 (f0 n);
def f2 := \\n. f1 (f1 n);
def f3 := \\n. f2 (f2 n);
def f4 := \\n. f3 (f3 n);
";

pub const SUITE_NAMES: &[&str] = &[
    "exp2-eq",
    "zero-exp2",
    "ldepth",
    "perfect",
    "pair-order",
    "pair-defs",
    "even-odd",
    "f4-chain",
];

pub fn suite_defs() -> Rc<GlobalDefs> {
    Rc::new(parse_defs(SUITE_DEFS).expect("suite signature parses"))
}

#[derive(Debug, Clone)]
pub struct BenchCase {
    /// Distinguishes sub-cases of one family (e.g. the two argument orders).
    pub label: &'static str,
    pub lhs: Term,
    pub rhs: Term,
    pub expected: bool,
}

fn exp2(n: u64) -> Term {
    mk::app(mk::constant("exp2"), mk::nat(n))
}

fn f4_chain(depth: u64) -> Term {
    let mut t = mk::nat(0);
    for _ in 0..depth {
        t = mk::app(mk::constant("f4"), t);
    }
    t
}

/// The cases of one family at one size; `None` for an unknown family
/// name. Sizes are clamped to 1 where a family needs a predecessor.
pub fn suite_cases(suite: &str, n: u64) -> Option<Vec<BenchCase>> {
    let n1 = n.max(1);
    let cases = match suite {
        "exp2-eq" => vec![BenchCase {
            label: "n-vs-pred-plus-one",
            lhs: exp2(n1),
            rhs: mk::app(
                mk::constant("exp2"),
                mk::apps(mk::constant("plus"), [mk::nat(n1 - 1), mk::nat(1)]),
            ),
            expected: true,
        }],
        "zero-exp2" => vec![BenchCase {
            label: "n-vs-succ",
            lhs: mk::app(mk::constant("zero"), exp2(n)),
            rhs: mk::app(mk::constant("zero"), exp2(n + 1)),
            expected: true,
        }],
        "ldepth" => {
            let tree = mk::apps(mk::constant("perfect"), [mk::nat(n), mk::ctor("L", vec![])]);
            vec![BenchCase {
                label: "linear-vs-quadratic",
                lhs: mk::app(mk::constant("ldepth"), tree.clone()),
                rhs: mk::app(mk::constant("ldepth2"), tree),
                expected: true,
            }]
        }
        "perfect" => vec![BenchCase {
            label: "peel-one-layer",
            lhs: mk::apps(mk::constant("perfect"), [mk::nat(n1), mk::ctor("L", vec![])]),
            rhs: mk::apps(
                mk::constant("perfect"),
                [
                    mk::nat(n1 - 1),
                    mk::ctor("N", vec![mk::ctor("L", vec![]), mk::ctor("L", vec![])]),
                ],
            ),
            expected: true,
        }],
        "pair-order" => vec![
            BenchCase {
                label: "value-first",
                lhs: mk::ctor("P", vec![exp2(n), mk::ctor("False", vec![])]),
                rhs: mk::ctor("P", vec![exp2(n + 1), mk::ctor("True", vec![])]),
                expected: false,
            },
            BenchCase {
                label: "flag-first",
                lhs: mk::ctor("P", vec![mk::ctor("False", vec![]), exp2(n)]),
                rhs: mk::ctor("P", vec![mk::ctor("True", vec![]), exp2(n + 1)]),
                expected: false,
            },
        ],
        "pair-defs" => vec![
            BenchCase {
                label: "pair1",
                lhs: mk::app(mk::constant("pair1"), exp2(n)),
                rhs: mk::ctor("P", vec![mk::ctor("False", vec![]), exp2(n)]),
                expected: true,
            },
            BenchCase {
                label: "pair2",
                lhs: mk::app(mk::constant("pair2"), exp2(n)),
                rhs: mk::ctor("P", vec![exp2(n), mk::ctor("False", vec![])]),
                expected: true,
            },
        ],
        "even-odd" => vec![BenchCase {
            label: "odd-pred-vs-even",
            lhs: mk::app(mk::constant("odd"), mk::nat(2 * n1 - 1)),
            rhs: mk::app(mk::constant("even"), mk::nat(2 * n1)),
            expected: true,
        }],
        "f4-chain" => vec![BenchCase {
            label: "self",
            lhs: f4_chain(n),
            rhs: f4_chain(n),
            expected: true,
        }],
        _ => return None,
    };
    Some(cases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{check_convertible, Options, Verdict};
    use crate::oracle;

    #[test]
    fn every_family_produces_cases() {
        for name in SUITE_NAMES {
            let cases = suite_cases(name, 3).unwrap();
            assert!(!cases.is_empty(), "{name} is empty");
        }
        assert!(suite_cases("no-such-suite", 3).is_none());
    }

    #[test]
    fn small_sizes_match_the_oracle() {
        let defs = suite_defs();
        for name in SUITE_NAMES {
            for case in suite_cases(name, 2).unwrap() {
                let (v, _) =
                    check_convertible(&defs, &case.lhs, &case.rhs, &Options::default(), 5_000_000)
                        .unwrap();
                let expected = if case.expected {
                    Verdict::Convertible
                } else {
                    Verdict::NotConvertible
                };
                assert_eq!(v, expected, "{name}/{}", case.label);
                match oracle::oracle_convertible(&defs, &case.lhs, &case.rhs, 1_000_000) {
                    oracle::OracleResult::Decided(b) => assert_eq!(
                        b, case.expected,
                        "oracle disagrees on {name}/{}",
                        case.label
                    ),
                    oracle::OracleResult::OutOfFuel => {}
                }
            }
        }
    }

    #[test]
    fn expected_verdicts_hold_at_mid_sizes() {
        let defs = suite_defs();
        for (name, n) in [("zero-exp2", 20), ("pair-order", 12), ("even-odd", 30)] {
            for case in suite_cases(name, n).unwrap() {
                let (v, _) =
                    check_convertible(&defs, &case.lhs, &case.rhs, &Options::default(), 5_000_000)
                        .unwrap();
                let expected = if case.expected {
                    Verdict::Convertible
                } else {
                    Verdict::NotConvertible
                };
                assert_eq!(v, expected, "{name}/{} at {n}", case.label);
            }
        }
    }
}
