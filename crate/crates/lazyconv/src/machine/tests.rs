use super::*;
use crate::oracle::{self, OracleResult};
use crate::sched::STAR;
use crate::syntax::{alpha_equal, mk, parse_defs, parse_term};

fn defs_of(src: &str) -> Rc<GlobalDefs> {
    Rc::new(parse_defs(src).unwrap())
}

fn corpus() -> Rc<GlobalDefs> {
    Rc::new(oracle::corpus_defs())
}

fn term(defs: &GlobalDefs, src: &str) -> Term {
    parse_term(src, defs).unwrap()
}

fn check(defs: &Rc<GlobalDefs>, lhs: &str, rhs: &str, opts: &Options) -> (Verdict, Stats) {
    let l = term(defs, lhs);
    let r = term(defs, rhs);
    check_convertible(defs, &l, &r, opts, 1_000_000).unwrap()
}

fn paranoid() -> Options {
    Options {
        paranoid: true,
        ..Options::default()
    }
}

/// Definitions with a constant that never reaches a value, for pinning
/// down what the machine refuses to evaluate.
const LOOPY: &str = "\
data Nat := O 0 | S 1;
def kconst := \\x. \\y. x;
def idn := \\x. x;
def loop := \\n. loop n;
";

#[test]
fn normalize_identity() {
    let defs = corpus();
    let (nf, _) = normalize(&defs, &term(&defs, "\\x. x"), 1_000).unwrap();
    assert!(alpha_equal(&nf.unwrap(), &mk::lam("x", mk::var("x"))));
}

#[test]
fn normalize_beta_chain() {
    let defs = corpus();
    let t = term(&defs, "(\\f. f (\\x. x)) (\\y. y)");
    let (nf, _) = normalize(&defs, &t, 10_000).unwrap();
    assert!(alpha_equal(&nf.unwrap(), &mk::lam("x", mk::var("x"))));
}

#[test]
fn normalize_agrees_with_oracle_on_arithmetic() {
    let defs = corpus();
    // Recursive constants applied to neutral terms unfold forever, so
    // every term here reduces to constructors or non-recursive constants.
    for src in [
        "plus (S O) (S (S O))",
        "double (S (S O))",
        "ifb (even (S (S O))) O (S O)",
        "compose (plus (S O)) double (S O)",
        "\\x. ifb True x (S O)",
        "\\f. \\x. compose f f x",
    ] {
        let t = term(&defs, src);
        let expected = oracle::normalize_naive(&defs, &t, 100_000).unwrap();
        let (nf, _) = normalize(&defs, &t, 1_000_000).unwrap();
        assert!(
            alpha_equal(&nf.clone().unwrap(), &expected),
            "{src}: machine gave {:?}, oracle gave {expected:?}",
            nf
        );
    }
}

#[test]
fn normalize_skips_unused_argument() {
    let defs = defs_of(LOOPY);
    let t = term(&defs, "kconst O (loop O)");
    let (nf, _) = normalize(&defs, &t, 100_000).unwrap();
    assert!(alpha_equal(&nf.unwrap(), &term(&defs, "O")));
}

#[test]
fn normalize_reads_back_stuck_matches() {
    let defs = corpus();
    let t = term(&defs, "\\n. match n with O -> O | S k -> S (idn k) end");
    let (nf, _) = normalize(&defs, &t, 100_000).unwrap();
    let expected = oracle::normalize_naive(&defs, &t, 100_000).unwrap();
    assert!(alpha_equal(&nf.unwrap(), &expected));
}

#[test]
fn match_on_a_function_is_a_dynamic_error() {
    let defs = corpus();
    let t = term(&defs, "match kconst O with O -> O | S k -> k end");
    let err = normalize(&defs, &t, 100_000).unwrap_err();
    assert!(matches!(err, MachineError::MatchOnFunction));
}

#[test]
fn alpha_equivalent_lambdas_convertible() {
    let defs = corpus();
    let (v, _) = check(&defs, "\\x. \\y. x y", "\\a. \\b. a b", &paranoid());
    assert_eq!(v, Verdict::Convertible);
}

#[test]
fn distinct_heads_decide_without_evaluating_arguments() {
    let defs = defs_of(LOOPY);
    // Each side applies a different free variable to a diverging term: the
    // verdict must come from the heads alone.
    let (v, stats) = check(&defs, "x (loop O)", "y (loop O)", &paranoid());
    assert_eq!(v, Verdict::NotConvertible);
    assert!(
        stats.eval_transitions < 20,
        "argument was evaluated: {} eval transitions",
        stats.eval_transitions
    );
}

#[test]
fn unused_diverging_argument_is_never_forced() {
    let defs = defs_of(LOOPY);
    let (v, _) = check(&defs, "kconst idn (loop O)", "idn", &paranoid());
    assert_eq!(v, Verdict::Convertible);
}

#[test]
fn equal_arguments_win_against_diverging_unfolding() {
    let defs = defs_of(LOOPY);
    // `loop x` can only be decided through the argument comparison; the
    // unfolding race never terminates and must be cancelled.
    let (v, stats) = check(&defs, "loop x", "loop x", &paranoid());
    assert_eq!(v, Verdict::Convertible);
    assert!(stats.sched.cancellations > 0, "loser was not cancelled");
}

#[test]
fn equal_arguments_win_without_freezing_too() {
    let defs = defs_of(LOOPY);
    let opts = Options {
        frozen: false,
        paranoid: true,
        ..Options::default()
    };
    let (v, _) = check(&defs, "loop x", "loop x", &opts);
    assert_eq!(v, Verdict::Convertible);
}

#[test]
fn unfolding_decides_when_arguments_differ() {
    let defs = corpus();
    let (v, _) = check(&defs, "plus (S O) (S O)", "S (S O)", &paranoid());
    assert_eq!(v, Verdict::Convertible);
    let (v, _) = check(&defs, "plus O (S O)", "plus (S O) O", &paranoid());
    assert_eq!(v, Verdict::Convertible);
    let (v, _) = check(&defs, "even (S O)", "True", &paranoid());
    assert_eq!(v, Verdict::NotConvertible);
}

#[test]
fn frozen_failure_is_not_authoritative() {
    let defs = corpus();
    // idn O and kconst O O both evaluate to O, but the branch that keeps
    // idn frozen fails (a frozen constant is never a constructor). Only
    // the unfolding branch can answer, and the answer is yes.
    let (v, _) = check(&defs, "idn O", "kconst O O", &paranoid());
    assert_eq!(v, Verdict::Convertible);
}

#[test]
fn shared_subvalues_hit_the_comparison_memo() {
    let defs = defs_of(
        "data Nat := O 0 | S 1;
         data Pair := P 2;
         def dup := \\t. P t t;
         def plus := \\n. \\m. match n with O -> m | S k -> S (plus k m) end;",
    );
    let lhs = "dup (dup (plus O O))";
    let rhs = "dup (dup O)";
    let (v, stats) = check(&defs, lhs, rhs, &paranoid());
    assert_eq!(v, Verdict::Convertible);
    assert!(stats.memo_hits > 0, "expected shared comparisons");

    let unshared = Options {
        conv_sharing: false,
        paranoid: true,
        ..Options::default()
    };
    let (v2, stats2) = check(&defs, lhs, rhs, &unshared);
    assert_eq!(v2, Verdict::Convertible);
    assert_eq!(stats2.memo_hits, 0);
    assert!(
        stats2.transitions > stats.transitions,
        "sharing should save work: {} vs {}",
        stats.transitions,
        stats2.transitions
    );
}

#[test]
fn presharing_collapses_identical_sides() {
    let defs = corpus();
    let shared = Options {
        presharing: true,
        paranoid: true,
        ..Options::default()
    };
    let big = "plus (double (S (S O))) (S O)";
    let (v, fast) = check(&defs, big, big, &shared);
    assert_eq!(v, Verdict::Convertible);
    let (v2, slow) = check(&defs, big, big, &paranoid());
    assert_eq!(v2, Verdict::Convertible);
    assert!(
        fast.transitions < slow.transitions,
        "presharing should shortcut identical sides: {} vs {}",
        fast.transitions,
        slow.transitions
    );
}

#[test]
fn eta_disabled_distinguishes_wrapper() {
    let defs = corpus();
    let (v, _) = check(&defs, "\\x. f x", "f", &paranoid());
    assert_eq!(v, Verdict::NotConvertible);
}

#[test]
fn eta_equates_wrapper_with_neutral_head() {
    let defs = corpus();
    let opts = Options {
        eta: true,
        paranoid: true,
        ..Options::default()
    };
    let (v, _) = check(&defs, "\\x. f x", "f", &opts);
    assert_eq!(v, Verdict::Convertible);
    let (v, _) = check(&defs, "f", "\\x. f x", &opts);
    assert_eq!(v, Verdict::Convertible);
    let (v, _) = check(&defs, "\\x. f x x", "f", &opts);
    assert_eq!(v, Verdict::NotConvertible);
}

#[test]
fn eta_equates_wrapper_with_constant_head() {
    let defs = corpus();
    let opts = Options {
        eta: true,
        paranoid: true,
        ..Options::default()
    };
    let (v, _) = check(&defs, "\\x. plus x", "plus", &opts);
    assert_eq!(v, Verdict::Convertible);
    let (v, _) = check(&defs, "plus", "\\x. plus x", &opts);
    assert_eq!(v, Verdict::Convertible);
    let (v, _) = check(&defs, "\\x. plus x O", "plus", &opts);
    assert_eq!(v, Verdict::NotConvertible);
}

#[test]
fn stuck_matches_compare_branchwise() {
    let defs = corpus();
    let (v, _) = check(
        &defs,
        "match x with O -> O | S k -> S k end",
        "match x with O -> O | S j -> S j end",
        &paranoid(),
    );
    assert_eq!(v, Verdict::Convertible);
    let (v, _) = check(
        &defs,
        "match x with O -> O | S k -> S k end",
        "match x with O -> O | S j -> j end",
        &paranoid(),
    );
    assert_eq!(v, Verdict::NotConvertible);
}

#[test]
fn applied_stuck_matches_compare_head_and_arguments() {
    let defs = corpus();
    let lhs = "(match x with O -> idn | S k -> kconst end) y";
    let rhs = "(match x with O -> idn | S j -> kconst end) y";
    let (v, _) = check(&defs, lhs, rhs, &paranoid());
    assert_eq!(v, Verdict::Convertible);
    let rhs_bad = "(match x with O -> idn | S j -> kconst end) z";
    let (v, _) = check(&defs, lhs, rhs_bad, &paranoid());
    assert_eq!(v, Verdict::NotConvertible);
}

#[test]
fn constructor_values_compare_by_name_then_arguments() {
    let defs = corpus();
    let (v, _) = check(&defs, "S O", "S O", &paranoid());
    assert_eq!(v, Verdict::Convertible);
    let (v, _) = check(&defs, "S O", "O", &paranoid());
    assert_eq!(v, Verdict::NotConvertible);
    let (v, _) = check(&defs, "P O (S O)", "P (S O) O", &paranoid());
    assert_eq!(v, Verdict::NotConvertible);
}

#[test]
fn out_of_fuel_is_reported() {
    let defs = corpus();
    let l = term(&defs, "plus (S O) (S O)");
    let r = term(&defs, "S (S O)");
    let (v, _) = check_convertible(&defs, &l, &r, &Options::default(), 3).unwrap();
    assert_eq!(v, Verdict::Unknown(StopReason::Fuel));
}

#[test]
fn trace_records_unfolding_decisions() {
    let defs = corpus();
    let opts = Options {
        trace: true,
        ..Options::default()
    };
    let mut m = Machine::new(defs.clone(), opts);
    let problem = crate::syntax::GeneralizedProblem::plain(
        term(&defs, "plus O O"),
        term(&defs, "O"),
    );
    m.start_conv(&problem);
    m.drive(100_000).unwrap();
    assert!(m.root_bool().unwrap());
    assert!(
        m.trace.iter().any(|e| &*e.constant == "plus"),
        "expected an unfolding event for plus, got {:?}",
        m.trace
    );
}

type MakeConnector = fn(ChannelId, ChannelId) -> ConvExpr;

#[test]
fn connector_truth_tables() {
    let cases: [(&str, MakeConnector, [bool; 4]); 4] = [
        ("and", ConvExpr::And, [true, false, false, false]),
        ("choice", ConvExpr::Choice, [true, false, true, false]),
        ("biased", ConvExpr::BiasedChoice, [true, true, true, false]),
        ("or", ConvExpr::Or, [true, true, true, false]),
    ];
    for (name, make, expected) in cases {
        for (i, (va, vb)) in [(true, true), (false, true), (true, false), (false, false)]
            .into_iter()
            .enumerate()
        {
            let got = run_connector(make, va, vb);
            assert_eq!(
                got, expected[i],
                "{name}({va}, {vb}) gave {got}, expected {}",
                expected[i]
            );
        }
    }
}

fn run_connector(make: impl Fn(ChannelId, ChannelId) -> ConvExpr, va: bool, vb: bool) -> bool {
    let defs = defs_of("data Unit := U 0;");
    let mut m = Machine::new(defs, paranoid());
    let root = m.alloc_process(ProcExpr::Taken, true, Some(STAR));
    let a = m.alloc_process(ConvExpr::Lit(va).into(), true, Some(root));
    let b = m.alloc_process(ConvExpr::Lit(vb).into(), true, Some(root));
    m.sched.resume(root, make(a, b).into());
    m.set_root(root);
    match m.drive(1_000).unwrap() {
        Outcome::RootFinished => m.root_bool().unwrap(),
        other => panic!("connector run stopped early: {other:?}"),
    }
}

#[test]
fn waiting_cycle_is_reported_as_deadlock() {
    let defs = defs_of("data Unit := U 0;");
    let mut m = Machine::new(defs, paranoid());
    let root = m.alloc_process(ProcExpr::Taken, true, Some(STAR));
    let a = m.alloc_process(ProcExpr::Taken, false, None);
    m.sched.resume(a, ConvExpr::Forward(root).into());
    m.sched.resume(root, ConvExpr::Forward(a).into());
    m.set_root(root);
    assert_eq!(m.drive(1_000).unwrap(), Outcome::Deadlock);
}

#[test]
fn agrees_with_oracle_on_random_pairs() {
    for entry in oracle::gen_corpus(11, 60, 8) {
        let (v, _) =
            check_convertible(&entry.defs, &entry.lhs, &entry.rhs, &Options::default(), 2_000_000)
                .unwrap();
        if let Some(expected) = entry.kind.expected() {
            let expected = if expected {
                Verdict::Convertible
            } else {
                Verdict::NotConvertible
            };
            assert_eq!(v, expected, "{:?}: {:?} vs {:?}", entry.kind, entry.lhs, entry.rhs);
        }
        match oracle::oracle_convertible(&entry.defs, &entry.lhs, &entry.rhs, 200_000) {
            OracleResult::Decided(b) => {
                let expected = if b {
                    Verdict::Convertible
                } else {
                    Verdict::NotConvertible
                };
                assert_eq!(v, expected, "disagrees with oracle on {:?} vs {:?}", entry.lhs, entry.rhs);
            }
            OracleResult::OutOfFuel => {}
        }
    }
}

#[test]
fn stats_render_is_flat_key_value() {
    let defs = corpus();
    let (_, stats) = check(&defs, "S O", "S O", &Options::default());
    for line in stats.render().lines() {
        let (key, value) = line.split_once(": ").expect("key: value");
        assert!(!key.is_empty());
        value.parse::<u64>().expect("numeric value");
    }
}
