//! End-to-end tests of the binary: verdict strings, exit codes, stats and
//! trace output, determinism, and the bench row format.

use std::io::Write;
use std::process::{Command, Output};

use lazyconv::suites::SUITE_DEFS;
use tempfile::NamedTempFile;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lazyconv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn suite_defs_file() -> NamedTempFile {
    let mut f = NamedTempFile::new().expect("temp file");
    f.write_all(SUITE_DEFS.as_bytes()).expect("write defs");
    f
}

#[test]
fn alpha_equivalent_pair_is_convertible() {
    let out = run(&["check", "--lhs", "\\x. x", "--rhs", "\\y. y"]);
    assert_eq!(stdout(&out), "convertible\n");
    assert_eq!(code(&out), 0);
}

#[test]
fn distinct_pair_exits_one() {
    let out = run(&["check", "--lhs", "\\x. \\y. x", "--rhs", "\\x. \\y. y"]);
    assert_eq!(stdout(&out), "not convertible\n");
    assert_eq!(code(&out), 1);
}

#[test]
fn tiny_fuel_is_undecided() {
    let out = run(&["check", "--lhs", "\\x. x", "--rhs", "\\y. y", "--fuel", "1"]);
    assert_eq!(stdout(&out), "unknown (fuel)\n");
    assert_eq!(code(&out), 2);
}

#[test]
fn zero_fuel_is_an_input_error() {
    let out = run(&["check", "--lhs", "x", "--rhs", "x", "--fuel", "0"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("fuel"));
}

#[test]
fn parse_errors_exit_three() {
    let out = run(&["check", "--lhs", "\\x. (", "--rhs", "x"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("lhs"));
}

#[test]
fn unreadable_defs_file_exits_three() {
    let out = run(&["normalize", "--defs", "/no/such/file.defs", "--lhs", "x"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn missing_required_flag_exits_three() {
    let out = run(&["check", "--lhs", "x"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn normalize_prints_the_normal_form() {
    let out = run(&["normalize", "--lhs", "(\\x. x) (\\y. y)"]);
    assert_eq!(stdout(&out), "\\y. y\n");
    assert_eq!(code(&out), 0);
}

#[test]
fn normalize_evaluates_under_definitions() {
    let defs = suite_defs_file();
    let out = run(&[
        "normalize",
        "--defs",
        defs.path().to_str().unwrap(),
        "--lhs",
        "exp2 (S (S (S O)))",
    ]);
    assert_eq!(stdout(&out), "S (S (S (S (S (S (S (S O)))))))\n");
    assert_eq!(code(&out), 0);
}

#[test]
fn normalize_out_of_fuel_prints_unknown() {
    let out = run(&["normalize", "--lhs", "(\\x. x) (\\y. y)", "--fuel", "2"]);
    assert_eq!(stdout(&out), "unknown\n");
    assert_eq!(code(&out), 2);
}

#[test]
fn stats_file_holds_flat_counters() {
    let defs = suite_defs_file();
    let stats = NamedTempFile::new().unwrap();
    let out = run(&[
        "check",
        "--defs",
        defs.path().to_str().unwrap(),
        "--lhs",
        "plus O O",
        "--rhs",
        "O",
        "--stats",
        stats.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(stats.path()).unwrap();
    for key in ["transitions", "eval_transitions", "memo_hits", "cancellations"] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{key}: "))),
            "missing {key} in {text}"
        );
    }
}

#[test]
fn trace_lines_have_the_documented_shape() {
    let defs = suite_defs_file();
    let out = run(&[
        "check",
        "--defs",
        defs.path().to_str().unwrap(),
        "--lhs",
        "plus O O",
        "--rhs",
        "O",
        "--trace",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(*lines.last().unwrap(), "convertible");
    let trace: Vec<&str> = lines[..lines.len() - 1].to_vec();
    assert!(!trace.is_empty(), "no trace lines in {text}");
    for line in trace {
        let fields: Vec<&str> = line.split(' ').collect();
        assert_eq!(fields.len(), 5, "bad trace line {line:?}");
        for (field, prefix) in fields.iter().zip(["step=", "chan=", "const=", "side=", "rule="]) {
            assert!(field.starts_with(prefix), "bad trace line {line:?}");
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let defs = suite_defs_file();
    let path = defs.path().to_str().unwrap();
    let observe = || {
        let stats = NamedTempFile::new().unwrap();
        let out = run(&[
            "check",
            "--defs",
            path,
            "--lhs",
            "pair2 (exp2 (S (S O)))",
            "--rhs",
            "P (exp2 (S (S O))) False",
            "--stats",
            stats.path().to_str().unwrap(),
        ]);
        (stdout(&out), code(&out), std::fs::read_to_string(stats.path()).unwrap())
    };
    assert_eq!(observe(), observe());
}

#[test]
fn oracle_agreement_keeps_the_verdict_exit_code() {
    let defs = suite_defs_file();
    let out = run(&[
        "check",
        "--defs",
        defs.path().to_str().unwrap(),
        "--lhs",
        "plus (S O) O",
        "--rhs",
        "S O",
        "--oracle",
    ]);
    assert_eq!(stdout(&out), "convertible\n");
    assert_eq!(code(&out), 0);
}

#[test]
fn oracle_disagreement_exits_four() {
    // Extensionality is beyond the syntactic reference checker, so an
    // eta-convertible pair is a reproducible disagreement.
    let out = run(&["check", "--eta", "--oracle", "--lhs", "\\x. g x", "--rhs", "g"]);
    assert_eq!(stdout(&out), "convertible\n");
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("disagreement"));
}

#[test]
fn bench_prints_one_row_per_case() {
    let out = run(&["bench", "zero-exp2", "--sizes", "4,6"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    for (line, size) in lines.iter().zip(["4", "6"]) {
        assert!(line.starts_with(&format!("suite=zero-exp2 size={size} case=")));
        assert!(line.contains("config=frozen+share"));
        assert!(line.contains("verdict=convertible"));
        assert!(line.contains(" transitions="));
    }
}

#[test]
fn bench_accepts_size_ranges() {
    let out = run(&["bench", "even-odd", "--sizes", "3..5"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 3);
}

#[test]
fn bench_tags_rows_with_the_configuration() {
    let out = run(&["bench", "perfect", "--sizes", "4", "--no-share-conv"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("config=frozen+noshare"));
}

#[test]
fn bench_runs_both_pair_orders() {
    let out = run(&["bench", "pair-order", "--sizes", "6"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("case=value-first"));
    assert!(text.contains("case=flag-first"));
    assert!(text.lines().all(|l| l.contains("verdict=not-convertible")));
}

#[test]
fn bench_unknown_suite_exits_three() {
    let out = run(&["bench", "nope"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("unknown suite"));
}
