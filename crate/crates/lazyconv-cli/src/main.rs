//! Command-line front end: `check` decides convertibility of a term pair,
//! `normalize` evaluates one term, `bench` runs a benchmark family across
//! sizes. Exit codes are scriptable: 0 convertible / normalized, 1 not
//! convertible, 2 undecided (fuel or deadlock), 3 input or runtime errors,
//! 4 oracle disagreement.

use std::fs;
use std::path::PathBuf;
use std::process::exit;
use std::rc::Rc;

use clap::{Args, Parser, Subcommand};
use lazyconv::machine::{self, Machine, Options, Outcome, Stats, StopReason, Verdict};
use lazyconv::oracle::{oracle_convertible, OracleResult};
use lazyconv::suites;
use lazyconv::syntax::{
    parse_defs, parse_term, preshare, print_term, tidy_binders, GeneralizedProblem, GlobalDefs,
    Term,
};

#[derive(Parser)]
#[command(name = "lazyconv", version, about = "Lazy concurrent convertibility checker")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether two terms are convertible
    Check(CheckArgs),
    /// Evaluate one term to its normal form
    Normalize(NormalizeArgs),
    /// Run one benchmark family at a list of sizes
    Bench(BenchArgs),
}

#[derive(Args)]
struct EngineOpts {
    /// Transition budget for the run
    #[arg(long, value_name = "N", default_value_t = 10_000_000)]
    fuel: u64,
    /// Drop the folded original when unfolding a constant
    #[arg(long)]
    no_frozen: bool,
    /// Do not share comparison processes between identical subproblems
    #[arg(long)]
    no_share_conv: bool,
    /// Bind common closed subterms of the two sides before starting
    #[arg(long)]
    preshare: bool,
    /// Treat functions and non-function values extensionally
    #[arg(long)]
    eta: bool,
}

impl EngineOpts {
    fn options(&self) -> Options {
        Options {
            frozen: !self.no_frozen,
            conv_sharing: !self.no_share_conv,
            presharing: self.preshare,
            eta: self.eta,
            ..Options::default()
        }
    }

    fn config_tag(&self) -> String {
        let mut parts = vec![
            if self.no_frozen { "nofrozen" } else { "frozen" },
            if self.no_share_conv { "noshare" } else { "share" },
        ];
        if self.preshare {
            parts.push("preshare");
        }
        if self.eta {
            parts.push("eta");
        }
        parts.join("+")
    }
}

#[derive(Args)]
struct CheckArgs {
    /// Definitions file (data declarations and constants)
    #[arg(long, value_name = "PATH")]
    defs: Option<PathBuf>,
    /// Left-hand term
    #[arg(long, value_name = "TEXT")]
    lhs: String,
    /// Right-hand term
    #[arg(long, value_name = "TEXT")]
    rhs: String,
    #[command(flatten)]
    engine: EngineOpts,
    /// Write the run's counters to PATH as "key: value" lines
    #[arg(long, value_name = "PATH")]
    stats: Option<PathBuf>,
    /// Print one line per constant-unfolding decision
    #[arg(long)]
    trace: bool,
    /// Cross-check the verdict against the reference checker
    #[arg(long)]
    oracle: bool,
    /// Contraction budget for the reference checker
    #[arg(long, value_name = "N", requires = "oracle")]
    oracle_fuel: Option<u64>,
}

#[derive(Args)]
struct NormalizeArgs {
    /// Definitions file (data declarations and constants)
    #[arg(long, value_name = "PATH")]
    defs: Option<PathBuf>,
    /// Term to normalize
    #[arg(long, value_name = "TEXT")]
    lhs: String,
    /// Transition budget for the run
    #[arg(long, value_name = "N", default_value_t = 10_000_000)]
    fuel: u64,
    /// Write the run's counters to PATH as "key: value" lines
    #[arg(long, value_name = "PATH")]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Family name: exp2-eq, zero-exp2, ldepth, perfect, pair-order,
    /// pair-defs, even-odd, or f4-chain
    suite: String,
    /// Sizes to run: a comma list "10,20,40" or an inclusive range "8..13"
    #[arg(long, value_name = "LIST")]
    sizes: Option<String>,
    #[command(flatten)]
    engine: EngineOpts,
}

/// Errors that should reach the user as `error: ...` with exit code 3.
type CmdError = String;

fn main() {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            eprintln!("{e}");
            exit(3);
        }
    };
    let result = match cli.cmd {
        Cmd::Check(args) => cmd_check(args),
        Cmd::Normalize(args) => cmd_normalize(args),
        Cmd::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => exit(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            exit(3);
        }
    }
}

fn load_defs(path: &Option<PathBuf>) -> Result<Rc<GlobalDefs>, CmdError> {
    let Some(path) = path else {
        return Ok(Rc::new(GlobalDefs::default()));
    };
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let defs = parse_defs(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(Rc::new(defs))
}

fn load_term(defs: &GlobalDefs, which: &str, text: &str) -> Result<Term, CmdError> {
    parse_term(text, defs).map_err(|e| format!("{which}: {e}"))
}

fn check_fuel(fuel: u64) -> Result<(), CmdError> {
    if fuel == 0 {
        return Err("fuel must be positive".into());
    }
    Ok(())
}

fn write_stats(path: &Option<PathBuf>, stats: &Stats) -> Result<(), CmdError> {
    if let Some(path) = path {
        fs::write(path, stats.render()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Result<i32, CmdError> {
    check_fuel(args.engine.fuel)?;
    let defs = load_defs(&args.defs)?;
    let lhs = load_term(&defs, "lhs", &args.lhs)?;
    let rhs = load_term(&defs, "rhs", &args.rhs)?;

    let mut opts = args.engine.options();
    opts.trace = args.trace;
    let problem = if opts.presharing {
        preshare(&lhs, &rhs)
    } else {
        GeneralizedProblem::plain(lhs.clone(), rhs.clone())
    };
    let mut m = Machine::new(defs.clone(), opts);
    m.start_conv(&problem);
    let outcome = m.drive(args.engine.fuel).map_err(|e| e.to_string())?;
    let verdict = match outcome {
        Outcome::RootFinished => {
            if m.root_bool().expect("finished root carries a Boolean") {
                Verdict::Convertible
            } else {
                Verdict::NotConvertible
            }
        }
        Outcome::OutOfFuel => Verdict::Unknown(StopReason::Fuel),
        Outcome::Deadlock => Verdict::Unknown(StopReason::Deadlock),
    };

    for ev in &m.trace {
        println!("{ev}");
    }
    println!("{verdict}");
    write_stats(&args.stats, &m.stats())?;

    if args.oracle {
        let oracle_fuel = args.oracle_fuel.unwrap_or(100_000);
        let oracle_says = oracle_convertible(&defs, &lhs, &rhs, oracle_fuel);
        let contradiction = matches!(
            (&verdict, &oracle_says),
            (Verdict::Convertible, OracleResult::Decided(false))
                | (Verdict::NotConvertible, OracleResult::Decided(true))
        );
        if contradiction {
            let said = match oracle_says {
                OracleResult::Decided(true) => "convertible",
                _ => "not convertible",
            };
            eprintln!("oracle disagreement: checker says \"{verdict}\", oracle says \"{said}\"");
            return Ok(4);
        }
    }

    Ok(match verdict {
        Verdict::Convertible => 0,
        Verdict::NotConvertible => 1,
        Verdict::Unknown(_) => 2,
    })
}

fn cmd_normalize(args: NormalizeArgs) -> Result<i32, CmdError> {
    check_fuel(args.fuel)?;
    let defs = load_defs(&args.defs)?;
    let term = load_term(&defs, "term", &args.lhs)?;
    let (nf, stats) = machine::normalize(&defs, &term, args.fuel).map_err(|e| e.to_string())?;
    write_stats(&args.stats, &stats)?;
    match nf {
        Some(t) => {
            println!("{}", print_term(&tidy_binders(&t)));
            Ok(0)
        }
        None => {
            println!("unknown");
            Ok(2)
        }
    }
}

/// Sizes a family runs at when `--sizes` is not given.
fn default_sizes(suite: &str) -> &'static [u64] {
    match suite {
        "exp2-eq" => &[6, 10, 14],
        "zero-exp2" => &[10, 20, 40],
        "ldepth" => &[6, 9, 12],
        "perfect" => &[8, 9, 10, 11, 12, 13],
        "pair-order" => &[12, 16],
        "pair-defs" => &[8, 12],
        "even-odd" => &[50, 100],
        "f4-chain" => &[10, 20, 30],
        _ => &[],
    }
}

fn parse_sizes(text: &str) -> Result<Vec<u64>, CmdError> {
    let bad = |_| format!("bad size list {text:?}");
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(bad)?;
        let hi: u64 = hi.trim().parse().map_err(bad)?;
        if lo > hi {
            return Err(format!("empty size range {text:?}"));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',').map(|p| p.trim().parse().map_err(bad)).collect()
}

fn verdict_token(v: &Verdict) -> &'static str {
    match v {
        Verdict::Convertible => "convertible",
        Verdict::NotConvertible => "not-convertible",
        Verdict::Unknown(StopReason::Fuel) => "unknown-fuel",
        Verdict::Unknown(StopReason::Deadlock) => "unknown-deadlock",
    }
}

fn cmd_bench(args: BenchArgs) -> Result<i32, CmdError> {
    check_fuel(args.engine.fuel)?;
    if !suites::SUITE_NAMES.contains(&args.suite.as_str()) {
        return Err(format!(
            "unknown suite {:?}; expected one of {}",
            args.suite,
            suites::SUITE_NAMES.join(", ")
        ));
    }
    let sizes = match &args.sizes {
        Some(text) => parse_sizes(text)?,
        None => default_sizes(&args.suite).to_vec(),
    };
    let defs = suites::suite_defs();
    let opts = args.engine.options();
    let config = args.engine.config_tag();
    for n in sizes {
        let cases = suites::suite_cases(&args.suite, n).expect("name checked above");
        for case in cases {
            let (verdict, stats) =
                machine::check_convertible(&defs, &case.lhs, &case.rhs, &opts, args.engine.fuel)
                    .map_err(|e| e.to_string())?;
            println!(
                "suite={} size={} case={} config={} verdict={} transitions={} \
                 eval_transitions={} evaluated_channels={} processes_created={} \
                 conv_processes={} memo_hits={} peak_queue={} needs={} unneeds={} \
                 finishes={} enqueues={} cancellations={}",
                args.suite,
                n,
                case.label,
                config,
                verdict_token(&verdict),
                stats.transitions,
                stats.eval_transitions,
                stats.evaluated_channels,
                stats.processes_created,
                stats.conv_processes,
                stats.memo_hits,
                stats.peak_queue,
                stats.sched.needs,
                stats.sched.unneeds,
                stats.sched.finishes,
                stats.sched.enqueues,
                stats.sched.cancellations,
            );
        }
    }
    Ok(0)
}
