//! The concurrent convertibility machine.
//!
//! A [`Machine`] owns a scheduler full of processes that either evaluate
//! terms to weak head normal form or compare values structurally. The two
//! families communicate only through write-once channels, so evaluation
//! work triggered by one comparison is shared with every other comparison
//! that reads the same channel. Comparisons race constant unfoldings
//! against structural checks and cancel whichever side loses.

mod conv;
mod eval;

pub use conv::{ConvExpr, Renaming};
pub use eval::{Env, EvalExpr, Operand, ReadArm, SpineHead, Stack, Value};

use std::collections::HashMap;
use std::error::Error;
use std::fmt;
use std::rc::Rc;

use crate::sched::{ChannelId, Sched, SchedCounters, STAR};
use crate::syntax::{binder_base, preshare, GeneralizedProblem, GlobalDefs, Name, Term};

#[derive(Debug, Clone)]
pub struct Options {
    /// Freeze the constant on the non-authoritative side of an unfolding
    /// race, so each race unfolds a given constant at most once.
    pub frozen: bool,
    /// Share comparison processes keyed by their channel pair, so the
    /// same sub-comparison is never run twice.
    pub conv_sharing: bool,
    /// Let-bind repeated closed subterms of the two sides before starting,
    /// so identical source subterms evaluate on one shared channel.
    pub presharing: bool,
    /// Compare functions against neutral values by applying the neutral
    /// side to a fresh variable.
    pub eta: bool,
    /// Re-check the full scheduler invariants after every transition.
    pub paranoid: bool,
    /// Record one event per constant-unfolding decision.
    pub trace: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            frozen: true,
            conv_sharing: true,
            presharing: false,
            eta: false,
            paranoid: false,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Convertible,
    NotConvertible,
    Unknown(StopReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Fuel,
    Deadlock,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Convertible => write!(f, "convertible"),
            Verdict::NotConvertible => write!(f, "not convertible"),
            Verdict::Unknown(StopReason::Fuel) => write!(f, "unknown (fuel)"),
            Verdict::Unknown(StopReason::Deadlock) => write!(f, "unknown (deadlock)"),
        }
    }
}

#[derive(Debug)]
pub enum MachineError {
    /// A saturated constructor value was applied to further arguments.
    CtorOverApplied(Name),
    /// A match scrutinee evaluated to a function.
    MatchOnFunction,
    /// A match scrutinee produced a constructor with no branch.
    NoBranch(Name),
    /// Broken internal plumbing, e.g. a channel carrying the wrong kind
    /// of payload for its reader.
    Internal(String),
}

impl fmt::Display for MachineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MachineError::CtorOverApplied(c) => {
                write!(f, "constructor {c} applied to too many arguments")
            }
            MachineError::MatchOnFunction => write!(f, "match on a function value"),
            MachineError::NoBranch(c) => write!(f, "no branch for constructor {c}"),
            MachineError::Internal(msg) => write!(f, "internal machine error: {msg}"),
        }
    }
}

impl Error for MachineError {}

/// What a finished channel carries: evaluators send values, comparison
/// processes send Booleans, readback processes send normal-form terms.
#[derive(Debug, Clone)]
pub enum Payload {
    Val(Value),
    Bool(bool),
    Nf(Term),
}

#[derive(Debug)]
pub enum ProcExpr {
    Eval(EvalExpr),
    Conv(ConvExpr),
    /// Placeholder left while a body is being stepped, and used to
    /// pre-allocate a channel whose body needs the channel's own id.
    Taken,
}

impl From<EvalExpr> for ProcExpr {
    fn from(e: EvalExpr) -> Self {
        ProcExpr::Eval(e)
    }
}

impl From<ConvExpr> for ProcExpr {
    fn from(c: ConvExpr) -> Self {
        ProcExpr::Conv(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => write!(f, "L"),
            Side::Right => write!(f, "R"),
        }
    }
}

/// One constant-unfolding decision, recorded when tracing is on.
#[derive(Debug, Clone)]
pub struct TraceEvent {
    pub step: u64,
    pub chan: ChannelId,
    pub constant: Name,
    pub side: Side,
    pub rule: &'static str,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step={} chan={} const={} side={} rule={}",
            self.step, self.chan, self.constant, self.side, self.rule
        )
    }
}

#[derive(Debug, Default, Clone)]
pub struct Stats {
    /// Fired transitions, each consuming one unit of fuel.
    pub transitions: u64,
    /// Transitions taken by evaluation and readback processes.
    pub eval_transitions: u64,
    /// Channels that performed at least one evaluation transition.
    pub evaluated_channels: u64,
    pub processes_created: u64,
    pub conv_processes: u64,
    pub memo_hits: u64,
    pub peak_queue: u64,
    pub sched: SchedCounters,
}

impl Stats {
    /// Flat `key: value` lines, one per counter.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: u64| out.push_str(&format!("{k}: {v}\n"));
        line("transitions", self.transitions);
        line("eval_transitions", self.eval_transitions);
        line("evaluated_channels", self.evaluated_channels);
        line("processes_created", self.processes_created);
        line("conv_processes", self.conv_processes);
        line("memo_hits", self.memo_hits);
        line("peak_queue", self.peak_queue);
        line("needs", self.sched.needs);
        line("unneeds", self.sched.unneeds);
        line("finishes", self.sched.finishes);
        line("enqueues", self.sched.enqueues);
        line("cancellations", self.sched.cancellations);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    RootFinished,
    OutOfFuel,
    Deadlock,
}

pub struct Machine {
    pub(crate) sched: Sched<ProcExpr, Payload>,
    defs: Rc<GlobalDefs>,
    opts: Options,
    /// One inactive evaluation process per defined constant; every
    /// occurrence of the constant shares this channel's unfolding.
    globals: HashMap<Name, ChannelId>,
    memo: HashMap<(ChannelId, ChannelId, Renaming), ChannelId>,
    fresh: u64,
    root: Option<ChannelId>,
    transitions: u64,
    eval_transitions: u64,
    conv_processes: u64,
    memo_hits: u64,
    eval_steps: Vec<u32>,
    pub trace: Vec<TraceEvent>,
}

impl Machine {
    pub fn new(defs: Rc<GlobalDefs>, opts: Options) -> Machine {
        let mut m = Machine {
            sched: Sched::new(),
            defs,
            opts,
            globals: HashMap::new(),
            memo: HashMap::new(),
            fresh: 0,
            root: None,
            transitions: 0,
            eval_transitions: 0,
            conv_processes: 0,
            memo_hits: 0,
            eval_steps: Vec::new(),
            trace: Vec::new(),
        };
        m.init_globals();
        m
    }

    fn init_globals(&mut self) {
        let defs = self.defs.clone();
        for (name, body) in &defs.const_defs {
            let k = self.sched.alloc(
                EvalExpr::Eval(body.clone(), Env::empty()).into(),
                false,
                None,
            );
            self.globals.insert(name.clone(), k);
        }
    }

    /// Set up the comparison of a generalized problem: one inactive
    /// evaluation channel per binding (each sees the previous binders),
    /// both sides evaluated under the full binder environment, and a root
    /// comparison that is permanently needed.
    pub fn start_conv(&mut self, problem: &GeneralizedProblem) {
        let mut env = Env::empty();
        for (x, t) in &problem.bindings {
            let g = self
                .sched
                .alloc(EvalExpr::Eval(t.clone(), env.clone()).into(), false, None);
            env = env.bind(x.clone(), g);
        }
        let root = self.sched.alloc(ProcExpr::Taken, true, Some(STAR));
        let lhs = self.sched.alloc(
            EvalExpr::Eval(problem.lhs.clone(), env.clone()).into(),
            true,
            Some(root),
        );
        let rhs = self.sched.alloc(
            EvalExpr::Eval(problem.rhs.clone(), env).into(),
            true,
            Some(root),
        );
        let xi = Renaming::empty();
        self.sched
            .resume(root, ConvExpr::Conv(lhs, rhs, xi.clone()).into());
        self.conv_processes += 1;
        if self.opts.conv_sharing {
            self.memo.insert((lhs, rhs, xi), root);
        }
        self.root = Some(root);
    }

    /// Set up normalization: evaluate the term, then read the value back
    /// into a normal-form term.
    pub fn start_normalize(&mut self, t: &Term) {
        let root = self.sched.alloc(ProcExpr::Taken, true, Some(STAR));
        let beta = self
            .sched
            .alloc(EvalExpr::Eval(t.clone(), Env::empty()).into(), true, Some(root));
        self.sched
            .resume(root, EvalExpr::Readback(Operand::Recv(beta)).into());
        self.root = Some(root);
    }

    /// Pop and step processes until the root finishes, the fuel runs out,
    /// or no process is runnable.
    pub fn drive(&mut self, fuel: u64) -> Result<Outcome, MachineError> {
        let root = self.root.expect("machine not started");
        for _ in 0..fuel {
            if !self.sched.is_running(root) {
                return Ok(Outcome::RootFinished);
            }
            let Some(alpha) = self.sched.pop_head() else {
                return Ok(Outcome::Deadlock);
            };
            self.step_channel(alpha)?;
            if self.opts.paranoid {
                self.sched.check_invariants();
            }
        }
        if self.sched.is_running(root) {
            Ok(Outcome::OutOfFuel)
        } else {
            Ok(Outcome::RootFinished)
        }
    }

    fn step_channel(&mut self, alpha: ChannelId) -> Result<(), MachineError> {
        self.transitions += 1;
        match self.sched.take_body(alpha, ProcExpr::Taken) {
            ProcExpr::Eval(e) => {
                self.count_eval(alpha);
                self.eval_step(alpha, e)
            }
            ProcExpr::Conv(c) => self.conv_step(alpha, c),
            ProcExpr::Taken => Err(MachineError::Internal(format!(
                "channel {alpha} stepped while holding a placeholder"
            ))),
        }
    }

    fn count_eval(&mut self, alpha: ChannelId) {
        let i = alpha.index();
        if i >= self.eval_steps.len() {
            self.eval_steps.resize(i + 1, 0);
        }
        self.eval_steps[i] += 1;
        self.eval_transitions += 1;
    }

    /// Evaluation transitions performed by one channel.
    pub fn eval_steps_of(&self, chan: ChannelId) -> u64 {
        self.eval_steps.get(chan.index()).copied().unwrap_or(0) as u64
    }

    pub fn root(&self) -> Option<ChannelId> {
        self.root
    }

    /// The root's Boolean verdict, if it finished.
    pub fn root_bool(&self) -> Option<bool> {
        match self.sched.value(self.root?) {
            Some(Payload::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    /// The root's normal form, if it finished.
    pub fn normal_form(&self) -> Option<Term> {
        match self.sched.value(self.root?) {
            Some(Payload::Nf(t)) => Some(t.clone()),
            _ => None,
        }
    }

    pub fn stats(&self) -> Stats {
        Stats {
            transitions: self.transitions,
            eval_transitions: self.eval_transitions,
            evaluated_channels: self.eval_steps.iter().filter(|&&n| n > 0).count() as u64,
            processes_created: self.sched.counters.allocs,
            conv_processes: self.conv_processes,
            memo_hits: self.memo_hits,
            peak_queue: self.sched.counters.peak_queue,
            sched: self.sched.counters,
        }
    }

    /// Scheduler access for instrumentation and embedding.
    pub fn sched(&self) -> &Sched<ProcExpr, Payload> {
        &self.sched
    }

    /// Allocate a process directly. This is the embedding interface used
    /// to wire custom process networks (e.g. connector inputs in tests).
    pub fn alloc_process(
        &mut self,
        expr: ProcExpr,
        active: bool,
        needed_by: Option<ChannelId>,
    ) -> ChannelId {
        self.sched.alloc(expr, active, needed_by)
    }

    pub fn set_root(&mut self, chan: ChannelId) {
        self.root = Some(chan);
    }

    /// Fresh variable name, unreadable by the parser (so it can never
    /// clash with a user name) but remembering the binder it stands for.
    pub(crate) fn fresh_var(&mut self, base: &str) -> Name {
        let n = self.fresh;
        self.fresh += 1;
        Rc::from(format!("#{}/{n}", binder_base(base)).as_str())
    }

    pub(crate) fn resume_requeue(&mut self, alpha: ChannelId, e: impl Into<ProcExpr>) {
        self.sched.resume(alpha, e.into());
        self.sched.requeue(alpha);
    }

    /// Store the next body without re-queueing: the process sleeps until
    /// one of the channels holding a waiter edge to it finishes.
    pub(crate) fn resume_block(&mut self, alpha: ChannelId, e: impl Into<ProcExpr>) {
        self.sched.resume(alpha, e.into());
    }

    pub(crate) fn finished_value(
        &self,
        chan: ChannelId,
    ) -> Result<Option<Value>, MachineError> {
        match self.sched.value(chan) {
            None => Ok(None),
            Some(Payload::Val(v)) => Ok(Some(v.clone())),
            Some(_) => Err(MachineError::Internal(format!(
                "channel {chan} does not hold a value payload"
            ))),
        }
    }

    pub(crate) fn finished_bool(&self, chan: ChannelId) -> Result<Option<bool>, MachineError> {
        match self.sched.value(chan) {
            None => Ok(None),
            Some(Payload::Bool(b)) => Ok(Some(*b)),
            Some(_) => Err(MachineError::Internal(format!(
                "channel {chan} does not hold a Boolean payload"
            ))),
        }
    }

    pub(crate) fn finished_nf(&self, chan: ChannelId) -> Result<Option<Term>, MachineError> {
        match self.sched.value(chan) {
            None => Ok(None),
            Some(Payload::Nf(t)) => Ok(Some(t.clone())),
            Some(_) => Err(MachineError::Internal(format!(
                "channel {chan} does not hold a normal-form payload"
            ))),
        }
    }

    pub(crate) fn global_chan(&self, c: &Name) -> Result<ChannelId, MachineError> {
        self.globals.get(c).copied().ok_or_else(|| {
            MachineError::Internal(format!("constant {c} has no definition channel"))
        })
    }

    pub(crate) fn record_unfold(
        &mut self,
        chan: ChannelId,
        constant: &Name,
        side: Side,
        rule: &'static str,
    ) {
        if self.opts.trace {
            self.trace.push(TraceEvent {
                step: self.transitions,
                chan,
                constant: constant.clone(),
                side,
                rule,
            });
        }
    }

    pub(crate) fn opts(&self) -> &Options {
        &self.opts
    }
}

/// Decide convertibility of two closed terms.
pub fn check_convertible(
    defs: &Rc<GlobalDefs>,
    lhs: &Term,
    rhs: &Term,
    opts: &Options,
    fuel: u64,
) -> Result<(Verdict, Stats), MachineError> {
    let problem = if opts.presharing {
        preshare(lhs, rhs)
    } else {
        GeneralizedProblem::plain(lhs.clone(), rhs.clone())
    };
    let mut m = Machine::new(defs.clone(), opts.clone());
    m.start_conv(&problem);
    let verdict = match m.drive(fuel)? {
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
    Ok((verdict, m.stats()))
}

/// Normalize a closed term; `None` means the fuel ran out (or no process
/// was runnable) before a normal form was read back.
pub fn normalize(
    defs: &Rc<GlobalDefs>,
    t: &Term,
    fuel: u64,
) -> Result<(Option<Term>, Stats), MachineError> {
    let mut m = Machine::new(defs.clone(), Options::default());
    m.start_normalize(t);
    let nf = match m.drive(fuel)? {
        Outcome::RootFinished => Some(m.normal_form().expect("finished root carries a term")),
        Outcome::OutOfFuel | Outcome::Deadlock => None,
    };
    Ok((nf, m.stats()))
}

#[cfg(test)]
mod tests;
