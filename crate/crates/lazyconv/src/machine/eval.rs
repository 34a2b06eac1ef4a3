//! Call-by-need evaluation to weak head normal form, plus readback of
//! values into normal-form terms.
//!
//! Environments map variables to channels, not to unevaluated terms: an
//! argument is turned into an inactive process once, and every occurrence
//! of the variable reads the same channel. Closures carry two extra
//! components, a fresh variable standing for the binder and a channel
//! evaluating the body under that variable, so a body is normalized or
//! compared at most once no matter how many times the closure is used.

use std::rc::Rc;

use crate::sched::ChannelId;
use crate::syntax::{Branch, Name, Term, TermNode};

use super::{Machine, MachineError, Payload, Side};

/// Argument stack: a persistent list of channels, first argument at the
/// front. Prepending and popping are O(1) and share the tail; appending
/// rebuilds only the left operand.
#[derive(Debug, Clone, Default)]
pub struct Stack(Option<Rc<StackNode>>);

#[derive(Debug)]
struct StackNode {
    head: ChannelId,
    len: u32,
    tail: Stack,
}

impl Stack {
    pub fn empty() -> Stack {
        Stack(None)
    }

    pub fn cons(head: ChannelId, tail: &Stack) -> Stack {
        Stack(Some(Rc::new(StackNode {
            head,
            len: tail.len() as u32 + 1,
            tail: tail.clone(),
        })))
    }

    pub fn from_args(args: impl DoubleEndedIterator<Item = ChannelId>) -> Stack {
        let mut s = Stack::empty();
        for ch in args.rev() {
            s = Stack::cons(ch, &s);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |n| n.len as usize)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn uncons(&self) -> Option<(ChannelId, Stack)> {
        self.0.as_ref().map(|n| (n.head, n.tail.clone()))
    }

    /// `self · other`: rebuilds the elements of `self` in front of `other`.
    pub fn concat(&self, other: &Stack) -> Stack {
        if other.is_empty() {
            return self.clone();
        }
        let elems: Vec<ChannelId> = self.iter().collect();
        let mut s = other.clone();
        for ch in elems.into_iter().rev() {
            s = Stack::cons(ch, &s);
        }
        s
    }

    /// `self · [ch]`.
    pub fn snoc(&self, ch: ChannelId) -> Stack {
        self.concat(&Stack::cons(ch, &Stack::empty()))
    }

    pub fn iter(&self) -> StackIter<'_> {
        StackIter(self)
    }
}

pub struct StackIter<'a>(&'a Stack);

impl Iterator for StackIter<'_> {
    type Item = ChannelId;

    fn next(&mut self) -> Option<ChannelId> {
        let node = self.0 .0.as_ref()?;
        self.0 = &node.tail;
        Some(node.head)
    }
}

/// Variable environment: a persistent association list of channels.
#[derive(Debug, Clone, Default)]
pub struct Env(Option<Rc<EnvNode>>);

#[derive(Debug)]
struct EnvNode {
    name: Name,
    chan: ChannelId,
    next: Env,
}

impl Env {
    pub fn empty() -> Env {
        Env(None)
    }

    pub fn bind(&self, name: Name, chan: ChannelId) -> Env {
        Env(Some(Rc::new(EnvNode {
            name,
            chan,
            next: self.clone(),
        })))
    }

    pub fn lookup(&self, x: &str) -> Option<ChannelId> {
        let mut at = self;
        while let Some(node) = at.0.as_ref() {
            if &*node.name == x {
                return Some(node.chan);
            }
            at = &node.next;
        }
        None
    }
}

/// Weak head normal forms.
#[derive(Debug, Clone)]
pub enum Value {
    Closure {
        binder: Name,
        body: Term,
        env: Env,
        /// Globally fresh stand-in for the binder.
        fresh_var: Name,
        /// Evaluates the body with the binder mapped to `fresh_var`.
        body_chan: ChannelId,
    },
    Neutral {
        head: Name,
        args: Stack,
    },
    ConstApp {
        name: Name,
        args: Stack,
        /// Evaluates the constant's definition applied to `args`.
        unfold: ChannelId,
    },
    /// A constant barred from unfolding; behaves like a free variable.
    Frozen {
        name: Name,
        args: Stack,
    },
    CtorVal {
        name: Name,
        args: Stack,
    },
    /// A match blocked on a non-constructor scrutinee (already finished
    /// on `scrutinee`). `match_term` keeps the branches, `env` their
    /// evaluation environment.
    StuckMatch {
        scrutinee: ChannelId,
        match_term: Term,
        env: Env,
    },
    /// A stuck match applied to arguments; `fun` is finished with the
    /// StuckMatch value.
    StuckApp {
        fun: ChannelId,
        args: Stack,
    },
}

/// A process operand: either a channel to read or an already known value.
#[derive(Debug, Clone)]
pub enum Operand {
    Recv(ChannelId),
    Val(Value),
}

/// Head of a spine being read back.
#[derive(Debug, Clone)]
pub enum SpineHead {
    Var(Name),
    Const(Name),
    Ctor(Name),
    /// The head itself is being read back on this channel.
    Chan(ChannelId),
}

#[derive(Debug, Clone)]
pub struct ReadArm {
    pub ctor: Name,
    pub binders: Vec<Name>,
    pub body: ChannelId,
}

#[derive(Debug)]
pub enum EvalExpr {
    Eval(Term, Env),
    Reduce(Term, Env, Stack),
    Apply(Operand, Stack),
    Case {
        scrutinee: Operand,
        match_term: Term,
        env: Env,
        stack: Stack,
    },
    Readback(Operand),
    ReadLam {
        binder: Name,
        body: ChannelId,
    },
    ReadSpine {
        head: SpineHead,
        parts: Vec<ChannelId>,
    },
    ReadMatch {
        scrutinee: ChannelId,
        arms: Vec<ReadArm>,
    },
    ReturnValue(Value),
}

impl Machine {
    pub(super) fn eval_step(
        &mut self,
        alpha: ChannelId,
        e: EvalExpr,
    ) -> Result<(), MachineError> {
        match e {
            EvalExpr::Eval(t, env) => {
                self.resume_requeue(alpha, EvalExpr::Reduce(t, env, Stack::empty()));
                Ok(())
            }
            EvalExpr::Reduce(t, env, s) => self.reduce(alpha, t, env, s),
            EvalExpr::Apply(op, s) => self.apply(alpha, op, s),
            EvalExpr::Case {
                scrutinee,
                match_term,
                env,
                stack,
            } => self.case_step(alpha, scrutinee, match_term, env, stack),
            EvalExpr::Readback(op) => self.readback_step(alpha, op),
            EvalExpr::ReadLam { binder, body } => self.read_lam_step(alpha, binder, body),
            EvalExpr::ReadSpine { head, parts } => self.read_spine_step(alpha, head, parts),
            EvalExpr::ReadMatch { scrutinee, arms } => {
                self.read_match_step(alpha, scrutinee, arms)
            }
            EvalExpr::ReturnValue(v) => {
                self.sched.finish(alpha, Payload::Val(v));
                Ok(())
            }
        }
    }

    /// Traverse the spine of applications, turning syntax into machine
    /// values. Argument and body processes start inactive: they run only
    /// once something reads their channel.
    fn reduce(
        &mut self,
        alpha: ChannelId,
        t: Term,
        env: Env,
        s: Stack,
    ) -> Result<(), MachineError> {
        match &*t {
            TermNode::App(f, a) => {
                let beta = self
                    .sched
                    .alloc(EvalExpr::Eval(a.clone(), env.clone()).into(), false, None);
                self.resume_requeue(
                    alpha,
                    EvalExpr::Reduce(f.clone(), env, Stack::cons(beta, &s)),
                );
                Ok(())
            }
            TermNode::Lam(x, body) => {
                let y = self.fresh_var(x);
                let neutral = self.sched.alloc_finished(Payload::Val(Value::Neutral {
                    head: y.clone(),
                    args: Stack::empty(),
                }));
                let body_env = env.bind(x.clone(), neutral);
                let body_chan = self
                    .sched
                    .alloc(EvalExpr::Eval(body.clone(), body_env).into(), false, None);
                let clo = Value::Closure {
                    binder: x.clone(),
                    body: body.clone(),
                    env,
                    fresh_var: y,
                    body_chan,
                };
                self.resume_requeue(alpha, EvalExpr::Apply(Operand::Val(clo), s));
                Ok(())
            }
            TermNode::Var(x) => {
                let next = match env.lookup(x) {
                    Some(beta) => EvalExpr::Apply(Operand::Recv(beta), s),
                    None => EvalExpr::Apply(
                        Operand::Val(Value::Neutral {
                            head: x.clone(),
                            args: Stack::empty(),
                        }),
                        s,
                    ),
                };
                self.resume_requeue(alpha, next);
                Ok(())
            }
            TermNode::Const(c) => {
                let k = self.global_chan(c)?;
                let v = Value::ConstApp {
                    name: c.clone(),
                    args: Stack::empty(),
                    unfold: k,
                };
                self.resume_requeue(alpha, EvalExpr::Apply(Operand::Val(v), s));
                Ok(())
            }
            TermNode::Ctor(c, args) => {
                let chans: Vec<ChannelId> = args
                    .iter()
                    .map(|a| {
                        self.sched
                            .alloc(EvalExpr::Eval(a.clone(), env.clone()).into(), false, None)
                    })
                    .collect();
                let v = Value::CtorVal {
                    name: c.clone(),
                    args: Stack::from_args(chans.into_iter()),
                };
                self.resume_requeue(alpha, EvalExpr::Apply(Operand::Val(v), s));
                Ok(())
            }
            TermNode::Match(scrut, _) => {
                let beta = self
                    .sched
                    .alloc(EvalExpr::Eval(scrut.clone(), env.clone()).into(), false, None);
                self.resume_requeue(
                    alpha,
                    EvalExpr::Case {
                        scrutinee: Operand::Recv(beta),
                        match_term: t.clone(),
                        env,
                        stack: s,
                    },
                );
                Ok(())
            }
        }
    }

    fn apply(&mut self, alpha: ChannelId, op: Operand, s: Stack) -> Result<(), MachineError> {
        let v = match op {
            Operand::Recv(beta) => match self.finished_value(beta)? {
                Some(v) => {
                    self.resume_requeue(alpha, EvalExpr::Apply(Operand::Val(v), s));
                    return Ok(());
                }
                None => {
                    self.resume_block(alpha, EvalExpr::Apply(Operand::Recv(beta), s));
                    self.sched.need(alpha, beta);
                    return Ok(());
                }
            },
            Operand::Val(v) => v,
        };
        if s.is_empty() {
            self.sched.finish(alpha, Payload::Val(v));
            return Ok(());
        }
        match v {
            Value::Closure { binder, body, env, .. } => {
                let (beta, rest) = s.uncons().expect("nonempty stack");
                self.resume_requeue(alpha, EvalExpr::Reduce(body, env.bind(binder, beta), rest));
                Ok(())
            }
            Value::Neutral { head, args } => {
                self.sched.finish(
                    alpha,
                    Payload::Val(Value::Neutral {
                        head,
                        args: args.concat(&s),
                    }),
                );
                Ok(())
            }
            Value::ConstApp { name, args, unfold } => {
                let gamma = self.sched.alloc(
                    EvalExpr::Apply(Operand::Recv(unfold), s.clone()).into(),
                    false,
                    None,
                );
                self.sched.finish(
                    alpha,
                    Payload::Val(Value::ConstApp {
                        name,
                        args: args.concat(&s),
                        unfold: gamma,
                    }),
                );
                Ok(())
            }
            Value::Frozen { name, args } => {
                self.sched.finish(
                    alpha,
                    Payload::Val(Value::Frozen {
                        name,
                        args: args.concat(&s),
                    }),
                );
                Ok(())
            }
            Value::CtorVal { name, .. } => Err(MachineError::CtorOverApplied(name)),
            sm @ Value::StuckMatch { .. } => {
                let fun = self.sched.alloc_finished(Payload::Val(sm));
                self.sched
                    .finish(alpha, Payload::Val(Value::StuckApp { fun, args: s }));
                Ok(())
            }
            Value::StuckApp { fun, args } => {
                self.sched.finish(
                    alpha,
                    Payload::Val(Value::StuckApp {
                        fun,
                        args: args.concat(&s),
                    }),
                );
                Ok(())
            }
        }
    }

    fn case_step(
        &mut self,
        alpha: ChannelId,
        scrutinee: Operand,
        match_term: Term,
        env: Env,
        stack: Stack,
    ) -> Result<(), MachineError> {
        let v = match scrutinee {
            Operand::Recv(beta) => match self.finished_value(beta)? {
                Some(v) => {
                    self.resume_requeue(
                        alpha,
                        EvalExpr::Case {
                            scrutinee: Operand::Val(v),
                            match_term,
                            env,
                            stack,
                        },
                    );
                    return Ok(());
                }
                None => {
                    self.resume_block(
                        alpha,
                        EvalExpr::Case {
                            scrutinee: Operand::Recv(beta),
                            match_term,
                            env,
                            stack,
                        },
                    );
                    self.sched.need(alpha, beta);
                    return Ok(());
                }
            },
            Operand::Val(v) => v,
        };
        match v {
            Value::CtorVal { name, args } => {
                let branch = find_branch(&match_term, &name)?.clone();
                debug_assert_eq!(branch.binders.len(), args.len());
                let mut env = env;
                for (x, chan) in branch.binders.iter().zip(args.iter()) {
                    env = env.bind(x.clone(), chan);
                }
                self.resume_requeue(alpha, EvalExpr::Reduce(branch.body, env, stack));
                Ok(())
            }
            Value::ConstApp { name, unfold, .. } => {
                self.record_unfold(alpha, &name, Side::Left, "match");
                self.resume_requeue(
                    alpha,
                    EvalExpr::Case {
                        scrutinee: Operand::Recv(unfold),
                        match_term,
                        env,
                        stack,
                    },
                );
                Ok(())
            }
            Value::Closure { .. } => Err(MachineError::MatchOnFunction),
            stuck @ (Value::Neutral { .. }
            | Value::Frozen { .. }
            | Value::StuckMatch { .. }
            | Value::StuckApp { .. }) => {
                let scrut = self.sched.alloc_finished(Payload::Val(stuck));
                let sm = Value::StuckMatch {
                    scrutinee: scrut,
                    match_term,
                    env,
                };
                if stack.is_empty() {
                    self.sched.finish(alpha, Payload::Val(sm));
                } else {
                    let fun = self.sched.alloc_finished(Payload::Val(sm));
                    self.sched
                        .finish(alpha, Payload::Val(Value::StuckApp { fun, args: stack }));
                }
                Ok(())
            }
        }
    }

    fn readback_step(&mut self, alpha: ChannelId, op: Operand) -> Result<(), MachineError> {
        let v = match op {
            Operand::Recv(beta) => match self.finished_value(beta)? {
                Some(v) => {
                    self.resume_requeue(alpha, EvalExpr::Readback(Operand::Val(v)));
                    return Ok(());
                }
                None => {
                    self.resume_block(alpha, EvalExpr::Readback(Operand::Recv(beta)));
                    self.sched.need(alpha, beta);
                    return Ok(());
                }
            },
            Operand::Val(v) => v,
        };
        match v {
            Value::Closure {
                fresh_var,
                body_chan,
                ..
            } => {
                let body = self.sched.alloc(
                    EvalExpr::Readback(Operand::Recv(body_chan)).into(),
                    true,
                    Some(alpha),
                );
                self.resume_block(
                    alpha,
                    EvalExpr::ReadLam {
                        binder: fresh_var,
                        body,
                    },
                );
                Ok(())
            }
            Value::Neutral { head, args } => self.read_spine(alpha, SpineHead::Var(head), &args),
            Value::ConstApp { name, unfold, .. } => {
                self.record_unfold(alpha, &name, Side::Left, "readback");
                self.resume_requeue(alpha, EvalExpr::Readback(Operand::Recv(unfold)));
                Ok(())
            }
            Value::Frozen { name, args } => {
                self.read_spine(alpha, SpineHead::Const(name), &args)
            }
            Value::CtorVal { name, args } => {
                self.read_spine(alpha, SpineHead::Ctor(name), &args)
            }
            Value::StuckMatch {
                scrutinee,
                match_term,
                env,
            } => {
                let scrut_rb = self.sched.alloc(
                    EvalExpr::Readback(Operand::Recv(scrutinee)).into(),
                    true,
                    Some(alpha),
                );
                let branches = match_branches(&match_term)?.to_vec();
                let mut arms = Vec::with_capacity(branches.len());
                for br in branches {
                    let mut benv = env.clone();
                    let mut binders = Vec::with_capacity(br.binders.len());
                    for x in &br.binders {
                        let (y, chan) = self.fresh_neutral(x);
                        benv = benv.bind(x.clone(), chan);
                        binders.push(y);
                    }
                    let body_eval = self
                        .sched
                        .alloc(EvalExpr::Eval(br.body.clone(), benv).into(), false, None);
                    let body = self.sched.alloc(
                        EvalExpr::Readback(Operand::Recv(body_eval)).into(),
                        true,
                        Some(alpha),
                    );
                    arms.push(ReadArm {
                        ctor: br.ctor.clone(),
                        binders,
                        body,
                    });
                }
                self.resume_block(
                    alpha,
                    EvalExpr::ReadMatch {
                        scrutinee: scrut_rb,
                        arms,
                    },
                );
                Ok(())
            }
            Value::StuckApp { fun, args } => {
                let head = self.sched.alloc(
                    EvalExpr::Readback(Operand::Recv(fun)).into(),
                    true,
                    Some(alpha),
                );
                self.read_spine(alpha, SpineHead::Chan(head), &args)
            }
        }
    }

    fn read_spine(
        &mut self,
        alpha: ChannelId,
        head: SpineHead,
        args: &Stack,
    ) -> Result<(), MachineError> {
        if args.is_empty() {
            if let Some(t) = spine_head_term(&head) {
                self.sched.finish(alpha, Payload::Nf(t));
                return Ok(());
            }
        }
        let parts: Vec<ChannelId> = args
            .iter()
            .map(|b| {
                self.sched.alloc(
                    EvalExpr::Readback(Operand::Recv(b)).into(),
                    true,
                    Some(alpha),
                )
            })
            .collect();
        self.resume_block(alpha, EvalExpr::ReadSpine { head, parts });
        Ok(())
    }

    fn read_lam_step(
        &mut self,
        alpha: ChannelId,
        binder: Name,
        body: ChannelId,
    ) -> Result<(), MachineError> {
        match self.finished_nf(body)? {
            Some(nf) => {
                self.sched
                    .finish(alpha, Payload::Nf(Rc::new(TermNode::Lam(binder, nf))));
            }
            None => {
                self.resume_block(alpha, EvalExpr::ReadLam { binder, body });
                self.sched.need(alpha, body);
            }
        }
        Ok(())
    }

    fn read_spine_step(
        &mut self,
        alpha: ChannelId,
        head: SpineHead,
        parts: Vec<ChannelId>,
    ) -> Result<(), MachineError> {
        let mut nfs = Vec::with_capacity(parts.len());
        let mut pending = Vec::new();
        if let SpineHead::Chan(c) = head {
            if self.finished_nf(c)?.is_none() {
                pending.push(c);
            }
        }
        for &p in &parts {
            match self.finished_nf(p)? {
                Some(nf) => nfs.push(nf),
                None => pending.push(p),
            }
        }
        if !pending.is_empty() {
            self.resume_block(alpha, EvalExpr::ReadSpine { head, parts });
            for p in pending {
                self.sched.need(alpha, p);
            }
            return Ok(());
        }
        let term = match head {
            SpineHead::Ctor(c) => Rc::new(TermNode::Ctor(c, nfs)),
            SpineHead::Var(_) | SpineHead::Const(_) | SpineHead::Chan(_) => {
                let base = match head {
                    SpineHead::Var(x) => Rc::new(TermNode::Var(x)),
                    SpineHead::Const(c) => Rc::new(TermNode::Const(c)),
                    SpineHead::Chan(c) => self.finished_nf(c)?.expect("checked above"),
                    SpineHead::Ctor(_) => unreachable!(),
                };
                nfs.into_iter()
                    .fold(base, |f, a| Rc::new(TermNode::App(f, a)))
            }
        };
        self.sched.finish(alpha, Payload::Nf(term));
        Ok(())
    }

    fn read_match_step(
        &mut self,
        alpha: ChannelId,
        scrutinee: ChannelId,
        arms: Vec<ReadArm>,
    ) -> Result<(), MachineError> {
        let mut pending = Vec::new();
        if self.finished_nf(scrutinee)?.is_none() {
            pending.push(scrutinee);
        }
        for arm in &arms {
            if self.finished_nf(arm.body)?.is_none() {
                pending.push(arm.body);
            }
        }
        if !pending.is_empty() {
            self.resume_block(alpha, EvalExpr::ReadMatch { scrutinee, arms });
            for p in pending {
                self.sched.need(alpha, p);
            }
            return Ok(());
        }
        let scrut_nf = self.finished_nf(scrutinee)?.expect("checked above");
        let mut branches = Vec::with_capacity(arms.len());
        for arm in arms {
            branches.push(Branch {
                ctor: arm.ctor,
                binders: arm.binders,
                body: self.finished_nf(arm.body)?.expect("checked above"),
            });
        }
        self.sched
            .finish(alpha, Payload::Nf(Rc::new(TermNode::Match(scrut_nf, branches))));
        Ok(())
    }

    pub(super) fn fresh_neutral(&mut self, base: &str) -> (Name, ChannelId) {
        let y = self.fresh_var(base);
        let chan = self.sched.alloc_finished(Payload::Val(Value::Neutral {
            head: y.clone(),
            args: Stack::empty(),
        }));
        (y, chan)
    }
}

fn spine_head_term(head: &SpineHead) -> Option<Term> {
    match head {
        SpineHead::Var(x) => Some(Rc::new(TermNode::Var(x.clone()))),
        SpineHead::Const(c) => Some(Rc::new(TermNode::Const(c.clone()))),
        SpineHead::Ctor(c) => Some(Rc::new(TermNode::Ctor(c.clone(), Vec::new()))),
        SpineHead::Chan(_) => None,
    }
}

pub(super) fn match_branches(match_term: &Term) -> Result<&[Branch], MachineError> {
    match &**match_term {
        TermNode::Match(_, branches) => Ok(branches),
        _ => Err(MachineError::Internal(
            "stuck match does not hold a match term".into(),
        )),
    }
}

fn find_branch<'a>(match_term: &'a Term, ctor: &Name) -> Result<&'a Branch, MachineError> {
    match_branches(match_term)?
        .iter()
        .find(|b| b.ctor == *ctor)
        .ok_or_else(|| MachineError::NoBranch(ctor.clone()))
}
