//! Comparison processes and Boolean connectors.
//!
//! A comparison obtains the weak head normal forms of its two sides, then
//! either decides immediately, recurses structurally, or spawns parallel
//! sub-comparisons joined by a connector. Defined constants race their
//! argument comparison against their unfolding; the first side to answer
//! wins and the loser is cancelled through `unneed`. When freezing is on,
//! each race unfolds its constant in only one branch: the other branch
//! freezes it, and a frozen branch's failure is never authoritative, so
//! it feeds the biased position of the combiner.

use std::rc::Rc;

use crate::sched::ChannelId;
use crate::syntax::Name;

use super::eval::match_branches;
use super::{Env, EvalExpr, Machine, MachineError, Operand, Payload, Side, Stack, Term, Value};

/// Pairs of variables considered equal, most recent pair last. Every name
/// in the list is a machine-generated fresh variable, so a name appears
/// in at most one pair per side.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Renaming(Rc<Vec<(Name, Name)>>);

impl Renaming {
    pub fn empty() -> Renaming {
        Renaming(Rc::new(Vec::new()))
    }

    pub fn push(&self, left: Name, right: Name) -> Renaming {
        debug_assert!(
            self.0.iter().all(|(l, r)| *l != left && *r != right),
            "fresh variable reused in a renaming"
        );
        let mut v = (*self.0).clone();
        v.push((left, right));
        Renaming(Rc::new(v))
    }

    /// The most recent pair mentioning either name decides equality;
    /// names absent from the list are equal only to themselves.
    pub fn heads_equal(&self, x: &str, x2: &str) -> bool {
        for (l, r) in self.0.iter().rev() {
            if &**l == x || &**r == x2 {
                return &**l == x && &**r == x2;
            }
        }
        x == x2
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug)]
pub enum ConvExpr {
    /// Compare the values produced by two channels.
    Conv(ChannelId, ChannelId, Renaming),
    /// Compare two sides, each either a pending channel or a value.
    ConvV(Operand, Operand, Renaming),
    /// Compare two argument stacks pairwise.
    ConvStack(Stack, Stack, Renaming),
    And(ChannelId, ChannelId),
    /// n-ary conjunction, used when comparing stuck matches.
    AndN(Vec<ChannelId>),
    /// Both inputs are assumed to agree; returns whichever answers first.
    Choice(ChannelId, ChannelId),
    /// The left input may spuriously fail: its success decides, its
    /// failure defers to the right input.
    BiasedChoice(ChannelId, ChannelId),
    Or(ChannelId, ChannelId),
    Forward(ChannelId),
    Lit(bool),
}

impl Machine {
    pub(super) fn conv_step(
        &mut self,
        alpha: ChannelId,
        c: ConvExpr,
    ) -> Result<(), MachineError> {
        match c {
            ConvExpr::Conv(b, b2, xi) => {
                if b == b2 {
                    self.sched.finish(alpha, Payload::Bool(true));
                } else {
                    self.resume_requeue(
                        alpha,
                        ConvExpr::ConvV(Operand::Recv(b), Operand::Recv(b2), xi),
                    );
                }
                Ok(())
            }
            ConvExpr::ConvV(l, r, xi) => self.conv_operands(alpha, l, r, xi),
            ConvExpr::ConvStack(s, s2, xi) => self.conv_stack(alpha, s, s2, xi),
            ConvExpr::And(a, b) => self.step_and(alpha, a, b),
            ConvExpr::AndN(chans) => self.step_and_n(alpha, chans),
            ConvExpr::Choice(a, b) => self.step_choice(alpha, a, b),
            ConvExpr::BiasedChoice(a, b) => self.step_biased(alpha, a, b),
            ConvExpr::Or(a, b) => self.step_or(alpha, a, b),
            ConvExpr::Forward(a) => self.step_forward(alpha, a),
            ConvExpr::Lit(v) => {
                self.sched.finish(alpha, Payload::Bool(v));
                Ok(())
            }
        }
    }

    /// Resolve one finished channel per transition; once both sides are
    /// values, dispatch on their shapes. With unfinished sides remaining,
    /// suspend on all of them.
    fn conv_operands(
        &mut self,
        alpha: ChannelId,
        l: Operand,
        r: Operand,
        xi: Renaming,
    ) -> Result<(), MachineError> {
        if let Operand::Recv(b) = &l {
            let b = *b;
            if let Some(v) = self.finished_value(b)? {
                self.resume_requeue(alpha, ConvExpr::ConvV(Operand::Val(v), r, xi));
                return Ok(());
            }
        }
        if let Operand::Recv(b) = &r {
            let b = *b;
            if let Some(v) = self.finished_value(b)? {
                self.resume_requeue(alpha, ConvExpr::ConvV(l, Operand::Val(v), xi));
                return Ok(());
            }
        }
        match (l, r) {
            (Operand::Val(v), Operand::Val(v2)) => self.conv_values(alpha, v, v2, xi),
            (l, r) => {
                let lb = if let Operand::Recv(b) = &l { Some(*b) } else { None };
                let rb = if let Operand::Recv(b) = &r { Some(*b) } else { None };
                self.resume_block(alpha, ConvExpr::ConvV(l, r, xi));
                if let Some(b) = lb {
                    self.sched.need(alpha, b);
                }
                if let Some(b) = rb {
                    self.sched.need(alpha, b);
                }
                Ok(())
            }
        }
    }

    fn conv_values(
        &mut self,
        alpha: ChannelId,
        v: Value,
        v2: Value,
        xi: Renaming,
    ) -> Result<(), MachineError> {
        use Value::*;
        let eta = self.opts().eta;
        match (v, v2) {
            (
                Closure {
                    fresh_var: y,
                    body_chan: d,
                    ..
                },
                Closure {
                    fresh_var: y2,
                    body_chan: d2,
                    ..
                },
            ) => {
                let xi2 = xi.push(y, y2);
                if self.opts().conv_sharing {
                    let key = (d, d2, xi2.clone());
                    if let Some(&chi) = self.memo.get(&key) {
                        if chi != alpha {
                            self.memo_hits += 1;
                            self.forward_to(alpha, chi);
                            return Ok(());
                        }
                    } else {
                        self.memo.insert(key, alpha);
                    }
                }
                self.resume_requeue(alpha, ConvExpr::Conv(d, d2, xi2));
                Ok(())
            }
            (Neutral { head: x, args: s }, Neutral { head: x2, args: s2 }) => {
                if xi.heads_equal(&x, &x2) && s.len() == s2.len() {
                    self.resume_requeue(alpha, ConvExpr::ConvStack(s, s2, xi));
                } else {
                    self.sched.finish(alpha, Payload::Bool(false));
                }
                Ok(())
            }
            (ConstApp { unfold: d, .. }, ConstApp { unfold: d2, .. }) if d == d2 => {
                self.sched.finish(alpha, Payload::Bool(true));
                Ok(())
            }
            (
                ConstApp {
                    name: c,
                    args: s,
                    unfold: d,
                },
                ConstApp {
                    name: c2,
                    args: s2,
                    unfold: d2,
                },
            ) => self.const_vs_const(alpha, c, s, d, c2, s2, d2, xi),
            (Frozen { name: c, args: s }, Frozen { name: c2, args: s2 }) => {
                if c == c2 && s.len() == s2.len() {
                    self.resume_requeue(alpha, ConvExpr::ConvStack(s, s2, xi));
                } else {
                    self.sched.finish(alpha, Payload::Bool(false));
                }
                Ok(())
            }
            (
                Frozen { name: c, args: s },
                ConstApp {
                    name: c2,
                    args: s2,
                    unfold: d2,
                },
            ) if c == c2 && s.len() == s2.len() => {
                self.record_unfold(alpha, &c2, Side::Right, "frozen-or");
                let stacks = self.alloc_conv(
                    ConvExpr::ConvStack(s.clone(), s2, xi.clone()),
                    true,
                    Some(alpha),
                );
                let unfolded = self.alloc_conv(
                    ConvExpr::ConvV(
                        Operand::Val(Frozen { name: c, args: s }),
                        Operand::Recv(d2),
                        xi,
                    ),
                    true,
                    Some(alpha),
                );
                self.resume_block(alpha, ConvExpr::Or(stacks, unfolded));
                Ok(())
            }
            (
                ConstApp {
                    name: c,
                    args: s,
                    unfold: d,
                },
                Frozen { name: c2, args: s2 },
            ) if c == c2 && s.len() == s2.len() => {
                self.record_unfold(alpha, &c, Side::Left, "frozen-or");
                let stacks = self.alloc_conv(
                    ConvExpr::ConvStack(s, s2.clone(), xi.clone()),
                    true,
                    Some(alpha),
                );
                let unfolded = self.alloc_conv(
                    ConvExpr::ConvV(
                        Operand::Recv(d),
                        Operand::Val(Frozen { name: c2, args: s2 }),
                        xi,
                    ),
                    true,
                    Some(alpha),
                );
                self.resume_block(alpha, ConvExpr::Or(stacks, unfolded));
                Ok(())
            }
            (
                Closure {
                    fresh_var: y,
                    body_chan: d,
                    ..
                },
                Neutral { head: z, args: s },
            ) if eta => {
                let (y2, b) = self.fresh_neutral(&y);
                let rhs = Neutral {
                    head: z,
                    args: s.snoc(b),
                };
                self.resume_requeue(
                    alpha,
                    ConvExpr::ConvV(Operand::Recv(d), Operand::Val(rhs), xi.push(y, y2)),
                );
                Ok(())
            }
            (
                Neutral { head: z, args: s },
                Closure {
                    fresh_var: y,
                    body_chan: d,
                    ..
                },
            ) if eta => {
                let (y2, b) = self.fresh_neutral(&y);
                let lhs = Neutral {
                    head: z,
                    args: s.snoc(b),
                };
                self.resume_requeue(
                    alpha,
                    ConvExpr::ConvV(Operand::Val(lhs), Operand::Recv(d), xi.push(y2, y)),
                );
                Ok(())
            }
            (
                Closure {
                    fresh_var: y,
                    body_chan: d,
                    ..
                },
                Frozen { name: c, args: s },
            ) if eta => {
                let (y2, b) = self.fresh_neutral(&y);
                let rhs = Frozen {
                    name: c,
                    args: s.snoc(b),
                };
                self.resume_requeue(
                    alpha,
                    ConvExpr::ConvV(Operand::Recv(d), Operand::Val(rhs), xi.push(y, y2)),
                );
                Ok(())
            }
            (
                Frozen { name: c, args: s },
                Closure {
                    fresh_var: y,
                    body_chan: d,
                    ..
                },
            ) if eta => {
                let (y2, b) = self.fresh_neutral(&y);
                let lhs = Frozen {
                    name: c,
                    args: s.snoc(b),
                };
                self.resume_requeue(
                    alpha,
                    ConvExpr::ConvV(Operand::Val(lhs), Operand::Recv(d), xi.push(y2, y)),
                );
                Ok(())
            }
            (
                Closure {
                    binder,
                    body,
                    env,
                    fresh_var: y,
                    body_chan: d,
                },
                ConstApp {
                    name: c,
                    args: s,
                    unfold: d2,
                },
            ) if eta => {
                self.record_unfold(alpha, &c, Side::Right, "eta");
                let (y2, b) = self.fresh_neutral(&y);
                let applied = self.alloc_conv(
                    ConvExpr::ConvV(
                        Operand::Recv(d),
                        Operand::Val(Frozen {
                            name: c,
                            args: s.snoc(b),
                        }),
                        xi.push(y.clone(), y2),
                    ),
                    true,
                    Some(alpha),
                );
                let clo = Closure {
                    binder,
                    body,
                    env,
                    fresh_var: y,
                    body_chan: d,
                };
                let unfolded = self.alloc_conv(
                    ConvExpr::ConvV(Operand::Val(clo), Operand::Recv(d2), xi),
                    true,
                    Some(alpha),
                );
                self.resume_block(alpha, ConvExpr::BiasedChoice(applied, unfolded));
                Ok(())
            }
            (
                ConstApp {
                    name: c,
                    args: s,
                    unfold: d2,
                },
                Closure {
                    binder,
                    body,
                    env,
                    fresh_var: y,
                    body_chan: d,
                },
            ) if eta => {
                self.record_unfold(alpha, &c, Side::Left, "eta");
                let (y2, b) = self.fresh_neutral(&y);
                let applied = self.alloc_conv(
                    ConvExpr::ConvV(
                        Operand::Val(Frozen {
                            name: c,
                            args: s.snoc(b),
                        }),
                        Operand::Recv(d),
                        xi.push(y2, y.clone()),
                    ),
                    true,
                    Some(alpha),
                );
                let clo = Closure {
                    binder,
                    body,
                    env,
                    fresh_var: y,
                    body_chan: d,
                };
                let unfolded = self.alloc_conv(
                    ConvExpr::ConvV(Operand::Recv(d2), Operand::Val(clo), xi),
                    true,
                    Some(alpha),
                );
                self.resume_block(alpha, ConvExpr::BiasedChoice(applied, unfolded));
                Ok(())
            }
            // A frozen side never chases a different constant's unfolding:
            // that would redo the walk freezing exists to avoid, one copy
            // per race level. Giving up is safe because the connector
            // holding this comparison treats false as non-authoritative.
            (Frozen { .. }, ConstApp { .. }) | (ConstApp { .. }, Frozen { .. }) => {
                self.sched.finish(alpha, Payload::Bool(false));
                Ok(())
            }
            (
                ConstApp {
                    name: c, unfold: d, ..
                },
                other,
            ) => {
                self.record_unfold(alpha, &c, Side::Left, "head");
                self.resume_requeue(
                    alpha,
                    ConvExpr::ConvV(Operand::Recv(d), Operand::Val(other), xi),
                );
                Ok(())
            }
            (
                other,
                ConstApp {
                    name: c, unfold: d, ..
                },
            ) => {
                self.record_unfold(alpha, &c, Side::Right, "head");
                self.resume_requeue(
                    alpha,
                    ConvExpr::ConvV(Operand::Val(other), Operand::Recv(d), xi),
                );
                Ok(())
            }
            (CtorVal { name: c, args: s }, CtorVal { name: c2, args: s2 }) => {
                if c == c2 {
                    debug_assert_eq!(s.len(), s2.len());
                    self.resume_requeue(alpha, ConvExpr::ConvStack(s, s2, xi));
                } else {
                    self.sched.finish(alpha, Payload::Bool(false));
                }
                Ok(())
            }
            (
                StuckMatch {
                    scrutinee: sc,
                    match_term: mt,
                    env: e,
                },
                StuckMatch {
                    scrutinee: sc2,
                    match_term: mt2,
                    env: e2,
                },
            ) => self.conv_stuck_matches(alpha, (sc, mt, e), (sc2, mt2, e2), xi),
            (
                StuckApp { fun, args },
                StuckApp {
                    fun: fun2,
                    args: args2,
                },
            ) => {
                if args.len() == args2.len() {
                    let heads = self.spawn_conv(fun, fun2, xi.clone(), alpha);
                    let stacks =
                        self.alloc_conv(ConvExpr::ConvStack(args, args2, xi), true, Some(alpha));
                    self.install_connector(alpha, ConvExpr::And(heads, stacks), &[heads]);
                } else {
                    self.sched.finish(alpha, Payload::Bool(false));
                }
                Ok(())
            }
            _ => {
                self.sched.finish(alpha, Payload::Bool(false));
                Ok(())
            }
        }
    }

    /// Race between unfolding the left constant and unfolding the right
    /// one; with equal heads and arities, the argument comparison joins
    /// the race in a biased position (its failure is not authoritative,
    /// since the unfoldings may still agree).
    #[allow(clippy::too_many_arguments)]
    fn const_vs_const(
        &mut self,
        alpha: ChannelId,
        c: Name,
        s: Stack,
        d: ChannelId,
        c2: Name,
        s2: Stack,
        d2: ChannelId,
        xi: Renaming,
    ) -> Result<(), MachineError> {
        let frozen = self.opts().frozen;
        let same = c == c2 && s.len() == s2.len();
        let rule = if same { "guarded" } else { "race" };
        self.record_unfold(alpha, &c, Side::Left, rule);
        self.record_unfold(alpha, &c2, Side::Right, rule);
        let left_kept = if frozen {
            Operand::Val(Value::Frozen {
                name: c.clone(),
                args: s.clone(),
            })
        } else {
            Operand::Val(Value::ConstApp {
                name: c.clone(),
                args: s.clone(),
                unfold: d,
            })
        };
        let right_kept = Operand::Val(Value::ConstApp {
            name: c2,
            args: s2.clone(),
            unfold: d2,
        });
        if same {
            // The inner combiner starts inactive with this process already
            // waiting; it is woken when one of its inputs finishes.
            let zeta = self.sched.alloc(super::ProcExpr::Taken, false, Some(alpha));
            self.conv_processes += 1;
            let eta = self.alloc_conv(ConvExpr::ConvStack(s, s2, xi.clone()), true, Some(alpha));
            let beta = self.alloc_conv(
                ConvExpr::ConvV(left_kept, Operand::Recv(d2), xi.clone()),
                true,
                Some(zeta),
            );
            let gamma =
                self.alloc_conv(ConvExpr::ConvV(Operand::Recv(d), right_kept, xi), true, Some(zeta));
            let pair = if frozen {
                ConvExpr::BiasedChoice(beta, gamma)
            } else {
                ConvExpr::Choice(beta, gamma)
            };
            self.sched.resume(zeta, pair.into());
            self.resume_block(alpha, ConvExpr::BiasedChoice(eta, zeta));
        } else {
            let beta = self.alloc_conv(
                ConvExpr::ConvV(left_kept, Operand::Recv(d2), xi.clone()),
                true,
                Some(alpha),
            );
            let gamma =
                self.alloc_conv(ConvExpr::ConvV(Operand::Recv(d), right_kept, xi), true, Some(alpha));
            let comb = if frozen {
                ConvExpr::BiasedChoice(beta, gamma)
            } else {
                ConvExpr::Choice(beta, gamma)
            };
            self.resume_block(alpha, comb);
        }
        Ok(())
    }

    fn conv_stack(
        &mut self,
        alpha: ChannelId,
        s: Stack,
        s2: Stack,
        xi: Renaming,
    ) -> Result<(), MachineError> {
        match (s.uncons(), s2.uncons()) {
            (None, None) => {
                self.sched.finish(alpha, Payload::Bool(true));
                Ok(())
            }
            (Some((b, rest)), Some((b2, rest2))) => {
                let head = self.spawn_conv(b, b2, xi.clone(), alpha);
                let tail =
                    self.alloc_conv(ConvExpr::ConvStack(rest, rest2, xi), true, Some(alpha));
                self.install_connector(alpha, ConvExpr::And(head, tail), &[head]);
                Ok(())
            }
            _ => Err(MachineError::Internal(
                "argument stacks of different lengths".into(),
            )),
        }
    }

    fn conv_stuck_matches(
        &mut self,
        alpha: ChannelId,
        (sc, mt, e): (ChannelId, Term, Env),
        (sc2, mt2, e2): (ChannelId, Term, Env),
        xi: Renaming,
    ) -> Result<(), MachineError> {
        let brs = match_branches(&mt)?.to_vec();
        let brs2 = match_branches(&mt2)?.to_vec();
        let aligned = brs.len() == brs2.len()
            && brs
                .iter()
                .all(|b| brs2.iter().any(|b2| b2.ctor == b.ctor));
        if !aligned {
            self.sched.finish(alpha, Payload::Bool(false));
            return Ok(());
        }
        let mut leaves = vec![self.spawn_conv(sc, sc2, xi.clone(), alpha)];
        for b in &brs {
            let b2 = brs2.iter().find(|b2| b2.ctor == b.ctor).expect("aligned");
            debug_assert_eq!(b.binders.len(), b2.binders.len());
            let mut xi_i = xi.clone();
            let mut envl = e.clone();
            let mut envr = e2.clone();
            for (x, x2) in b.binders.iter().zip(&b2.binders) {
                let (y, cl) = self.fresh_neutral(x);
                let (y2, cr) = self.fresh_neutral(x2);
                envl = envl.bind(x.clone(), cl);
                envr = envr.bind(x2.clone(), cr);
                xi_i = xi_i.push(y, y2);
            }
            let dl = self
                .sched
                .alloc(EvalExpr::Eval(b.body.clone(), envl).into(), false, None);
            let dr = self
                .sched
                .alloc(EvalExpr::Eval(b2.body.clone(), envr).into(), false, None);
            leaves.push(self.spawn_conv(dl, dr, xi_i, alpha));
        }
        let shared = leaves.clone();
        self.install_connector(alpha, ConvExpr::AndN(leaves), &shared);
        Ok(())
    }

    /// Create (or reuse) the comparison of two channels. With sharing on,
    /// an existing process for the same key is wired to the new waiter;
    /// if it was cancelled earlier, the `need` revives it.
    fn spawn_conv(
        &mut self,
        lhs: ChannelId,
        rhs: ChannelId,
        xi: Renaming,
        waiter: ChannelId,
    ) -> ChannelId {
        if self.opts().conv_sharing {
            let key = (lhs, rhs, xi.clone());
            if let Some(&chi) = self.memo.get(&key) {
                self.memo_hits += 1;
                if self.sched.is_running(chi) {
                    self.sched.need(waiter, chi);
                }
                return chi;
            }
            let chi = self.alloc_conv(ConvExpr::Conv(lhs, rhs, xi), true, Some(waiter));
            self.memo.insert(key, chi);
            chi
        } else {
            self.alloc_conv(ConvExpr::Conv(lhs, rhs, xi), true, Some(waiter))
        }
    }

    fn alloc_conv(
        &mut self,
        e: ConvExpr,
        active: bool,
        needed_by: Option<ChannelId>,
    ) -> ChannelId {
        self.conv_processes += 1;
        self.sched.alloc(e.into(), active, needed_by)
    }

    fn step_and(
        &mut self,
        alpha: ChannelId,
        a: ChannelId,
        b: ChannelId,
    ) -> Result<(), MachineError> {
        let va = self.finished_bool(a)?;
        let vb = self.finished_bool(b)?;
        if va == Some(false) {
            self.sched.unneed(alpha, b);
            self.sched.finish(alpha, Payload::Bool(false));
        } else if va == Some(true) {
            self.forward_to(alpha, b);
        } else if vb == Some(false) {
            self.sched.unneed(alpha, a);
            self.sched.finish(alpha, Payload::Bool(false));
        } else if vb == Some(true) {
            self.forward_to(alpha, a);
        } else {
            self.resume_block(alpha, ConvExpr::And(a, b));
            self.sched.need(alpha, a);
            self.sched.need(alpha, b);
        }
        Ok(())
    }

    fn step_and_n(
        &mut self,
        alpha: ChannelId,
        chans: Vec<ChannelId>,
    ) -> Result<(), MachineError> {
        let mut all_true = true;
        for &c in &chans {
            match self.finished_bool(c)? {
                Some(false) => {
                    for &o in &chans {
                        if o != c {
                            self.sched.unneed(alpha, o);
                        }
                    }
                    self.sched.finish(alpha, Payload::Bool(false));
                    return Ok(());
                }
                Some(true) => {}
                None => all_true = false,
            }
        }
        if all_true {
            self.sched.finish(alpha, Payload::Bool(true));
            return Ok(());
        }
        let pending: Vec<ChannelId> = chans
            .iter()
            .copied()
            .filter(|&c| self.sched.is_running(c))
            .collect();
        self.resume_block(alpha, ConvExpr::AndN(chans));
        for c in pending {
            self.sched.need(alpha, c);
        }
        Ok(())
    }

    fn step_choice(
        &mut self,
        alpha: ChannelId,
        a: ChannelId,
        b: ChannelId,
    ) -> Result<(), MachineError> {
        if let Some(v) = self.finished_bool(a)? {
            self.sched.unneed(alpha, b);
            self.sched.finish(alpha, Payload::Bool(v));
        } else if let Some(v) = self.finished_bool(b)? {
            self.sched.unneed(alpha, a);
            self.sched.finish(alpha, Payload::Bool(v));
        } else {
            self.resume_block(alpha, ConvExpr::Choice(a, b));
            self.sched.need(alpha, a);
            self.sched.need(alpha, b);
        }
        Ok(())
    }

    fn step_biased(
        &mut self,
        alpha: ChannelId,
        a: ChannelId,
        b: ChannelId,
    ) -> Result<(), MachineError> {
        let va = self.finished_bool(a)?;
        if va == Some(true) {
            self.sched.unneed(alpha, b);
            self.sched.finish(alpha, Payload::Bool(true));
        } else if va == Some(false) {
            self.forward_to(alpha, b);
        } else if let Some(v) = self.finished_bool(b)? {
            self.sched.unneed(alpha, a);
            self.sched.finish(alpha, Payload::Bool(v));
        } else {
            self.resume_block(alpha, ConvExpr::BiasedChoice(a, b));
            self.sched.need(alpha, a);
            self.sched.need(alpha, b);
        }
        Ok(())
    }

    fn step_or(
        &mut self,
        alpha: ChannelId,
        a: ChannelId,
        b: ChannelId,
    ) -> Result<(), MachineError> {
        let va = self.finished_bool(a)?;
        let vb = self.finished_bool(b)?;
        if va == Some(true) {
            self.sched.unneed(alpha, b);
            self.sched.finish(alpha, Payload::Bool(true));
        } else if vb == Some(true) {
            self.sched.unneed(alpha, a);
            self.sched.finish(alpha, Payload::Bool(true));
        } else if va == Some(false) {
            self.forward_to(alpha, b);
        } else if vb == Some(false) {
            self.forward_to(alpha, a);
        } else {
            self.resume_block(alpha, ConvExpr::Or(a, b));
            self.sched.need(alpha, a);
            self.sched.need(alpha, b);
        }
        Ok(())
    }

    fn step_forward(&mut self, alpha: ChannelId, a: ChannelId) -> Result<(), MachineError> {
        match self.finished_bool(a)? {
            Some(v) => self.sched.finish(alpha, Payload::Bool(v)),
            None => {
                self.resume_block(alpha, ConvExpr::Forward(a));
                self.sched.need(alpha, a);
            }
        }
        Ok(())
    }

    /// Become a forwarder for `b`: read it now if it is finished, wait on
    /// it otherwise.
    fn forward_to(&mut self, alpha: ChannelId, b: ChannelId) {
        if self.sched.is_running(b) {
            self.resume_block(alpha, ConvExpr::Forward(b));
            self.sched.need(alpha, b);
        } else {
            self.resume_requeue(alpha, ConvExpr::Forward(b));
        }
    }

    /// Install a connector whose inputs may include shared comparisons
    /// that already finished. Such an input will never wake the process,
    /// so the connector must take a turn now to read it; otherwise it
    /// sleeps until one of its (running, already wired) inputs finishes.
    fn install_connector(&mut self, alpha: ChannelId, e: ConvExpr, shared: &[ChannelId]) {
        if shared.iter().any(|&c| !self.sched.is_running(c)) {
            self.resume_requeue(alpha, e);
        } else {
            self.resume_block(alpha, e);
        }
    }
}
