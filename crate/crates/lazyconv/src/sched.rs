//! Process store and demand-driven scheduler.
//!
//! Each process owns one write-once channel and is either `Running` (its
//! expression still steps) or `Finished` (the channel holds a value, forever).
//! The wait map is kept in both directions: `waiters(β)` lists the processes
//! blocked reading from β, `waits_on(α)` lists the channels α is blocked on.
//! Runnable processes sit in a duplicate-free FIFO queue; fairness is
//! round-robin by popping the head. The queue is threaded through the
//! records as a doubly-linked list, so membership tests and mid-queue
//! removal (cancellation) are O(1).
//!
//! Demand discipline: a channel enters the queue only through `alloc` with
//! `active`, through the empty-waiters case of `need`, or through a
//! `finish` restarting its waiters. A channel whose last waiter is removed
//! by `unneed` is dequeued and recursively releases whatever it waits on,
//! like dropping a reference in a reference-counted system.

use std::fmt;
use std::mem;

/// Identifies one process and the channel it sends on. Ids are dense
/// indices, never reused within a run, so they order by allocation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelId(u32);

/// Reserved waiter marking a channel as externally needed. It is not a
/// real process: it is never scheduled, never finishes, and `unneed`
/// never removes it, so the channel it waits on cannot be cancelled.
pub const STAR: ChannelId = ChannelId(u32::MAX);

const NONE: u32 = u32::MAX;

impl ChannelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == STAR {
            write!(f, "*")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug)]
pub enum ProcState<E, V> {
    Running(E),
    Finished(V),
}

#[derive(Debug)]
struct ChanRec<E, V> {
    state: ProcState<E, V>,
    waiters: Vec<ChannelId>,
    waits_on: Vec<ChannelId>,
    in_queue: bool,
    qprev: u32,
    qnext: u32,
}

/// Event counters, exposed through the CLI's stats output.
#[derive(Debug, Default, Clone, Copy)]
pub struct SchedCounters {
    pub allocs: u64,
    pub needs: u64,
    pub unneeds: u64,
    pub finishes: u64,
    pub enqueues: u64,
    /// Channels dequeued because their last waiter was removed.
    pub cancellations: u64,
    pub peak_queue: u64,
}

pub struct Sched<E, V> {
    recs: Vec<ChanRec<E, V>>,
    head: u32,
    tail: u32,
    queue_len: u64,
    pub counters: SchedCounters,
}

impl<E, V> Default for Sched<E, V> {
    fn default() -> Self {
        Sched::new()
    }
}

impl<E, V> Sched<E, V> {
    pub fn new() -> Self {
        Sched {
            recs: Vec::new(),
            head: NONE,
            tail: NONE,
            queue_len: 0,
            counters: SchedCounters::default(),
        }
    }

    /// Create a process. `active` puts it at the queue tail; `needed_by`
    /// pre-records a waiter in both wait maps. The two are independent: a
    /// combiner can be allocated inactive with its consumer already
    /// waiting, to be woken by the first of its inputs that finishes.
    pub fn alloc(&mut self, body: E, active: bool, needed_by: Option<ChannelId>) -> ChannelId {
        let id = ChannelId(self.recs.len() as u32);
        debug_assert!(id != STAR, "channel ids exhausted");
        self.recs.push(ChanRec {
            state: ProcState::Running(body),
            waiters: Vec::new(),
            waits_on: Vec::new(),
            in_queue: false,
            qprev: NONE,
            qnext: NONE,
        });
        self.counters.allocs += 1;
        if let Some(w) = needed_by {
            self.rec_mut(id).waiters.push(w);
            if w != STAR {
                self.rec_mut(w).waits_on.push(id);
            }
        }
        if active {
            debug_assert!(needed_by.is_some(), "active channel must have a waiter");
            self.enqueue(id);
        }
        id
    }

    /// Create a channel that already holds a value (e.g. the neutral value
    /// for a fresh variable). It is never scheduled.
    pub fn alloc_finished(&mut self, value: V) -> ChannelId {
        let id = ChannelId(self.recs.len() as u32);
        debug_assert!(id != STAR, "channel ids exhausted");
        self.recs.push(ChanRec {
            state: ProcState::Finished(value),
            waiters: Vec::new(),
            waits_on: Vec::new(),
            in_queue: false,
            qprev: NONE,
            qnext: NONE,
        });
        self.counters.allocs += 1;
        id
    }

    /// Suspend `alpha` until `beta` produces a value. The first waiter
    /// activates `beta`; later waiters just attach. Requesting the same
    /// dependency twice is a no-op.
    pub fn need(&mut self, alpha: ChannelId, beta: ChannelId) {
        debug_assert!(self.is_running(beta), "need on a finished channel");
        self.counters.needs += 1;
        let was_unneeded = self.rec(beta).waiters.is_empty();
        if !self.rec(beta).waiters.contains(&alpha) {
            self.rec_mut(beta).waiters.push(alpha);
            if alpha != STAR {
                self.rec_mut(alpha).waits_on.push(beta);
            }
        }
        if was_unneeded {
            self.enqueue(beta);
        }
    }

    /// Record `alpha`'s value and restart every process blocked on it.
    /// `alpha` itself is never scheduled again.
    pub fn finish(&mut self, alpha: ChannelId, value: V) {
        let rec = self.rec_mut(alpha);
        assert!(
            matches!(rec.state, ProcState::Running(_)),
            "write-once violation: channel {alpha} finished twice"
        );
        debug_assert!(!rec.in_queue, "finishing a channel still in the queue");
        debug_assert!(
            rec.waits_on.is_empty(),
            "channel {alpha} finished with pending dependencies"
        );
        rec.state = ProcState::Finished(value);
        self.counters.finishes += 1;
        let waiters = mem::take(&mut self.rec_mut(alpha).waiters);
        for w in waiters {
            if w == STAR {
                continue;
            }
            let wrec = self.rec_mut(w);
            debug_assert!(matches!(wrec.state, ProcState::Running(_)));
            wrec.waits_on.retain(|&c| c != alpha);
            if !self.rec(w).in_queue {
                self.enqueue(w);
            }
        }
    }

    /// Retract `alpha`'s interest in `beta`. If that removes the last
    /// waiter, `beta` is descheduled and recursively releases its own
    /// dependencies. Retracting an interest that no longer exists is a
    /// no-op (the channel may have finished in the meantime).
    pub fn unneed(&mut self, alpha: ChannelId, beta: ChannelId) {
        self.counters.unneeds += 1;
        let rec = self.rec_mut(beta);
        let Some(pos) = rec.waiters.iter().position(|&c| c == alpha) else {
            if matches!(rec.state, ProcState::Running(_)) {
                log::warn!("unneed({alpha}, {beta}): not a waiter");
            }
            return;
        };
        rec.waiters.remove(pos);
        let now_unneeded = rec.waiters.is_empty();
        if alpha != STAR {
            self.rec_mut(alpha).waits_on.retain(|&c| c != beta);
        }
        if now_unneeded && self.is_running(beta) {
            if self.rec(beta).in_queue {
                self.dequeue(beta);
                self.counters.cancellations += 1;
            }
            while let Some(&gamma) = self.rec(beta).waits_on.last() {
                self.unneed(beta, gamma);
            }
        }
    }

    /// Next runnable process, removed from the queue. The stepping engine
    /// decides whether it is re-appended, suspended, or finished. `None`
    /// means every remaining process is blocked or done.
    pub fn pop_head(&mut self) -> Option<ChannelId> {
        if self.head == NONE {
            return None;
        }
        let id = ChannelId(self.head);
        self.dequeue(id);
        Some(id)
    }

    /// Re-append a popped process for its next round-robin turn.
    pub fn requeue(&mut self, id: ChannelId) {
        debug_assert!(self.is_running(id));
        self.enqueue(id);
    }

    /// Move a running process's expression out for stepping, leaving a
    /// placeholder behind.
    pub fn take_body(&mut self, id: ChannelId, placeholder: E) -> E {
        match mem::replace(&mut self.rec_mut(id).state, ProcState::Running(placeholder)) {
            ProcState::Running(e) => e,
            ProcState::Finished(_) => panic!("take_body on finished channel {id}"),
        }
    }

    /// Store the next expression of a process being stepped.
    pub fn resume(&mut self, id: ChannelId, body: E) {
        let rec = self.rec_mut(id);
        debug_assert!(matches!(rec.state, ProcState::Running(_)));
        rec.state = ProcState::Running(body);
    }

    pub fn value(&self, id: ChannelId) -> Option<&V> {
        match &self.rec(id).state {
            ProcState::Finished(v) => Some(v),
            ProcState::Running(_) => None,
        }
    }

    pub fn running_body(&self, id: ChannelId) -> Option<&E> {
        match &self.rec(id).state {
            ProcState::Running(e) => Some(e),
            ProcState::Finished(_) => None,
        }
    }

    pub fn is_running(&self, id: ChannelId) -> bool {
        matches!(self.rec(id).state, ProcState::Running(_))
    }

    pub fn in_queue(&self, id: ChannelId) -> bool {
        self.rec(id).in_queue
    }

    pub fn waiters(&self, id: ChannelId) -> &[ChannelId] {
        &self.rec(id).waiters
    }

    pub fn waits_on(&self, id: ChannelId) -> &[ChannelId] {
        &self.rec(id).waits_on
    }

    pub fn channel_count(&self) -> usize {
        self.recs.len()
    }

    /// All channel ids allocated so far, in allocation order.
    pub fn channel_ids(&self) -> impl Iterator<Item = ChannelId> + '_ {
        (0..self.recs.len() as u32).map(ChannelId)
    }

    pub fn queue_len(&self) -> u64 {
        self.queue_len
    }

    pub fn queue_snapshot(&self) -> Vec<ChannelId> {
        let mut out = Vec::new();
        let mut at = self.head;
        while at != NONE {
            out.push(ChannelId(at));
            at = self.recs[at as usize].qnext;
        }
        out
    }

    /// Full-scan validation of the scheduler invariants: the queue is
    /// duplicate-free and consistent with the membership flags, the wait
    /// maps are mutual inverses, finished channels hold no edges and are
    /// not queued, and every queued channel is running with at least one
    /// waiter. Expensive; run per transition only in paranoid mode.
    pub fn check_invariants(&self) {
        let mut seen = vec![false; self.recs.len()];
        let mut at = self.head;
        let mut prev = NONE;
        let mut walked = 0u64;
        while at != NONE {
            let rec = &self.recs[at as usize];
            assert!(!seen[at as usize], "duplicate queue entry {at}");
            seen[at as usize] = true;
            assert!(rec.in_queue, "queued channel {at} not flagged");
            assert_eq!(rec.qprev, prev, "queue back-link broken at {at}");
            assert!(
                matches!(rec.state, ProcState::Running(_)),
                "finished channel {at} in queue"
            );
            assert!(!rec.waiters.is_empty(), "queued channel {at} has no waiters");
            walked += 1;
            prev = at;
            at = rec.qnext;
        }
        assert_eq!(prev, self.tail, "queue tail out of sync");
        assert_eq!(walked, self.queue_len, "queue length out of sync");
        for (i, rec) in self.recs.iter().enumerate() {
            let id = ChannelId(i as u32);
            assert_eq!(rec.in_queue, seen[i], "stray queue flag on {id}");
            for adjacent in [&rec.waiters, &rec.waits_on] {
                for (j, &c) in adjacent.iter().enumerate() {
                    assert!(
                        !adjacent[..j].contains(&c),
                        "duplicate wait edge on {id}"
                    );
                }
            }
            if let ProcState::Finished(_) = rec.state {
                assert!(rec.waiters.is_empty(), "finished channel {id} has waiters");
                assert!(rec.waits_on.is_empty(), "finished channel {id} has waits_on");
            }
            for &w in &rec.waiters {
                if w != STAR {
                    assert!(
                        self.recs[w.index()].waits_on.contains(&id),
                        "waiter {w} of {id} lacks reverse edge"
                    );
                }
            }
            for &b in &rec.waits_on {
                assert!(
                    self.recs[b.index()].waiters.contains(&id),
                    "waits_on {b} of {id} lacks forward edge"
                );
            }
        }
    }

    fn rec(&self, id: ChannelId) -> &ChanRec<E, V> {
        &self.recs[id.index()]
    }

    fn rec_mut(&mut self, id: ChannelId) -> &mut ChanRec<E, V> {
        &mut self.recs[id.index()]
    }

    fn enqueue(&mut self, id: ChannelId) {
        let tail = self.tail;
        let rec = self.rec_mut(id);
        debug_assert!(!rec.in_queue, "duplicate enqueue of {id}");
        rec.in_queue = true;
        rec.qprev = tail;
        rec.qnext = NONE;
        if tail == NONE {
            self.head = id.0;
        } else {
            self.recs[tail as usize].qnext = id.0;
        }
        self.tail = id.0;
        self.queue_len += 1;
        self.counters.enqueues += 1;
        self.counters.peak_queue = self.counters.peak_queue.max(self.queue_len);
    }

    fn dequeue(&mut self, id: ChannelId) {
        let rec = self.rec_mut(id);
        debug_assert!(rec.in_queue, "dequeue of absent {id}");
        rec.in_queue = false;
        let (prev, next) = (rec.qprev, rec.qnext);
        rec.qprev = NONE;
        rec.qnext = NONE;
        if prev == NONE {
            self.head = next;
        } else {
            self.recs[prev as usize].qnext = next;
        }
        if next == NONE {
            self.tail = prev;
        } else {
            self.recs[next as usize].qprev = prev;
        }
        self.queue_len -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type S = Sched<&'static str, i32>;

    fn ids(v: &[ChannelId]) -> Vec<usize> {
        v.iter().map(|c| c.index()).collect()
    }

    #[test]
    fn alloc_inactive_thunk() {
        let mut s = S::new();
        let a = s.alloc("thunk", false, None);
        assert!(!s.in_queue(a));
        assert!(s.waiters(a).is_empty());
        assert!(s.is_running(a));
        s.check_invariants();
    }

    #[test]
    fn alloc_active_with_waiter() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let a = s.alloc("conv", true, Some(root));
        assert_eq!(s.queue_snapshot(), vec![root, a]);
        assert_eq!(s.waiters(a), &[root]);
        assert_eq!(s.waits_on(root), &[a]);
        s.check_invariants();
    }

    #[test]
    fn alloc_inactive_with_waiter_wakes_on_finish() {
        // A combiner can be born inactive with its consumer pre-recorded;
        // it is scheduled the first time one of its inputs finishes.
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let combiner = s.alloc("choice", false, Some(root));
        let input = s.alloc("conv", true, Some(combiner));
        assert!(!s.in_queue(combiner));
        let popped = s.pop_head().unwrap();
        assert_eq!(popped, root);
        let input2 = s.pop_head().unwrap();
        assert_eq!(input2, input);
        s.finish(input, 1);
        assert!(s.in_queue(combiner));
        s.check_invariants();
    }

    #[test]
    fn ids_are_fresh() {
        let mut s = S::new();
        let a = s.alloc("a", false, None);
        let b = s.alloc("b", false, None);
        assert_ne!(a, b);
    }

    #[test]
    fn need_first_waiter_activates() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let b = s.alloc("thunk", false, None);
        s.need(root, b);
        assert_eq!(s.waiters(b), &[root]);
        assert!(s.in_queue(b));
        s.check_invariants();
    }

    #[test]
    fn need_later_waiters_attach_only() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let other = s.alloc("other", true, Some(root));
        let b = s.alloc("thunk", false, None);
        s.need(root, b);
        let before = s.queue_snapshot();
        s.need(other, b);
        assert_eq!(ids(s.waiters(b)), vec![root.index(), other.index()]);
        assert_eq!(s.queue_snapshot(), before);
        s.check_invariants();
    }

    #[test]
    fn need_is_idempotent() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let b = s.alloc("thunk", false, None);
        s.need(root, b);
        s.need(root, b);
        assert_eq!(s.waiters(b), &[root]);
        assert_eq!(s.waits_on(root), &[b]);
        s.check_invariants();
    }

    #[test]
    fn finish_restarts_only_unqueued_waiters() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let a = s.alloc("a", true, Some(root));
        let b = s.alloc("b", true, Some(root));
        // Both a and b wait on t; b stays queued, a blocks.
        let t = s.alloc("t", false, None);
        assert_eq!(s.pop_head(), Some(root));
        assert_eq!(s.pop_head(), Some(a));
        s.need(a, t);
        s.need(b, t);
        // Queue now: b, t. Pop t first, then finish it: a must be
        // re-added while b keeps its single queue slot.
        let popped = s.pop_head();
        assert_eq!(popped, Some(b));
        s.requeue(b);
        assert_eq!(s.pop_head(), Some(t));
        s.finish(t, 7);
        assert_eq!(s.queue_snapshot(), vec![b, a]);
        assert_eq!(s.value(t), Some(&7));
        assert!(s.waiters(t).is_empty());
        assert!(!s.waits_on(a).contains(&t));
        s.check_invariants();
    }

    #[test]
    #[should_panic(expected = "write-once")]
    fn double_finish_panics() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let t = s.alloc("t", false, None);
        s.need(root, t);
        s.pop_head();
        s.pop_head();
        s.finish(t, 1);
        s.finish(t, 2);
    }

    #[test]
    fn finished_value_readable_without_scheduling() {
        let mut s = S::new();
        let v = s.alloc_finished(42);
        assert_eq!(s.value(v), Some(&42));
        assert!(!s.in_queue(v));
        assert_eq!(s.pop_head(), None);
    }

    #[test]
    fn unneed_with_other_waiters_keeps_channel() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let a = s.alloc("a", true, Some(root));
        let t = s.alloc("t", false, None);
        s.need(root, t);
        s.need(a, t);
        let before = s.queue_snapshot();
        s.unneed(a, t);
        assert_eq!(s.waiters(t), &[root]);
        assert_eq!(s.queue_snapshot(), before);
        s.check_invariants();
    }

    #[test]
    fn unneed_cascades_through_chain() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let a = s.alloc("a", true, Some(root));
        let b = s.alloc("b", false, None);
        let c = s.alloc("c", false, None);
        // a blocks on b, b blocks on c.
        assert_eq!(s.pop_head(), Some(root));
        assert_eq!(s.pop_head(), Some(a));
        s.need(a, b);
        assert_eq!(s.pop_head(), Some(b));
        s.need(b, c);
        // Queue is now [c]. Dropping a's interest must cancel b and c.
        s.unneed(a, b);
        assert_eq!(s.pop_head(), None);
        assert!(s.waiters(b).is_empty() && s.waiters(c).is_empty());
        assert!(s.waits_on(a).is_empty() && s.waits_on(b).is_empty());
        assert_eq!(s.counters.cancellations, 1);
        s.check_invariants();
    }

    #[test]
    fn unneed_stops_at_shared_dependency() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let a = s.alloc("a", true, Some(root));
        let b = s.alloc("b", true, Some(root));
        let t = s.alloc("t", false, None);
        assert_eq!(s.pop_head(), Some(root));
        assert_eq!(s.pop_head(), Some(a));
        s.need(a, t);
        assert_eq!(s.pop_head(), Some(b));
        s.need(b, t);
        s.unneed(a, t);
        // b still needs t, so t stays queued.
        assert!(s.in_queue(t));
        assert_eq!(s.waiters(t), &[b]);
        s.check_invariants();
    }

    #[test]
    fn star_waiter_is_never_removed() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let t = s.alloc("t", false, None);
        s.pop_head();
        s.need(root, t);
        // Even if every real waiter of root went away, the reserved
        // waiter keeps root alive; unneed on t cascades no further
        // than t itself when root drops its interest.
        s.unneed(root, t);
        assert!(!s.in_queue(t));
        assert_eq!(s.waiters(root), &[STAR]);
        s.check_invariants();
    }

    #[test]
    fn unneed_after_finish_is_silent_noop() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let t = s.alloc("t", false, None);
        s.pop_head();
        s.need(root, t);
        s.pop_head();
        s.finish(t, 3);
        s.unneed(root, t);
        assert_eq!(s.value(t), Some(&3));
        s.check_invariants();
    }

    #[test]
    fn pop_is_fifo_and_requeue_appends() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let a = s.alloc("a", true, Some(root));
        assert_eq!(s.pop_head(), Some(root));
        s.requeue(root);
        assert_eq!(s.queue_snapshot(), vec![a, root]);
        assert_eq!(s.pop_head(), Some(a));
        assert_eq!(s.pop_head(), Some(root));
        assert_eq!(s.pop_head(), None);
    }

    #[test]
    fn take_and_resume_roundtrip() {
        let mut s = S::new();
        let root = s.alloc("root", true, Some(STAR));
        let body = s.take_body(root, "<stepping>");
        assert_eq!(body, "root");
        assert_eq!(s.running_body(root), Some(&"<stepping>"));
        s.resume(root, "root2");
        assert_eq!(s.running_body(root), Some(&"root2"));
    }
}
