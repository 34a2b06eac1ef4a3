//! Lazy convertibility checking for an untyped lambda calculus with
//! defined constants, data constructors, and pattern matching.
//!
//! The checker runs both sides of a problem on a pool of cooperatively
//! scheduled processes that communicate through write-once channels, so
//! subterms are evaluated at most once, only as far as needed, and the
//! two sides can race where either alone might diverge.

pub mod machine;
pub mod oracle;
pub mod sched;
pub mod suites;
pub mod syntax;
