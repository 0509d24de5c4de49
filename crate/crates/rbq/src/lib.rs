//! Queueing analytics built on a rate-balance view of birth-death-like
//! processes, paired with a discrete-event simulator that checks every
//! analytic quantity empirically.
//!
//! The crate has three layers:
//!
//! * [`transforms`] — a small Laplace-Stieltjes transform calculus:
//!   distribution families, the conditional-residual operator, mixtures,
//!   and its inverse.
//! * [`gm1`], [`gmn1`], [`mngn1`] — closed forms and residual-transform
//!   recursions for the G/M/1 queue, its queue-length-dependent variant
//!   (including G/M/c), and the state-dependent Mn/Gn/1 queue.
//! * [`sim`] — an event-driven simulator with segment trackers for the
//!   pathwise rate-balance invariant, two-step-transition counters, and
//!   exact residual sampling; [`oracles`] holds the independent
//!   brute-force references used by the test suites.

mod dd;
pub mod dist;
pub mod error;
pub mod gm1;
pub mod gmn1;
pub mod mngn1;
pub mod oracles;
pub mod schedule;
pub mod sim;
pub mod transforms;

pub use dist::DistributionSpec;
pub use error::{Error, Result};
pub use schedule::RateSchedule;
pub use transforms::Transform;
