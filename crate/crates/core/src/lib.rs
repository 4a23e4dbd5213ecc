//! Deterministic (linear, bit-level) Y-channel: three users exchange private
//! and common messages through a single relay.
//!
//! - [`channel`]: gains, levels, message ids and rate tuples.
//! - [`bounds`]: outer-bound inequalities and the sufficient condition used
//!   for the claimed achievable region.
//! - [`scheduler`]: the gain-ordering scheduler producing [`plan::TransmissionPlan`]s.
//! - [`bitsim`]: bit-exact GF(2) execution and verification of plans.
//! - [`region`]: exhaustive sweeps and region comparisons for small channels.

pub mod bitsim;
pub mod bounds;
pub mod channel;
pub mod error;
pub mod plan;
pub mod region;
pub mod scheduler;

pub use bitsim::{verify_plan, VerificationVerdict};
pub use bounds::{evaluate_bounds, in_outer_region, lemma1_condition, BoundReport};
pub use channel::{ChannelConfig, LevelIndex, Message, MessageId, RateTuple, User, UserSet};
pub use error::{ModelError, SimError, SweepError};
pub use plan::{StageId, TransmissionPlan};
pub use scheduler::{schedule, GosTrace, InfeasibilityReport, Schedule, SchedulerOptions};
