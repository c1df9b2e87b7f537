//! Facility location games where agents may exchange the locations a
//! mechanism hands them.
//!
//! Agents sit on a segment `[0, d]` at public positions and privately either
//! like (`L`) or dislike (`H`) the facility. The crate provides the utility
//! model, exchange procedures (Top Trading Cycle and pairwise swaps), the
//! mechanisms, and exhaustive audits of their truthfulness, optimality and
//! approximation guarantees.

pub mod audit;
pub mod error;
pub mod exchange;
pub mod figures;
pub mod mechanisms;
pub mod model;
pub mod replay;
pub mod report;

pub use error::{AuditError, ModelError};
pub use exchange::{beneficial_swap_exists, swap_dynamics, ttc, ExchangeTrace, TradeStep};
pub use mechanisms::{
    candidate_facilities, central_opt, location_permutation, naive_opt_location, opt_location_then_ttc,
    random_endpoints, run_mechanism, run_mechanism_with, MechanismKind, MechanismRun, RandomizedOutcome, Stage,
};
pub use model::{
    endpoint_utility_sum, social_welfare, utility, Assignment, Instance, LoadError, Outcome, PreferenceProfile,
    PreferenceType, EPS,
};
