//! Profit-maximizing truthful incentive schedules for task allocation.
//!
//! An agent of private type `θ` announces `θ̂`, receives the linear reward
//! `α(θ̂)x + β(θ̂)` for participation `x`, and picks `x` to maximize
//! `θπ(x) − px + α(θ̂)x + β(θ̂)`. The publisher chooses the schedule to
//! maximize expected `g(x) − reward` subject to truthful reporting and
//! voluntary participation.
//!
//! Truthfulness reduces to a nondecreasing `α` with `β` recovered by
//! quadrature ([`mechanism::compute_beta`]), and the publisher's problem
//! becomes an optimal control problem in `α` solved by projected gradient
//! steps on the control `α̇` ([`solver::solve`]). [`verifier`] certifies a
//! schedule independently on the type grid.
//!
//! A problem with several independent task kinds decomposes into one scalar
//! instance per task.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod econ_model;
pub mod error;
pub mod mechanism;
pub mod quadrature;
pub mod solver;
pub mod verifier;

pub use econ_model::{
    validate_assumptions, DistributionKind, MarketParams, Problem, RevenueModel, SatisfactionModel,
    TypeDistribution, TypeGrid, Violation,
};
pub use error::{Error, Result};
pub use mechanism::{ProfitBreakdown, RewardSchedule};
pub use solver::{optimize_alpha0, solve, Alpha0Search, GammaSchedule, Solution, SolverConfig};
pub use verifier::{verify, Thresholds, VerificationReport};
