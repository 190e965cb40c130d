//! Interbank lending game: lenders split budgets across borrowers whose
//! interest rate falls linearly from `rate_max` to `rate_min` as their demand
//! is met.
//!
//! The crate computes the unique Nash equilibrium in closed form, exact best
//! responses, several learning dynamics that converge to it, and independent
//! numerical oracles for cross-checking.

pub mod best_response;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod oracle;
pub mod projection;
pub mod sampling;

pub use best_response::{best_response, best_response_gain, water_fill, BestResponse, ResidualDemand};
pub use dynamics::{
    integrate_continuous, lyapunov_gap, run, stability_bound, step_eager, step_pseudo_gradient, step_randomised,
    DynamicsConfig, Termination, Trajectory, TrajectoryRecord, Variant,
};
pub use equilibrium::{compute_threshold_index, kkt_check, market_rate, solve_equilibrium, EquilibriumResult, KktReport};
pub use error::{GameError, Result};
pub use game::{LendingGame, StrategyProfile};
pub use oracle::{projected_gradient_solve, OracleSolution};
pub use projection::project_onto_budget;
