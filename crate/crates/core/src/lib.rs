//! Simulation and verification toolkit for the Funding Game.
//!
//! `m` identical items are shared among `n` agents. Each agent submits a
//! request `(quantity, declared value)` whose declared value may understate
//! but never exceed its true value for that quantity. A public mechanism
//! turns the requests into an allocation.
//!
//! The crate provides:
//!
//! * [`valuation`]: concave valuation tables, marginal valuations and
//!   instance generators.
//! * [`mechanism`]: the Highest Ratio Greedy mechanism, the optimal knapsack
//!   mechanism and two independent welfare-optimal allocators.
//! * [`equilibrium`]: exact pure Nash equilibria of the greedy game,
//!   best-response dynamics and the smoothness inequality.
//! * [`multiround`]: the k-round game played with per-round equilibria,
//!   the Δ sequence and the per-trace welfare checks.
//! * [`analysis`]: the closed-form price-of-anarchy bound expressions and a
//!   numerical supremum search.
//! * [`sweep`]: batch experiments shared by the CLI and the acceptance suite.

pub mod analysis;
pub mod equilibrium;
pub mod error;
pub mod mechanism;
pub mod multiround;
pub mod numeric;
pub mod sweep;
pub mod valuation;

pub use error::{GameError, Result};
pub use mechanism::{Allocation, Request, StrategyProfile};
pub use valuation::{GameInstance, Valuation};
