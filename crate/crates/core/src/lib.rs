//! Optimal cache placement for the modified coded caching scheme.
//!
//! The library computes the closed-form placement that minimizes the
//! expected delivery rate under uniformly random demands, evaluates exact
//! expected and peak rates, and checks the closed form against three
//! independent oracles:
//!
//! * [`lp`]: an exact rational simplex solver on the underlying linear program,
//! * [`demand_oracle`]: exhaustive demand enumeration and Monte Carlo sampling,
//! * [`delivery`]: a bit-exact coded-delivery simulator with GF(2) decoding.
//!
//! All quantities are exact [`Rational`]s; floats only appear when rendering.

pub mod cli;
pub mod combinatorics;
pub mod delivery;
pub mod demand_oracle;
pub mod error;
pub mod lp;
pub mod output;
pub mod placement;
pub mod rational;
pub mod verify;

pub use combinatorics::{binom, distinct_count, prob_distinct, stirling2, DistinctRequestDistribution};
pub use demand_oracle::DemandVector;
pub use error::{Error, Result};
pub use placement::{
    case_rate_breakdown, check_feasible, expected_rate, minimum_expected_rate, optimal_placement,
    peak_rate_ccs, peak_rate_mccs, per_demand_rate, rate_report, PlacementVector, ProblemInstance,
    RateReport,
};
pub use rational::Rational;
