//! Verification library for comparing noisy sensors feeding a Bayesian
//! filter: stochastic-order assumption checks, Blackwell dominance via LP
//! feasibility, Shannon capacity, a convex-dominance oracle by exact
//! enumeration, Monte-Carlo error estimation, and a two-state
//! controlled-sensing solver certifying the myopic lower bound.

pub mod core;
pub mod densities;
pub mod filter;
pub mod orders;
pub mod pomdp;
pub mod verify;

pub use crate::core::{
    Belief, Comparison, CoreError, Obs, SensorKernel, SensorPair, StateLevels, StochasticMatrix,
    first_order_compare, mlr_compare, validate_stochastic,
};
pub use crate::densities::{DiscretizedKernel, NoiseFamily, Support, discretize_to_kernel};
pub use crate::filter::{FilterError, FilterState, filter_sequence, filter_update};
pub use crate::orders::{
    DominanceReport, FeasibilityResult, Verdict, Witness, channel_capacity, check_blackwell_left,
    check_blackwell_right, full_report,
};
pub use crate::pomdp::{PomdpModel, ValueGrid, value_iterate, verify_lower_bound};
pub use crate::verify::{MseEstimates, PsiCurve, mse_monte_carlo, psi_exact};
