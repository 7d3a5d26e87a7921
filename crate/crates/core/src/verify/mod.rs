//! Numerical checks of the inequalities: exact mixing coefficients and
//! covariance bounds on finite spaces, Monte Carlo tails against bounds,
//! and sampled lower bounds on mixing.

mod alpha;
mod finite;
mod tail;

pub use alpha::{calibrated_envelope, empirical_alpha_lower, empirical_alpha_lower_with, AlphaEstimate, EventPair, SamplePlan};
pub use finite::{DavydovCheck, FiniteSpace, MAX_ATOMS};
pub use tail::{binomial_upper_limit, mc_tail, TailEstimate, TailOptions, CONFIDENCE, MIN_REPLICATES};
