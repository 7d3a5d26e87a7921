//! Tail bounds for sums over strips and generation balls, with the
//! mixing envelopes they consume and a grid search over block parameters.

mod bernstein;
mod concentration;
mod envelope;
mod fit;
mod optimize;

pub use bernstein::{beta_cap, bernstein_bound, summability_ratio, BernsteinInput, BoundBreakdown, BoundParams};
pub use concentration::{
    concentration_bound, concentration_bound_graph, concentration_schedule, ConcentrationInput, Schedule,
    DEFAULT_ETA, DEFAULT_SCHEDULE,
};
pub use envelope::{EnvelopeKind, MixingEnvelope, Provenance};
pub use fit::{asymptotic_fit, AsymptoticFit};
pub use optimize::{optimize_params, optimize_params_with, BetaGrid, ParamGrid, StripProblem};
