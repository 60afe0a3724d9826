//! Semi-conjugate priors for the three extreme-value domains.

pub mod envelope;
pub mod frechet;
pub mod gumbel;
pub mod weibull;

pub use envelope::{ZSampler, DEFAULT_C, MIN_ACCEPTANCE};
pub use frechet::{FrechetHyper, FrechetMuSampler};
pub use gumbel::{GumbelHyper, GumbelPriorSampler, SigmaMarginal, SirSample};
pub use weibull::{WeibullHyper, WeibullMuSampler};
