//! Posterior inference for the Fréchet/Weibull/Gumbel encompassing mixture.
//!
//! The three models are embedded in one mixture likelihood
//! `Σ_M π_M p_M(x | θ_M)` with independent block priors; the posterior mean
//! of the per-draw weights `W_M ∝ π_M p_M(x | θ_M)` estimates the posterior
//! model probabilities.

pub mod conditionals;
pub mod diagnostics;
pub mod mcmc;
pub mod summary;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{FrechetParams, GumbelParams, Model, WeibullParams};
use crate::special::log_sum_exp;

pub use conditionals::{
    conditional_nu_posterior, log_conditional_mu, log_conditional_xi, GammaLaw, SemiConjugate,
};
pub use mcmc::{
    mixture_posterior_mcmc, Diagnostics, McmcSettings, MixturePriors, MoveStats, PosteriorDraws,
    RHAT_THRESHOLD,
};
pub use summary::{
    model_posterior_probs, per_model_posterior, predictive_cdf, predictive_quantile, return_level,
    ParamSummary, SelectionReport, ShapeVerdict, WeightedSample,
};

/// Prior model weights `π_M`, indexed like [`Model::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixtureConfig {
    pub weights: [f64; 3],
}

impl Default for MixtureConfig {
    fn default() -> Self {
        Self {
            weights: [1.0 / 3.0; 3],
        }
    }
}

impl MixtureConfig {
    pub fn new(weights: [f64; 3]) -> Result<Self> {
        let c = Self { weights };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::config("prior model weights must be finite and non-negative"));
        }
        let s: f64 = self.weights.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("prior model weights must sum to 1, got {s}")));
        }
        Ok(())
    }

    pub fn ln_weights(&self) -> [f64; 3] {
        self.weights.map(f64::ln)
    }

    pub fn weight(&self, m: Model) -> f64 {
        self.weights[m.index()]
    }
}

/// One state of the encompassing model: a parameter vector per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureState {
    pub theta_f: FrechetParams,
    pub theta_w: WeibullParams,
    pub theta_g: GumbelParams,
}

impl MixtureState {
    pub fn cdf(&self, m: Model, x: f64) -> f64 {
        match m {
            Model::Frechet => self.theta_f.cdf(x),
            Model::Weibull => self.theta_w.cdf(x),
            Model::Gumbel => self.theta_g.cdf(x),
        }
    }
}

/// Per-component log-likelihoods `ln p_M(x | θ_M)`.
pub fn component_logliks(state: &MixtureState, data: &[f64]) -> [f64; 3] {
    [
        state.theta_f.loglik(data),
        state.theta_w.loglik(data),
        state.theta_g.loglik(data),
    ]
}

/// `ln Σ_M π_M p_M(x | θ_M)`.
pub fn mixture_loglik(state: &MixtureState, data: &[f64], cfg: &MixtureConfig) -> f64 {
    let ll = component_logliks(state, data);
    let lw = cfg.ln_weights();
    log_sum_exp(&[lw[0] + ll[0], lw[1] + ll[1], lw[2] + ll[2]])
}

/// `W_M = π_M p_M / Σ π_j p_j`; `None` when every component has zero
/// likelihood.
pub fn model_weights(state: &MixtureState, data: &[f64], cfg: &MixtureConfig) -> Option<[f64; 3]> {
    let total = mixture_loglik(state, data, cfg);
    if !total.is_finite() {
        return None;
    }
    let ll = component_logliks(state, data);
    let lw = cfg.ln_weights();
    Some(std::array::from_fn(|k| (lw[k] + ll[k] - total).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> MixtureState {
        MixtureState {
            theta_f: FrechetParams::new(10.0, 1e3, 0.3).unwrap(),
            theta_w: WeibullParams::new(400.0, 1e-9, 0.3).unwrap(),
            theta_g: GumbelParams::new(100.0, 40.0).unwrap(),
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let w = model_weights(&state(), &[50.0, 120.0, 300.0], &MixtureConfig::default()).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_prior_weight_gives_zero_posterior_weight() {
        let cfg = MixtureConfig::new([0.0, 0.5, 0.5]).unwrap();
        let w = model_weights(&state(), &[50.0, 120.0], &cfg).unwrap();
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn out_of_support_component_gets_no_weight() {
        // 500 exceeds the Weibull endpoint 400
        let w = model_weights(&state(), &[50.0, 500.0], &MixtureConfig::default()).unwrap();
        assert_eq!(w[1], 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(MixtureConfig::new([0.5, 0.5, 0.1]).is_err());
        assert!(MixtureConfig::new([-0.1, 0.6, 0.5]).is_err());
    }
}
