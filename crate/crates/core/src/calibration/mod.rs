//! Prior calibration against expert predictive quantiles.
//!
//! Fréchet and Weibull hyperparameters are fitted by grid search on Cooke's
//! loss, with the prior predictive estimated from importance draws that stay
//! frozen across grid candidates. The Gumbel virtual sample is fitted the
//! same way against a quadrature predictive. Virtual sizes are then balanced
//! across models by minimizing a Kullback-Leibler divergence between
//! marginal predictives.

mod compat;
mod predictive;
mod search;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::{FrechetHyper, GumbelHyper, WeibullHyper};

pub use compat::{
    calibrate_virtual_size, histogram_kl, kl_marginal, CompatEntry,
    CompatibilityResult, KL_BINS, KL_SMOOTHING,
};
pub use predictive::{
    FrechetIsDraws, GumbelPredictive, PredictiveCdf, PriorPredictive, WeibullIsDraws,
    ESS_FLOOR,
};
pub use search::{
    calibrate_frechet, calibrate_gumbel_virtual, calibrate_weibull, AnchorGrid, GumbelGrid,
    RhoGrid,
};

/// Discretized Kullback-Leibler loss between target and achieved orders,
/// with 0 and 1 appended at both ends. A non-positive achieved gap gives
/// `+inf`.
pub fn cooke_loss(target: &[f64], achieved: &[f64]) -> f64 {
    assert_eq!(target.len(), achieved.len(), "order sequences differ in length");
    let gaps = |v: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(v.len() + 1);
        let mut prev = 0.0;
        for &a in v.iter().chain(std::iter::once(&1.0)) {
            out.push(a - prev);
            prev = a;
        }
        out
    };
    let mut loss = 0.0;
    for (t, g) in gaps(target).into_iter().zip(gaps(achieved)) {
        if t <= 0.0 {
            continue;
        }
        if !(g > 0.0) {
            return f64::INFINITY;
        }
        loss += t * (t / g).ln();
    }
    loss.max(0.0)
}

/// Expert predictive quantiles `(order, value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct ExpertQuantiles {
    entries: Vec<(f64, f64)>,
}

impl ExpertQuantiles {
    /// Orders strictly increasing in (0, 1), values strictly increasing.
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::config("expert quantiles are empty"));
        }
        if entries.iter().any(|&(a, v)| !(a > 0.0 && a < 1.0) || !v.is_finite()) {
            return Err(Error::config("expert orders must lie in (0, 1) with finite values"));
        }
        if entries.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 >= w[1].1) {
            return Err(Error::config(
                "expert orders and values must be strictly increasing",
            ));
        }
        Ok(Self { entries })
    }

    /// Quartiles 75, 100, 150 at 25/50/75%: the rainfall case study.
    pub fn rainfall_quartiles() -> Self {
        Self {
            entries: vec![(0.25, 75.0), (0.5, 100.0), (0.75, 150.0)],
        }
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn orders(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.1).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl TryFrom<Vec<(f64, f64)>> for ExpertQuantiles {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ExpertQuantiles> for Vec<(f64, f64)> {
    fn from(e: ExpertQuantiles) -> Self {
        e.entries
    }
}

/// Importance law for Fréchet calibration: `μ ~ N(kappa_mu, sigma_mu²)`,
/// `ξ ~ IG(m, m ln rho_xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ISConfig {
    pub kappa_mu: f64,
    pub sigma_mu: f64,
    pub rho_xi: f64,
    pub n_draws: usize,
}

impl Default for ISConfig {
    fn default() -> Self {
        Self {
            kappa_mu: 0.0,
            sigma_mu: 50.0,
            rho_xi: 2.0,
            n_draws: 100_000,
        }
    }
}

impl ISConfig {
    pub const MIN_DRAWS: usize = 10_000;

    pub fn validate(&self) -> Result<()> {
        if !self.kappa_mu.is_finite() || !(self.sigma_mu > 0.0) || !(self.rho_xi > 1.0) {
            return Err(Error::config(
                "importance law needs finite kappa_mu, sigma_mu > 0 and rho_xi > 1",
            ));
        }
        if self.n_draws < Self::MIN_DRAWS {
            return Err(Error::config(format!(
                "calibration needs at least {} importance draws, got {}",
                Self::MIN_DRAWS,
                self.n_draws
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum PriorSpec {
    Frechet(FrechetHyper),
    Weibull(WeibullHyper),
    Gumbel(GumbelHyper),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub hyper: PriorSpec,
    /// Prior predictive CDF at the expert values.
    pub achieved_orders: Vec<f64>,
    pub loss: f64,
    /// Effective sample size of the importance weights at the optimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CalibrationResult {
    pub fn max_gap(&self, eq: &ExpertQuantiles) -> f64 {
        eq.orders()
            .iter()
            .zip(&self.achieved_orders)
            .map(|(t, a)| (t - a).abs())
            .fold(0.0, f64::max)
    }
}
