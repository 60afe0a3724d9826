//! The three extreme-value sub-models for block maxima.
//!
//! Fréchet and Weibull use the transformed-scale parametrization
//! `θ = (μ, ν, ξ)` with `ν = σ^{1/ξ}`:
//!
//! ```text
//! Fréchet  P(X < x) = exp(-ν (x - μ)^{-1/ξ}),   x ≥ μ
//! Weibull  P(X < x) = exp(-ν (μ - x)^{ 1/ξ}),   x ≤ μ
//! Gumbel   P(X < x) = exp(-exp(-(x - μ) / σ))
//! ```
//!
//! Densities are exposed in log form only. Log-likelihoods return `-inf` for
//! data outside the support so that MCMC proposals there are rejected
//! without special casing.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::open01;

/// Shapes outside `[XI_MIN, XI_MAX]` are treated as support violations by the
/// likelihoods; `(.)^{±1/ξ}` overflows beyond them.
pub const XI_MIN: f64 = 1e-4;
pub const XI_MAX: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Frechet,
    Weibull,
    Gumbel,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Frechet, Model::Weibull, Model::Gumbel];

    pub fn index(self) -> usize {
        match self {
            Model::Frechet => 0,
            Model::Weibull => 1,
            Model::Gumbel => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Frechet => "frechet",
            Model::Weibull => "weibull",
            Model::Gumbel => "gumbel",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_prob(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("probability {q} outside (0, 1)")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {v}")))
    }
}

fn xi_in_range(xi: f64) -> bool {
    (XI_MIN..=XI_MAX).contains(&xi)
}

/// Fréchet parameters. `ν` is held as `ln ν`: along near-Gumbel posterior
/// ridges `ν = σ^{1/ξ}` leaves the range of `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetParams {
    pub mu: f64,
    pub ln_nu: f64,
    pub xi: f64,
}

impl FrechetParams {
    pub fn new(mu: f64, nu: f64, xi: f64) -> Result<Self> {
        check_positive("nu", nu)?;
        Self::from_ln_nu(mu, nu.ln(), xi)
    }

    pub fn from_ln_nu(mu: f64, ln_nu: f64, xi: f64) -> Result<Self> {
        check_finite("mu", mu)?;
        check_finite("ln nu", ln_nu)?;
        check_positive("xi", xi)?;
        Ok(Self { mu, ln_nu, xi })
    }

    /// `ν`; may under- or overflow where `ln ν` does not.
    pub fn nu(&self) -> f64 {
        self.ln_nu.exp()
    }

    /// Classical scale `σ = ν^ξ`.
    pub fn sigma(&self) -> f64 {
        (self.xi * self.ln_nu).exp()
    }

    /// `ln[ν (x - μ)^{-1/ξ}]`, the log of minus the log-CDF.
    fn ln_t(&self, ld: f64) -> f64 {
        self.ln_nu - ld / self.xi
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.mu {
            return 0.0;
        }
        (-self.ln_t((x - self.mu).ln()).exp()).exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= self.mu || !xi_in_range(self.xi) {
            return f64::NEG_INFINITY;
        }
        let ld = (x - self.mu).ln();
        let lt = self.ln_t(ld);
        lt - self.xi.ln() - ld - lt.exp()
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        check_prob(q)?;
        Ok(self.mu + (-self.xi * ((-q.ln()).ln() - self.ln_nu)).exp())
    }

    pub fn loglik(&self, data: &[f64]) -> f64 {
        data.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}

/// Weibull parameters, `ν` held as `ln ν` as for [`FrechetParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub mu: f64,
    pub ln_nu: f64,
    pub xi: f64,
}

impl WeibullParams {
    pub fn new(mu: f64, nu: f64, xi: f64) -> Result<Self> {
        check_positive("nu", nu)?;
        Self::from_ln_nu(mu, nu.ln(), xi)
    }

    pub fn from_ln_nu(mu: f64, ln_nu: f64, xi: f64) -> Result<Self> {
        check_finite("mu", mu)?;
        check_finite("ln nu", ln_nu)?;
        check_positive("xi", xi)?;
        Ok(Self { mu, ln_nu, xi })
    }

    pub fn nu(&self) -> f64 {
        self.ln_nu.exp()
    }

    /// Classical scale `σ = ν^{-ξ}`.
    pub fn sigma(&self) -> f64 {
        (-self.xi * self.ln_nu).exp()
    }

    /// `ln[ν (μ - x)^{1/ξ}]`.
    fn ln_t(&self, ld: f64) -> f64 {
        self.ln_nu + ld / self.xi
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x >= self.mu {
            return 1.0;
        }
        (-self.ln_t((self.mu - x).ln()).exp()).exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x >= self.mu || !xi_in_range(self.xi) {
            return f64::NEG_INFINITY;
        }
        let ld = (self.mu - x).ln();
        let lt = self.ln_t(ld);
        lt - self.xi.ln() - ld - lt.exp()
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        check_prob(q)?;
        Ok(self.mu - (self.xi * ((-q.ln()).ln() - self.ln_nu)).exp())
    }

    pub fn loglik(&self, data: &[f64]) -> f64 {
        data.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelParams {
    pub mu: f64,
    pub sigma: f64,
}

impl GumbelParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        check_finite("mu", mu)?;
        check_positive("sigma", sigma)?;
        Ok(Self { mu, sigma })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (-(-(x - self.mu) / self.sigma).exp()).exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(self.sigma > 0.0) {
            return f64::NEG_INFINITY;
        }
        let z = (x - self.mu) / self.sigma;
        -self.sigma.ln() - z - (-z).exp()
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        check_prob(q)?;
        Ok(self.mu - self.sigma * (-q.ln()).ln())
    }

    pub fn loglik(&self, data: &[f64]) -> f64 {
        data.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}

/// Parameter vector of one sub-model, tagged by its model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum DomainParams {
    Frechet(FrechetParams),
    Weibull(WeibullParams),
    Gumbel(GumbelParams),
}

impl DomainParams {
    pub fn model(&self) -> Model {
        match self {
            DomainParams::Frechet(_) => Model::Frechet,
            DomainParams::Weibull(_) => Model::Weibull,
            DomainParams::Gumbel(_) => Model::Gumbel,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            DomainParams::Frechet(p) => p.cdf(x),
            DomainParams::Weibull(p) => p.cdf(x),
            DomainParams::Gumbel(p) => p.cdf(x),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            DomainParams::Frechet(p) => p.ln_pdf(x),
            DomainParams::Weibull(p) => p.ln_pdf(x),
            DomainParams::Gumbel(p) => p.ln_pdf(x),
        }
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        match self {
            DomainParams::Frechet(p) => p.quantile(q),
            DomainParams::Weibull(p) => p.quantile(q),
            DomainParams::Gumbel(p) => p.quantile(q),
        }
    }

    pub fn loglik(&self, data: &[f64]) -> f64 {
        match self {
            DomainParams::Frechet(p) => p.loglik(data),
            DomainParams::Weibull(p) => p.loglik(data),
            DomainParams::Gumbel(p) => p.loglik(data),
        }
    }

    /// `n` i.i.d. draws by inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        (0..n).map(|_| self.quantile(open01(rng))).collect()
    }
}

impl From<FrechetParams> for DomainParams {
    fn from(p: FrechetParams) -> Self {
        DomainParams::Frechet(p)
    }
}

impl From<WeibullParams> for DomainParams {
    fn from(p: WeibullParams) -> Self {
        DomainParams::Weibull(p)
    }
}

impl From<GumbelParams> for DomainParams {
    fn from(p: GumbelParams) -> Self {
        DomainParams::Gumbel(p)
    }
}
