use rand::Rng;
use serde::{Deserialize, Serialize};

use super::envelope::{ZSampler, DEFAULT_C};
use crate::error::{Error, Result};
use crate::models::FrechetParams;
use crate::special::{ln_gamma_pdf_ln, ln_inv_gamma_pdf, std_gamma};

/// Hyperparameters of the semi-conjugate Fréchet prior.
///
/// `m` is the virtual sample size, `x_e1` the shifted inverse arithmetic mean
/// anchor and `x_e2` the shifted geometric mean anchor of the virtual sample.
/// The location is bounded below by `mu_inf`, which makes `π(μ)` proper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetHyper {
    pub m: f64,
    pub x_e1: f64,
    pub x_e2: f64,
    pub mu_inf: f64,
}

impl FrechetHyper {
    pub fn new(m: f64, x_e1: f64, x_e2: f64, mu_inf: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::domain(format!("virtual size m must be positive, got {m}")));
        }
        if !(mu_inf.is_finite() && x_e2.is_finite()) {
            return Err(Error::domain("Fréchet anchors and mu_inf must be finite"));
        }
        if !(mu_inf < x_e1 && x_e1 < x_e2) {
            return Err(Error::domain(format!(
                "Fréchet hyperparameters need mu_inf < x_e1 < x_e2, got {mu_inf}, {x_e1}, {x_e2}"
            )));
        }
        Ok(Self {
            m,
            x_e1,
            x_e2,
            mu_inf,
        })
    }

    /// `s1(μ, ξ) = m (x_e1 - μ)^{-1/ξ}`: rate of the gamma prior on `ν`.
    pub fn s1(&self, mu: f64, xi: f64) -> Result<f64> {
        if !(mu < self.x_e1) || !(xi > 0.0) {
            return Err(Error::domain(format!("s1 needs mu < x_e1 and xi > 0 (mu={mu}, xi={xi})")));
        }
        Ok(self.ln_s1(mu, xi).exp())
    }

    /// `s2(μ) = m ln((x_e2 - μ)/(x_e1 - μ))`: scale of the inverse-gamma prior on `ξ`.
    pub fn s2(&self, mu: f64) -> Result<f64> {
        if !(mu < self.x_e1) {
            return Err(Error::domain(format!("s2 needs mu < x_e1 (mu={mu})")));
        }
        Ok(self.s2_unchecked(mu))
    }

    pub(crate) fn ln_s1(&self, mu: f64, xi: f64) -> f64 {
        self.m.ln() - (self.x_e1 - mu).ln() / xi
    }

    pub(crate) fn s2_unchecked(&self, mu: f64) -> f64 {
        // ln((x_e2 - μ)/(x_e1 - μ)) = ln1p(Δ/(x_e1 - μ))
        self.m * ((self.x_e2 - self.x_e1) / (self.x_e1 - mu)).ln_1p()
    }

    /// `ρ = (x_e2 - x_e1)/(x_e2 - mu_inf)`, the lower end of the `z` range.
    pub fn rho(&self) -> f64 {
        (self.x_e2 - self.x_e1) / (self.x_e2 - self.mu_inf)
    }

    /// Unnormalized `ln π(μ)`, scaled so that `π(μ) ≤ 1` (it tends to 1 as
    /// `μ → -∞`). Support is `[mu_inf, x_e1)`.
    pub fn log_pi_mu(&self, mu: f64) -> f64 {
        if !(mu >= self.mu_inf && mu < self.x_e1) {
            return f64::NEG_INFINITY;
        }
        // (x_e2 - μ)^m s2^m ∝ [(x_e2 - μ) ln(1/(1 - z)) / Δ]^m with z = Δ/(x_e2 - μ)
        let z = (self.x_e2 - self.x_e1) / (self.x_e2 - mu);
        -self.m * ((-(-z).ln_1p()) / z).ln()
    }

    /// `ln ∫ exp(log_pi_mu(μ)) dμ`.
    pub fn ln_mu_normalizer(&self) -> f64 {
        (self.x_e2 - self.x_e1).ln() + super::envelope::z_integral(self.m, self.rho()).ln()
    }

    /// Log prior of `(μ, ξ)` with `ν` integrated out (unnormalized in `μ`).
    pub fn ln_prior_mu_xi(&self, mu: f64, xi: f64) -> f64 {
        let lp = self.log_pi_mu(mu);
        if lp == f64::NEG_INFINITY || !(xi > 0.0) {
            return f64::NEG_INFINITY;
        }
        lp + ln_inv_gamma_pdf(xi, self.m, self.s2_unchecked(mu))
    }

    /// Joint log prior of `(μ, ν, ξ)`, unnormalized only through `π(μ)`.
    pub fn ln_prior(&self, p: &FrechetParams) -> f64 {
        let base = self.ln_prior_mu_xi(p.mu, p.xi);
        if base == f64::NEG_INFINITY {
            return base;
        }
        base + ln_gamma_pdf_ln(p.ln_nu, self.m, self.ln_s1(p.mu, p.xi))
    }

    /// Exact sampler of `π(μ)` by acceptance-rejection with instrumental
    /// parameter `c`.
    pub fn mu_sampler(&self, c: f64) -> FrechetMuSampler {
        FrechetMuSampler {
            hyper: *self,
            z: ZSampler::new(self.m, self.rho(), c),
        }
    }

    pub fn sample_mu<R: Rng + ?Sized>(&self, c: f64, rng: &mut R) -> f64 {
        self.mu_sampler(c).sample(rng)
    }

    /// Joint prior draw: `μ ~ π(μ)`, `ξ | μ ~ IG(m, s2(μ))`, `ν | μ, ξ ~ G(m, s1(μ, ξ))`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FrechetParams {
        self.mu_sampler(DEFAULT_C).sample_params(rng)
    }
}

#[derive(Debug, Clone)]
pub struct FrechetMuSampler {
    hyper: FrechetHyper,
    z: ZSampler,
}

impl FrechetMuSampler {
    pub fn acceptance(&self) -> f64 {
        self.z.acceptance()
    }

    pub fn z_sampler(&self) -> &ZSampler {
        &self.z
    }

    fn mu_from_z(&self, z: f64) -> f64 {
        let h = &self.hyper;
        (h.x_e2 - (h.x_e2 - h.x_e1) / z).clamp(h.mu_inf, h.x_e1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.mu_from_z(self.z.sample(rng))
    }

    /// Draw through the rejection scheme only; returns `(μ, proposals used)`.
    pub fn sample_rejection<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u64) {
        let (z, n) = self.z.sample_rejection(rng);
        (self.mu_from_z(z), n)
    }

    pub fn sample_params<R: Rng + ?Sized>(&self, rng: &mut R) -> FrechetParams {
        let h = &self.hyper;
        loop {
            let mu = self.sample(rng);
            if mu >= h.x_e1 {
                continue;
            }
            let xi = h.s2_unchecked(mu) / std_gamma(rng, h.m);
            let ln_nu = std_gamma(rng, h.m).ln() - h.ln_s1(mu, xi);
            if let Ok(p) = FrechetParams::from_ln_nu(mu, ln_nu, xi) {
                return p;
            }
        }
    }
}
