use rand::Rng;
use serde::{Deserialize, Serialize};

use super::envelope::{ZSampler, DEFAULT_C};
use crate::error::{Error, Result};
use crate::models::WeibullParams;
use crate::special::{ln_gamma_pdf_ln, ln_inv_gamma_pdf, std_gamma};

/// Hyperparameters of the semi-conjugate Weibull prior.
///
/// The location (upper endpoint) lives on `(x_e4, mu_sup]` with
/// `rho = (x_e4 - x_e3)/(mu_sup - x_e3)`. In `z = (x_e4 - x_e3)/(μ - x_e3)`
/// the location prior has the same density as the Fréchet one, so the same
/// acceptance-rejection sampler applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullHyper {
    pub m: f64,
    pub x_e3: f64,
    pub x_e4: f64,
    pub rho: f64,
}

impl WeibullHyper {
    pub fn new(m: f64, x_e3: f64, x_e4: f64, rho: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::domain(format!("virtual size m must be positive, got {m}")));
        }
        if !(x_e3.is_finite() && x_e4.is_finite() && x_e3 < x_e4) {
            return Err(Error::domain(format!(
                "Weibull hyperparameters need x_e3 < x_e4, got {x_e3}, {x_e4}"
            )));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::domain(format!("rho must lie in (0, 1), got {rho}")));
        }
        Ok(Self { m, x_e3, x_e4, rho })
    }

    /// Upper bound of the location prior.
    pub fn mu_sup(&self) -> f64 {
        self.x_e3 + (self.x_e4 - self.x_e3) / self.rho
    }

    /// `s3(μ, ξ) = m (μ - x_e3)^{1/ξ}`.
    pub fn s3(&self, mu: f64, xi: f64) -> Result<f64> {
        if !(mu > self.x_e4) || !(xi > 0.0) {
            return Err(Error::domain(format!("s3 needs mu > x_e4 and xi > 0 (mu={mu}, xi={xi})")));
        }
        Ok(self.ln_s3(mu, xi).exp())
    }

    /// `s4(μ) = m ln((μ - x_e3)/(μ - x_e4))`.
    pub fn s4(&self, mu: f64) -> Result<f64> {
        if !(mu > self.x_e4) {
            return Err(Error::domain(format!("s4 needs mu > x_e4 (mu={mu})")));
        }
        Ok(self.s4_unchecked(mu))
    }

    pub(crate) fn ln_s3(&self, mu: f64, xi: f64) -> f64 {
        self.m.ln() + (mu - self.x_e3).ln() / xi
    }

    pub(crate) fn s4_unchecked(&self, mu: f64) -> f64 {
        self.m * ((self.x_e4 - self.x_e3) / (mu - self.x_e4)).ln_1p()
    }

    /// Unnormalized `ln π(μ)` on `(x_e4, mu_sup]`, scaled to be at most 0.
    pub fn log_pi_mu(&self, mu: f64) -> f64 {
        if !(mu > self.x_e4 && mu <= self.mu_sup()) {
            return f64::NEG_INFINITY;
        }
        let z = (self.x_e4 - self.x_e3) / (mu - self.x_e3);
        -self.m * ((-(-z).ln_1p()) / z).ln()
    }

    /// `ln ∫ exp(log_pi_mu(μ)) dμ`.
    pub fn ln_mu_normalizer(&self) -> f64 {
        (self.x_e4 - self.x_e3).ln() + super::envelope::z_integral(self.m, self.rho).ln()
    }

    pub fn ln_prior_mu_xi(&self, mu: f64, xi: f64) -> f64 {
        let lp = self.log_pi_mu(mu);
        if lp == f64::NEG_INFINITY || !(xi > 0.0) {
            return f64::NEG_INFINITY;
        }
        lp + ln_inv_gamma_pdf(xi, self.m, self.s4_unchecked(mu))
    }

    pub fn ln_prior(&self, p: &WeibullParams) -> f64 {
        let base = self.ln_prior_mu_xi(p.mu, p.xi);
        if base == f64::NEG_INFINITY {
            return base;
        }
        base + ln_gamma_pdf_ln(p.ln_nu, self.m, self.ln_s3(p.mu, p.xi))
    }

    /// Instrumental parameter used by [`WeibullHyper::sample`]: the Fréchet
    /// default rescaled by `rho`, since the envelope depends on `c/ρ`.
    pub fn default_c(&self) -> f64 {
        DEFAULT_C * self.rho
    }

    pub fn mu_sampler(&self, c: f64) -> WeibullMuSampler {
        WeibullMuSampler {
            hyper: *self,
            z: ZSampler::new(self.m, self.rho, c),
        }
    }

    pub fn sample_mu<R: Rng + ?Sized>(&self, c: f64, rng: &mut R) -> f64 {
        self.mu_sampler(c).sample(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WeibullParams {
        self.mu_sampler(self.default_c()).sample_params(rng)
    }
}

#[derive(Debug, Clone)]
pub struct WeibullMuSampler {
    hyper: WeibullHyper,
    z: ZSampler,
}

impl WeibullMuSampler {
    pub fn z_sampler(&self) -> &ZSampler {
        &self.z
    }

    fn mu_from_z(&self, z: f64) -> f64 {
        let h = &self.hyper;
        (h.x_e3 + (h.x_e4 - h.x_e3) / z).clamp(h.x_e4, h.mu_sup())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.mu_from_z(self.z.sample(rng))
    }

    pub fn sample_params<R: Rng + ?Sized>(&self, rng: &mut R) -> WeibullParams {
        let h = &self.hyper;
        loop {
            let mu = self.sample(rng);
            if mu <= h.x_e4 {
                continue;
            }
            let xi = h.s4_unchecked(mu) / std_gamma(rng, h.m);
            let ln_nu = std_gamma(rng, h.m).ln() - h.ln_s3(mu, xi);
            if let Ok(p) = WeibullParams::from_ln_nu(mu, ln_nu, xi) {
                return p;
            }
        }
    }
}
