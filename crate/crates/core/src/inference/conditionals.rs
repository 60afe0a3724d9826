//! Conditional posteriors of the semi-conjugate Fréchet and Weibull models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{FrechetParams, Model, WeibullParams, XI_MAX, XI_MIN};
use crate::priors::{FrechetHyper, WeibullHyper};
use crate::special::{ln_gamma, ln_inv_gamma_pdf, log_add_exp, log_sum_exp};

#[derive(Debug, Clone, Copy)]
pub enum SemiConjugate<'a> {
    Frechet(&'a FrechetHyper),
    Weibull(&'a WeibullHyper),
}

impl<'a> From<&'a FrechetHyper> for SemiConjugate<'a> {
    fn from(h: &'a FrechetHyper) -> Self {
        Self::Frechet(h)
    }
}

impl<'a> From<&'a WeibullHyper> for SemiConjugate<'a> {
    fn from(h: &'a WeibullHyper) -> Self {
        Self::Weibull(h)
    }
}

/// Gamma law with mean `shape / rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaLaw {
    pub shape: f64,
    pub rate: f64,
}

/// Sufficient quantities of the likelihood at fixed `(μ, ξ)`, with `ν`
/// integrated against its conditional prior. Rates are kept on the log
/// scale: `(μ - x)^{1/ξ}` overflows long before the posterior vanishes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Collapsed {
    /// Log prior rate of `ν` (`s1` or `s3`).
    pub ln_prior_rate: f64,
    /// `ln Σ (x_i - μ)^{-1/ξ}` or `ln Σ (μ - x_i)^{1/ξ}`; `-inf` without data.
    pub ln_sum_pow: f64,
    /// Log-likelihood without the `ν` terms: `-n ln ξ ± (1/ξ ∓ 1) Σ ln|x_i - μ|`.
    pub ll_rest: f64,
    /// `ln ∫ G(ν; m, prior_rate) L(μ, ν, ξ) dν`; `-inf` off support.
    pub ln_k: f64,
}

impl Collapsed {
    /// Log rate of the conditional posterior of `ν`.
    pub fn ln_post_rate(&self) -> f64 {
        log_add_exp(self.ln_prior_rate, self.ln_sum_pow)
    }
}

impl SemiConjugate<'_> {
    pub fn model(&self) -> Model {
        match self {
            Self::Frechet(_) => Model::Frechet,
            Self::Weibull(_) => Model::Weibull,
        }
    }

    pub fn m(&self) -> f64 {
        match self {
            Self::Frechet(h) => h.m,
            Self::Weibull(h) => h.m,
        }
    }

    fn ln_prior_rate(&self, mu: f64, xi: f64) -> f64 {
        match self {
            Self::Frechet(h) => h.ln_s1(mu, xi),
            Self::Weibull(h) => h.ln_s3(mu, xi),
        }
    }

    /// Log prior of `(μ, ξ)`, unnormalized in `μ`.
    pub fn ln_prior_mu_xi(&self, mu: f64, xi: f64) -> f64 {
        match self {
            Self::Frechet(h) => h.ln_prior_mu_xi(mu, xi),
            Self::Weibull(h) => h.ln_prior_mu_xi(mu, xi),
        }
    }

    fn in_prior_support(&self, mu: f64) -> bool {
        match self {
            Self::Frechet(h) => mu >= h.mu_inf && mu < h.x_e1,
            Self::Weibull(h) => mu > h.x_e4 && mu <= h.mu_sup(),
        }
    }

    /// Integrated likelihood; `ξ` outside the model range gives `-inf`.
    pub(crate) fn collapsed(&self, mu: f64, xi: f64, data: &[f64]) -> Collapsed {
        if !(XI_MIN..=XI_MAX).contains(&xi) {
            return self.off_support(mu, xi);
        }
        self.integrate_nu(mu, xi, data)
    }

    fn off_support(&self, mu: f64, xi: f64) -> Collapsed {
        Collapsed {
            ln_prior_rate: self.ln_prior_rate(mu, xi),
            ln_sum_pow: f64::NAN,
            ll_rest: f64::NEG_INFINITY,
            ln_k: f64::NEG_INFINITY,
        }
    }

    fn integrate_nu(&self, mu: f64, xi: f64, data: &[f64]) -> Collapsed {
        if !(xi > 0.0) || !self.in_prior_support(mu) {
            return self.off_support(mu, xi);
        }
        let m = self.m();
        let n = data.len() as f64;
        let ln_prior_rate = self.ln_prior_rate(mu, xi);
        let inv = 1.0 / xi;
        let mut ln_pow = Vec::with_capacity(data.len());
        let mut sum_ln = 0.0;
        for &x in data {
            let d = match self {
                Self::Frechet(_) => x - mu,
                Self::Weibull(_) => mu - x,
            };
            if !(d > 0.0) {
                return self.off_support(mu, xi);
            }
            let l = d.ln();
            sum_ln += l;
            ln_pow.push(match self {
                Self::Frechet(_) => -l * inv,
                Self::Weibull(_) => l * inv,
            });
        }
        let ln_sum_pow = log_sum_exp(&ln_pow);
        let ll_rest = match self {
            Self::Frechet(_) => -n * xi.ln() - (inv + 1.0) * sum_ln,
            Self::Weibull(_) => -n * xi.ln() + (inv - 1.0) * sum_ln,
        };
        let c = Collapsed {
            ln_prior_rate,
            ln_sum_pow,
            ll_rest,
            ln_k: 0.0,
        };
        if data.is_empty() {
            return c;
        }
        Collapsed {
            ln_k: m * ln_prior_rate + ln_gamma(m + n) - ln_gamma(m) - (m + n) * c.ln_post_rate()
                + ll_rest,
            ..c
        }
    }
}

fn support_error(h: SemiConjugate<'_>, mu: f64) -> Error {
    match h {
        SemiConjugate::Frechet(_) => Error::domain(format!(
            "Fréchet conditional needs mu_inf <= mu < min(x_e1, data) (mu={mu})"
        )),
        SemiConjugate::Weibull(_) => Error::domain(format!(
            "Weibull conditional needs max(x_e4, data) < mu <= mu_sup (mu={mu})"
        )),
    }
}

/// `ν | μ, ξ, x ~ G(m + n, s + Σ t_i)` with `t_i = (x_i - μ)^{-1/ξ}` (Fréchet)
/// or `(μ - x_i)^{1/ξ}` (Weibull).
pub fn conditional_nu_posterior<'a>(
    h: impl Into<SemiConjugate<'a>>,
    mu: f64,
    xi: f64,
    data: &[f64],
) -> Result<GammaLaw> {
    let h = h.into();
    if !(xi > 0.0) {
        return Err(Error::domain(format!("xi must be positive, got {xi}")));
    }
    if !h.in_prior_support(mu) {
        return Err(support_error(h, mu));
    }
    let c = h.integrate_nu(mu, xi, data);
    if c.ll_rest == f64::NEG_INFINITY {
        return Err(support_error(h, mu));
    }
    Ok(GammaLaw {
        shape: h.m() + data.len() as f64,
        rate: c.ln_post_rate().exp(),
    })
}

/// Unnormalized `ln π(ξ | μ, x)`, `ν` integrated out.
pub fn log_conditional_xi<'a>(h: impl Into<SemiConjugate<'a>>, xi: f64, mu: f64, data: &[f64]) -> f64 {
    let h = h.into();
    if !(xi > 0.0) || !h.in_prior_support(mu) {
        return f64::NEG_INFINITY;
    }
    let scale = match h {
        SemiConjugate::Frechet(f) => f.s2_unchecked(mu),
        SemiConjugate::Weibull(w) => w.s4_unchecked(mu),
    };
    ln_inv_gamma_pdf(xi, h.m(), scale) + h.integrate_nu(mu, xi, data).ln_k
}

/// Unnormalized `ln π(μ | ν, ξ, x)`: joint prior times likelihood.
pub fn log_conditional_mu<'a>(
    h: impl Into<SemiConjugate<'a>>,
    mu: f64,
    nu: f64,
    xi: f64,
    data: &[f64],
) -> f64 {
    if !(nu > 0.0 && xi > 0.0 && mu.is_finite()) {
        return f64::NEG_INFINITY;
    }
    match h.into() {
        SemiConjugate::Frechet(f) => {
            let Ok(p) = FrechetParams::new(mu, nu, xi) else {
                return f64::NEG_INFINITY;
            };
            let lp = f.ln_prior(&p);
            if lp == f64::NEG_INFINITY {
                return lp;
            }
            lp + p.loglik(data)
        }
        SemiConjugate::Weibull(w) => {
            let Ok(p) = WeibullParams::new(mu, nu, xi) else {
                return f64::NEG_INFINITY;
            };
            let lp = w.ln_prior(&p);
            if lp == f64::NEG_INFINITY {
                return lp;
            }
            lp + p.loglik(data)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nu_posterior_examples() {
        let h = FrechetHyper::new(1.0, 100.0, 130.0, -10.0).unwrap();
        let g = conditional_nu_posterior(&h, 0.0, 1.0, &[1.0, 2.0]).unwrap();
        assert_eq!(g.shape, 3.0);
        assert_relative_eq!(g.rate, 1.51, epsilon = 1e-14);
        let prior = conditional_nu_posterior(&h, 0.0, 1.0, &[]).unwrap();
        assert_eq!(prior.shape, 1.0);
        assert_relative_eq!(prior.rate, h.s1(0.0, 1.0).unwrap(), epsilon = 1e-15);
        assert!(conditional_nu_posterior(&h, 1.5, 1.0, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn weibull_nu_posterior() {
        let h = WeibullHyper::new(2.0, 100.0, 130.0, 0.01).unwrap();
        let g = conditional_nu_posterior(&h, 200.0, 0.5, &[150.0, 190.0]).unwrap();
        assert_eq!(g.shape, 4.0);
        let expected = h.s3(200.0, 0.5).unwrap() + 50f64.powi(2) + 10f64.powi(2);
        assert_relative_eq!(g.rate, expected, max_relative = 1e-13);
        assert!(conditional_nu_posterior(&h, 180.0, 0.5, &[150.0, 190.0]).is_err());
    }

    #[test]
    fn xi_limits() {
        let h = FrechetHyper::new(3.0, 100.0, 130.0, 0.0).unwrap();
        assert_eq!(log_conditional_xi(&h, 0.0, 20.0, &[60.0]), f64::NEG_INFINITY);
        assert!(log_conditional_xi(&h, 1e-6, 20.0, &[60.0]) < log_conditional_xi(&h, 0.3, 20.0, &[60.0]) - 100.0);
    }

    #[test]
    fn mu_support() {
        let h = FrechetHyper::new(3.0, 100.0, 130.0, 0.0).unwrap();
        assert_eq!(log_conditional_mu(&h, 61.0, 1.0, 0.5, &[60.0, 80.0]), f64::NEG_INFINITY);
        assert!(log_conditional_mu(&h, 10.0, 1.0, 0.5, &[60.0, 80.0]).is_finite());
    }
}
