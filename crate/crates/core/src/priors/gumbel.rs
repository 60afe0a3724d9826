//! Conjugate virtual-data prior for the Gumbel model.
//!
//! ```text
//! π(μ, σ) ∝ σ^{-m} exp( m (μ - x̄)/σ - Σ_i exp(-(x̃_i - μ)/σ) )
//! ```
//!
//! Integrating `μ` out in closed form (`t = e^{μ/σ}` is gamma distributed
//! given `σ`) leaves a one-dimensional marginal on `σ`, tabulated on a
//! log-spaced grid by [`SigmaMarginal`]. That table backs both the exact
//! prior sampler and the quadrature prior predictive used for calibration.
//! An optional lower bound on `μ` truncates the prior.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::GumbelParams;
use crate::special::{
    ess_from_log_weights, ln_upper_gamma_q_int, log_sum_exp, open01, std_gamma, GridInverse,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GumbelHyper {
    virtual_data: Vec<f64>,
    /// Lower bound on `μ`, if any.
    #[serde(default)]
    mu_floor: Option<f64>,
}

impl GumbelHyper {
    /// `virtual_data` must hold at least three strictly increasing values.
    pub fn new(virtual_data: Vec<f64>, mu_floor: Option<f64>) -> Result<Self> {
        if virtual_data.len() < 3 {
            return Err(Error::domain(format!(
                "Gumbel prior needs at least 3 virtual points, got {}",
                virtual_data.len()
            )));
        }
        if virtual_data.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("virtual data must be finite"));
        }
        if virtual_data.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("virtual data must be strictly increasing"));
        }
        if let Some(f) = mu_floor {
            if !f.is_finite() {
                return Err(Error::domain("mu_floor must be finite"));
            }
        }
        Ok(Self {
            virtual_data,
            mu_floor,
        })
    }

    pub fn m(&self) -> usize {
        self.virtual_data.len()
    }

    pub fn virtual_data(&self) -> &[f64] {
        &self.virtual_data
    }

    pub fn mu_floor(&self) -> Option<f64> {
        self.mu_floor
    }

    pub fn mean_virtual(&self) -> f64 {
        self.virtual_data.iter().sum::<f64>() / self.m() as f64
    }

    /// Unnormalized log prior; `-inf` for `σ ≤ 0` or `μ` under the floor.
    pub fn log_prior(&self, mu: f64, sigma: f64) -> f64 {
        if !(sigma > 0.0) || self.mu_floor.is_some_and(|f| mu < f) {
            return f64::NEG_INFINITY;
        }
        let m = self.m() as f64;
        let tail: f64 = self
            .virtual_data
            .iter()
            .map(|x| (-(x - mu) / sigma).exp())
            .sum();
        -m * sigma.ln() + m * (mu - self.mean_virtual()) / sigma - tail
    }

    /// Unnormalized log posterior after observing `data`: the prior with the
    /// observations pooled into the virtual sample.
    pub fn log_posterior(&self, mu: f64, sigma: f64, data: &[f64]) -> f64 {
        if !(sigma > 0.0) || self.mu_floor.is_some_and(|f| mu < f) {
            return f64::NEG_INFINITY;
        }
        let m = self.m() as f64;
        let n = data.len() as f64;
        let pooled_mean =
            (self.virtual_data.iter().sum::<f64>() + data.iter().sum::<f64>()) / (m + n);
        let tail: f64 = self
            .virtual_data
            .iter()
            .chain(data.iter())
            .map(|x| (-(x - mu) / sigma).exp())
            .sum();
        -(m + n) * sigma.ln() + (m + n) * (mu - pooled_mean) / sigma - tail
    }

    /// Sampling-importance-resampling prior draws.
    ///
    /// Proposals: `μ - floor ~ Exp(mean α)` (floor 0 when unset) and
    /// `σ ~ IG(m - 1, m x̄)`; weights
    /// `λ_i ∝ exp{μ_i (m/σ_i + 1/α) - Σ_j exp(-(x̃_j - μ_i)/σ_i)}`.
    pub fn sample_sir<R: Rng + ?Sized>(
        &self,
        alpha: f64,
        n_proposals: usize,
        rng: &mut R,
    ) -> Result<SirSample> {
        if !(alpha > 0.0) || n_proposals == 0 {
            return Err(Error::domain("SIR needs alpha > 0 and at least one proposal"));
        }
        let m = self.m() as f64;
        let scale = m * self.mean_virtual();
        if !(scale > 0.0) {
            return Err(Error::domain(
                "SIR inverse-gamma proposal needs a positive virtual mean",
            ));
        }
        let floor = self.mu_floor.unwrap_or(0.0);
        let mut proposals = Vec::with_capacity(n_proposals);
        let mut log_w = Vec::with_capacity(n_proposals);
        for _ in 0..n_proposals {
            let mu = floor - alpha * open01(rng).ln();
            let sigma = scale / std_gamma(rng, m - 1.0);
            let tail: f64 = self
                .virtual_data
                .iter()
                .map(|x| (-(x - mu) / sigma).exp())
                .sum();
            log_w.push(mu * (m / sigma + 1.0 / alpha) - tail);
            proposals.push(GumbelParams { mu, sigma });
        }
        let lse = log_sum_exp(&log_w);
        if !lse.is_finite() {
            return Err(Error::Diagnostics("all SIR weights vanish".into()));
        }
        let ess = ess_from_log_weights(&log_w);
        let weights = log_w.iter().map(|l| (l - lse).exp()).collect();
        Ok(SirSample {
            proposals,
            weights,
            ess,
        })
    }

    /// Exact sampler through the tabulated `σ` marginal.
    pub fn exact_sampler(&self) -> GumbelPriorSampler {
        GumbelPriorSampler::new(self, SigmaMarginal::DEFAULT_NODES)
    }
}

/// Weighted SIR proposals; resample to get prior draws.
#[derive(Debug, Clone)]
pub struct SirSample {
    pub proposals: Vec<GumbelParams>,
    /// Normalized weights, summing to one.
    pub weights: Vec<f64>,
    pub ess: f64,
}

impl SirSample {
    /// Multinomial resampling of `n` draws.
    pub fn resample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<GumbelParams> {
        let mut cum = Vec::with_capacity(self.weights.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cum.push(acc);
        }
        (0..n)
            .map(|_| {
                let u = open01(rng) * acc;
                let i = cum.partition_point(|&c| c < u).min(cum.len() - 1);
                self.proposals[i]
            })
            .collect()
    }
}

/// Marginal prior of `σ` on a log grid, with the per-node quantities needed
/// to integrate the location analytically.
#[derive(Debug, Clone)]
pub struct SigmaMarginal {
    m: u32,
    floor: Option<f64>,
    /// `ln σ` nodes.
    pub(crate) log_sigma: Vec<f64>,
    /// Normalized trapezoid weights of the marginal in `ln σ`.
    pub(crate) weights: Vec<f64>,
    /// `ln A(σ) = ln Σ exp(-x̃_i/σ)`.
    pub(crate) ln_a: Vec<f64>,
    /// `ln Q(m, t0 A)` with `t0 = e^{floor/σ}`, 0 without floor.
    pub(crate) ln_q: Vec<f64>,
    /// log density at each node, kept for tabulated inversion.
    log_density: Vec<f64>,
    ln_norm: f64,
}

impl SigmaMarginal {
    pub const DEFAULT_NODES: usize = 2000;

    pub fn new(h: &GumbelHyper, nodes: usize) -> Self {
        let nodes = nodes.max(16);
        let m = h.m() as u32;
        let mf = m as f64;
        let xbar = h.mean_virtual();
        let x = h.virtual_data();
        let spread_low = xbar - x[0];
        let span = x[x.len() - 1] - x[0];
        let lo = (spread_low / 80.0).ln();
        let hi = (span * 1e6).ln();
        let mut log_sigma = Vec::with_capacity(nodes);
        let mut ln_a = Vec::with_capacity(nodes);
        let mut ln_q = Vec::with_capacity(nodes);
        let mut log_density = Vec::with_capacity(nodes);
        let mut buf = vec![0.0; x.len()];
        for i in 0..nodes {
            let u = lo + (hi - lo) * i as f64 / (nodes - 1) as f64;
            let s = u.exp();
            for (b, xi) in buf.iter_mut().zip(x) {
                *b = -xi / s;
            }
            let la = log_sum_exp(&buf);
            for (b, xi) in buf.iter_mut().zip(x) {
                *b = -(xi - xbar) / s;
            }
            let centred = log_sum_exp(&buf);
            let lq = match h.mu_floor() {
                Some(f) => ln_upper_gamma_q_int(m, (la + f / s).exp()),
                None => 0.0,
            };
            // (2 - m) ln σ - m ln Σ exp(-(x̃_i - x̄)/σ) + ln Q
            log_density.push((2.0 - mf) * u - mf * centred + lq);
            log_sigma.push(u);
            ln_a.push(la);
            ln_q.push(lq);
        }
        let max = log_density
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let du = (hi - lo) / (nodes - 1) as f64;
        let mut weights: Vec<f64> = log_density
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let end = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
                end * du * (l - max).exp()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        // ∫∫ prior dμ dσ = Γ(m) ∫ exp(log_density(u)) du
        let ln_norm = max + total.ln() + crate::special::ln_gamma(mf);
        Self {
            m,
            floor: h.mu_floor(),
            log_sigma,
            weights,
            ln_a,
            ln_q,
            log_density,
            ln_norm,
        }
    }

    /// Log normalizing constant of [`GumbelHyper::log_prior`].
    pub fn ln_norm(&self) -> f64 {
        self.ln_norm
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn floor(&self) -> Option<f64> {
        self.floor
    }
}

/// Exact prior sampler: `σ` by inversion of its tabulated marginal, then
/// `s = t A(σ) ~ Gamma(m, 1)` truncated to `s ≥ t0 A` and `μ = σ ln(s/A)`.
#[derive(Debug, Clone)]
pub struct GumbelPriorSampler {
    hyper: GumbelHyper,
    grid: GridInverse,
}

impl GumbelPriorSampler {
    pub fn new(h: &GumbelHyper, nodes: usize) -> Self {
        let marg = SigmaMarginal::new(h, nodes);
        let grid = GridInverse::new(marg.log_sigma.clone(), &marg.log_density)
            .expect("sigma marginal is positive on its grid");
        Self {
            hyper: h.clone(),
            grid,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GumbelParams {
        let sigma = self.grid.sample(rng).exp();
        let x = self.hyper.virtual_data();
        let terms: Vec<f64> = x.iter().map(|v| -v / sigma).collect();
        let ln_a = log_sum_exp(&terms);
        let m = self.hyper.m() as f64;
        let s = match self.hyper.mu_floor() {
            None => std_gamma(rng, m),
            Some(f) => truncated_gamma(rng, m, (ln_a + f / sigma).exp()),
        };
        let mut mu = sigma * (s.ln() - ln_a);
        if let Some(f) = self.hyper.mu_floor() {
            mu = mu.max(f);
        }
        GumbelParams { mu, sigma }
    }
}

/// Gamma(shape, 1) conditioned on exceeding `lower`.
fn truncated_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, lower: f64) -> f64 {
    if lower <= shape {
        loop {
            let s = std_gamma(rng, shape);
            if s >= lower {
                return s;
            }
        }
    }
    // shifted exponential envelope with rate 1 - (shape - 1)/lower
    let rate = 1.0 - (shape - 1.0) / lower;
    loop {
        let s = lower - open01(rng).ln() / rate;
        let log_acc = (shape - 1.0) * (s / lower).ln() - (1.0 - rate) * (s - lower);
        if open01(rng).ln() <= log_acc {
            return s;
        }
    }
}
