//! Metropolis-within-Gibbs sampler for the encompassing mixture posterior.
//!
//! The state concatenates the three model blocks. Each sweep updates every
//! block against the full mixture likelihood
//! `Σ_M π_M p_M(x | θ_M)`, holding the other blocks fixed:
//!
//! * Fréchet and Weibull: `(μ, ξ)` by Metropolis-Hastings with `ν`
//!   integrated out against its gamma prior, then `ν` exactly from its
//!   two-component gamma conditional.
//! * Gumbel: `(μ, σ)` by Metropolis-Hastings.
//!
//! Moves are random-walk steps on unconstrained coordinates (logit for a
//! bounded location, log for shapes and scales) mixed with independence
//! proposals from `½ prior + ½ t`, where the Student-t is fitted by a short
//! single-model pilot run. The independence moves let a block jump between
//! its prior-dominated and likelihood-dominated regions, which is how the
//! chain moves between mixture components.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conditionals::{Collapsed, SemiConjugate};
use super::diagnostics::{batch_means_se, rank_rhat};
use super::{MixtureConfig, MixtureState};
use crate::error::{Error, Result};
use crate::models::{FrechetParams, GumbelParams, Model, WeibullParams};
use crate::priors::{
    FrechetHyper, FrechetMuSampler, GumbelHyper, GumbelPriorSampler, SigmaMarginal, WeibullHyper,
    WeibullMuSampler,
};
use crate::special::{ln_gamma, log_add_exp, open01, softplus, std_gamma, std_normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcSettings {
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Probability of an independence move at each block update.
    pub independence_prob: f64,
    /// Length of each single-model pilot run.
    pub pilot_iterations: usize,
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self {
            chains: 4,
            iterations: 50_000,
            burn_in: 10_000,
            thin: 1,
            independence_prob: 0.3,
            pilot_iterations: 6_000,
        }
    }
}

impl McmcSettings {
    pub fn validate(&self) -> Result<()> {
        if self.chains < 2 {
            return Err(Error::config("at least 2 chains are needed for diagnostics"));
        }
        if self.thin == 0 {
            return Err(Error::config("thin must be at least 1"));
        }
        if self.iterations <= self.burn_in || (self.iterations - self.burn_in) / self.thin == 0 {
            return Err(Error::config("no draws remain after burn-in"));
        }
        if !(0.0..=1.0).contains(&self.independence_prob) {
            return Err(Error::config("independence_prob must lie in [0, 1]"));
        }
        Ok(())
    }

    fn kept_per_chain(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// Block priors of the encompassing model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixturePriors {
    pub frechet: FrechetHyper,
    pub weibull: WeibullHyper,
    pub gumbel: GumbelHyper,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub rw_tries: u64,
    pub rw_accepted: u64,
    pub ind_tries: u64,
    pub ind_accepted: u64,
}

impl MoveStats {
    pub fn rw_rate(&self) -> f64 {
        self.rw_accepted as f64 / self.rw_tries.max(1) as f64
    }

    pub fn ind_rate(&self) -> f64 {
        self.ind_accepted as f64 / self.ind_tries.max(1) as f64
    }

    fn add(&mut self, o: &MoveStats) {
        self.rw_tries += o.rw_tries;
        self.rw_accepted += o.rw_accepted;
        self.ind_tries += o.ind_tries;
        self.ind_accepted += o.ind_accepted;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub draws_per_chain: usize,
    /// Post-burn-in move statistics, indexed like [`Model::ALL`].
    pub moves: [MoveStats; 3],
    /// Rank-normalized split-R̂ per monitored coordinate.
    pub rhat: Vec<(String, f64)>,
    pub max_rhat: f64,
    pub converged: bool,
    /// Batch-means standard errors of the model probabilities.
    pub prob_mcse: [f64; 3],
    /// Whether a single-model pilot fit was available for each block.
    pub pilot_fitted: [bool; 3],
}

pub const RHAT_THRESHOLD: f64 = 1.1;

/// Retained draws of the mixture posterior, chain-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub states: Vec<MixtureState>,
    /// Per-draw model weights `W_M`, each triple summing to one.
    pub weights: Vec<[f64; 3]>,
    pub config: MixtureConfig,
    pub diagnostics: Diagnostics,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn chain(&self, c: usize) -> std::ops::Range<usize> {
        let n = self.diagnostics.draws_per_chain;
        c * n..(c + 1) * n
    }
}

// ---------------------------------------------------------------------------
// Blocks

#[derive(Debug, Clone)]
enum Kind {
    Frechet(FrechetHyper, FrechetMuSampler),
    Weibull(WeibullHyper, WeibullMuSampler),
    Gumbel(GumbelHyper, GumbelPriorSampler),
}

/// One model block in unconstrained coordinates `y`.
#[derive(Debug, Clone)]
struct Block {
    kind: Kind,
    /// Log normalizing constant of the `(μ, ξ)` or `(μ, σ)` prior.
    ln_norm: f64,
}

fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

fn logit_to(a: f64, b: f64, mu: f64) -> f64 {
    (mu - a).ln() - (b - mu).ln()
}

fn logit_from(a: f64, b: f64, y: f64) -> f64 {
    a + (b - a) * sigmoid(y)
}

fn logit_ln_jac(a: f64, b: f64, y: f64) -> f64 {
    (b - a).ln() - softplus(y) - softplus(-y)
}

/// Likelihood evaluation of a block at `(μ, ξ|σ)`.
#[derive(Debug, Clone, Copy)]
struct Eval {
    /// Collapsed (`ν`-integrated) log-likelihood, or the Gumbel log-likelihood.
    ln_lik: f64,
    collapsed: Option<Collapsed>,
}

impl Block {
    fn new(kind: Kind) -> Self {
        let ln_norm = match &kind {
            Kind::Frechet(h, _) => h.ln_mu_normalizer(),
            Kind::Weibull(h, _) => h.ln_mu_normalizer(),
            Kind::Gumbel(h, _) => SigmaMarginal::new(h, SigmaMarginal::DEFAULT_NODES).ln_norm(),
        };
        Self { kind, ln_norm }
    }

    fn model(&self) -> Model {
        match self.kind {
            Kind::Frechet(..) => Model::Frechet,
            Kind::Weibull(..) => Model::Weibull,
            Kind::Gumbel(..) => Model::Gumbel,
        }
    }

    fn semi(&self) -> Option<SemiConjugate<'_>> {
        match &self.kind {
            Kind::Frechet(h, _) => Some(SemiConjugate::Frechet(h)),
            Kind::Weibull(h, _) => Some(SemiConjugate::Weibull(h)),
            Kind::Gumbel(..) => None,
        }
    }

    /// Scale of the second coordinate given `μ`. Fréchet and Weibull use
    /// the conditional prior scale of `ξ`, which straightens the `ξ ∝ 1/μ`
    /// ridge of near-Gumbel posteriors; Gumbel uses `σ` as is.
    fn scale(&self, mu: f64) -> f64 {
        match &self.kind {
            Kind::Frechet(h, _) => h.s2_unchecked(mu),
            Kind::Weibull(h, _) => h.s4_unchecked(mu),
            Kind::Gumbel(..) => 1.0,
        }
    }

    fn mu_to_y(&self, mu: f64) -> f64 {
        match &self.kind {
            Kind::Frechet(h, _) => logit_to(h.mu_inf, h.x_e1, mu),
            Kind::Weibull(h, _) => logit_to(h.x_e4, h.mu_sup(), mu),
            Kind::Gumbel(h, _) => h.mu_floor().map_or(mu, |f| (mu - f).ln()),
        }
    }

    fn mu_from_y(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::Frechet(h, _) => logit_from(h.mu_inf, h.x_e1, y),
            Kind::Weibull(h, _) => logit_from(h.x_e4, h.mu_sup(), y),
            Kind::Gumbel(h, _) => h.mu_floor().map_or(y, |f| f + y.exp()),
        }
    }

    fn mu_ln_jac(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::Frechet(h, _) => logit_ln_jac(h.mu_inf, h.x_e1, y),
            Kind::Weibull(h, _) => logit_ln_jac(h.x_e4, h.mu_sup(), y),
            Kind::Gumbel(h, _) => h.mu_floor().map_or(0.0, |_| y),
        }
    }

    /// `y = (location map of μ, ln(v / scale(μ)))` for `v` the shape or scale.
    fn to_y(&self, p: [f64; 2]) -> [f64; 2] {
        [self.mu_to_y(p[0]), (p[1] / self.scale(p[0])).ln()]
    }

    fn from_y(&self, y: [f64; 2]) -> [f64; 2] {
        let mu = self.mu_from_y(y[0]);
        [mu, y[1].exp() * self.scale(mu)]
    }

    /// `ln |∂(μ, v) / ∂y|`; the map is triangular.
    fn ln_jac(&self, y: [f64; 2]) -> f64 {
        let mu = self.mu_from_y(y[0]);
        self.mu_ln_jac(y[0]) + y[1] + self.scale(mu).ln()
    }

    fn ln_prior(&self, p: [f64; 2]) -> f64 {
        match &self.kind {
            Kind::Frechet(h, _) => h.ln_prior_mu_xi(p[0], p[1]),
            Kind::Weibull(h, _) => h.ln_prior_mu_xi(p[0], p[1]),
            Kind::Gumbel(h, _) => h.log_prior(p[0], p[1]),
        }
    }

    fn eval(&self, p: [f64; 2], data: &[f64]) -> Eval {
        match self.semi() {
            Some(s) => {
                let c = s.collapsed(p[0], p[1], data);
                Eval {
                    ln_lik: c.ln_k,
                    collapsed: Some(c),
                }
            }
            None => Eval {
                ln_lik: GumbelParams {
                    mu: p[0],
                    sigma: p[1],
                }
                .loglik(data),
                collapsed: None,
            },
        }
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        match &self.kind {
            Kind::Frechet(h, s) => {
                let mu = s.sample(rng);
                [mu, h.s2_unchecked(mu) / std_gamma(rng, h.m)]
            }
            Kind::Weibull(h, s) => {
                let mu = s.sample(rng);
                [mu, h.s4_unchecked(mu) / std_gamma(rng, h.m)]
            }
            Kind::Gumbel(_, s) => {
                let g = s.sample(rng);
                [g.mu, g.sigma]
            }
        }
    }

    /// Normalized prior density in `y`.
    fn ln_prior_y(&self, y: [f64; 2]) -> f64 {
        self.ln_prior(self.from_y(y)) - self.ln_norm + self.ln_jac(y)
    }

    fn m(&self) -> f64 {
        match &self.kind {
            Kind::Frechet(h, _) => h.m,
            Kind::Weibull(h, _) => h.m,
            Kind::Gumbel(h, _) => h.m() as f64,
        }
    }
}

// ---------------------------------------------------------------------------
// Proposals

/// Bivariate Student-t in `y`.
#[derive(Debug, Clone, Copy)]
struct TFit {
    mean: [f64; 2],
    chol: [f64; 3],
    df: f64,
    ln_const: f64,
}

impl TFit {
    fn new(mean: [f64; 2], cov: [f64; 3], df: f64) -> Option<Self> {
        let chol = cholesky(cov)?;
        let ln_det = 2.0 * (chol[0].ln() + chol[2].ln());
        let ln_const = ln_gamma(0.5 * (df + 2.0)) - ln_gamma(0.5 * df)
            - (df * std::f64::consts::PI).ln()
            - 0.5 * ln_det;
        Some(Self {
            mean,
            chol,
            df,
            ln_const,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let z = [std_normal(rng), std_normal(rng)];
        let w = (self.df / (2.0 * std_gamma(rng, 0.5 * self.df))).sqrt();
        let c = &self.chol;
        [
            self.mean[0] + w * c[0] * z[0],
            self.mean[1] + w * (c[1] * z[0] + c[2] * z[1]),
        ]
    }

    fn ln_pdf(&self, y: [f64; 2]) -> f64 {
        let c = &self.chol;
        let u0 = (y[0] - self.mean[0]) / c[0];
        let u1 = (y[1] - self.mean[1] - c[1] * u0) / c[2];
        self.ln_const - 0.5 * (self.df + 2.0) * ((u0 * u0 + u1 * u1) / self.df).ln_1p()
    }
}

/// Lower Cholesky factor `[l00, l10, l11]` of `[[c0, c1], [c1, c2]]`.
fn cholesky(c: [f64; 3]) -> Option<[f64; 3]> {
    if !(c[0] > 0.0) {
        return None;
    }
    let l00 = c[0].sqrt();
    let l10 = c[1] / l00;
    let d = c[2] - l10 * l10;
    if !(d > 0.0) || !d.is_finite() {
        return None;
    }
    Some([l00, l10, d.sqrt()])
}

fn covariance(ys: &[[f64; 2]]) -> ([f64; 2], [f64; 3]) {
    let n = ys.len() as f64;
    let m0 = ys.iter().map(|y| y[0]).sum::<f64>() / n;
    let m1 = ys.iter().map(|y| y[1]).sum::<f64>() / n;
    let mut c = [0.0; 3];
    for y in ys {
        let (d0, d1) = (y[0] - m0, y[1] - m1);
        c[0] += d0 * d0;
        c[1] += d0 * d1;
        c[2] += d1 * d1;
    }
    let k = (n - 1.0).max(1.0);
    ([m0, m1], [c[0] / k, c[1] / k, c[2] / k])
}

/// Independence law `a · prior + (1 - a) · t` in `y`.
#[derive(Debug, Clone)]
struct Independence {
    fit: Option<TFit>,
}

impl Independence {
    const PRIOR_SHARE: f64 = 0.5;

    fn sample<R: Rng + ?Sized>(&self, b: &Block, rng: &mut R) -> [f64; 2] {
        match &self.fit {
            Some(t) if open01(rng) >= Self::PRIOR_SHARE => t.sample(rng),
            _ => b.to_y(b.sample_prior(rng)),
        }
    }

    fn ln_pdf(&self, b: &Block, y: [f64; 2]) -> f64 {
        let lp = b.ln_prior_y(y);
        match &self.fit {
            Some(t) => log_add_exp(
                Self::PRIOR_SHARE.ln() + lp,
                (1.0 - Self::PRIOR_SHARE).ln() + t.ln_pdf(y),
            ),
            None => lp,
        }
    }
}

/// Random-walk proposal `y + e^{log_scale} L z`.
#[derive(Debug, Clone, Copy)]
struct RandomWalk {
    chol: [f64; 3],
    log_scale: f64,
}

impl RandomWalk {
    fn step<R: Rng + ?Sized>(&self, y: [f64; 2], rng: &mut R) -> [f64; 2] {
        let z = [std_normal(rng), std_normal(rng)];
        let s = self.log_scale.exp();
        let c = &self.chol;
        [y[0] + s * c[0] * z[0], y[1] + s * (c[1] * z[0] + c[2] * z[1])]
    }
}

struct Pilot {
    proposal: Independence,
    rw: RandomWalk,
    start: Option<[f64; 2]>,
}

const PILOT_PRIOR_DRAWS: usize = 2000;
const PILOT_T_DF: f64 = 4.0;
const PILOT_INFLATION: f64 = 1.5;
const TARGET_ACCEPT: f64 = 0.3;
const ADAPT_BATCH: usize = 100;

/// Single-model pilot: fit a Student-t to the block posterior.
fn pilot<R: Rng + ?Sized>(b: &Block, data: &[f64], iterations: usize, rng: &mut R) -> Pilot {
    let prior_ys: Vec<[f64; 2]> = (0..PILOT_PRIOR_DRAWS)
        .map(|_| b.to_y(b.sample_prior(rng)))
        .filter(|y| y[0].is_finite() && y[1].is_finite())
        .collect();
    let (_, prior_cov) = covariance(&prior_ys);
    let fallback_rw = RandomWalk {
        chol: cholesky([prior_cov[0] * 0.01, 0.0, prior_cov[2] * 0.01]).unwrap_or([0.1, 0.0, 0.1]),
        log_scale: 0.0,
    };
    let none = |rw| Pilot {
        proposal: Independence { fit: None },
        rw,
        start: None,
    };
    let target = |y: [f64; 2]| -> f64 {
        let p = b.from_y(y);
        let lp = b.ln_prior(p);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp + b.ln_jac(y) + b.eval(p, data).ln_lik
    };
    let mut best: Option<([f64; 2], f64)> = None;
    for &y in &prior_ys {
        let t = target(y);
        if t.is_finite() && best.is_none_or(|(_, bt)| t > bt) {
            best = Some((y, t));
        }
    }
    let Some((mut y, mut cur)) = best else {
        return none(fallback_rw);
    };
    if iterations < 2 * ADAPT_BATCH {
        return none(fallback_rw);
    }
    let mut rw = fallback_rw;
    let mut history = Vec::with_capacity(iterations);
    let mut accepted = 0usize;
    let adapt_until = iterations / 2;
    for it in 0..iterations {
        let prop = rw.step(y, rng);
        let t = target(prop);
        if t.is_finite() && open01(rng).ln() < t - cur {
            y = prop;
            cur = t;
            accepted += 1;
        }
        history.push(y);
        if it < adapt_until && (it + 1) % ADAPT_BATCH == 0 {
            let rate = accepted as f64 / ADAPT_BATCH as f64;
            accepted = 0;
            rw.log_scale += rate - TARGET_ACCEPT;
            if it + 1 >= 5 * ADAPT_BATCH {
                let (_, c) = covariance(&history[history.len() / 2..]);
                if let Some(ch) = cholesky([c[0] * 2.8, c[1] * 2.8, c[2] * 2.8]) {
                    rw.chol = ch;
                    rw.log_scale = rw.log_scale.clamp(-3.0, 3.0);
                }
            }
        }
    }
    let (mean, cov) = covariance(&history[adapt_until..]);
    let k = PILOT_INFLATION * PILOT_INFLATION;
    let fit = TFit::new(mean, [cov[0] * k, cov[1] * k, cov[2] * k], PILOT_T_DF);
    Pilot {
        proposal: Independence { fit },
        rw,
        start: Some(y),
    }
}

// ---------------------------------------------------------------------------
// Chains

#[derive(Debug, Clone, Copy)]
struct BlockState {
    y: [f64; 2],
    p: [f64; 2],
    eval: Eval,
    ln_nu: f64,
    /// Full log-likelihood of the block at `(p, ν)`.
    ll: f64,
}

struct Chain<'a> {
    blocks: &'a [Block; 3],
    pilots: &'a [Pilot; 3],
    data: &'a [f64],
    ln_w: [f64; 3],
}

struct ChainOutput {
    states: Vec<MixtureState>,
    weights: Vec<[f64; 3]>,
    moves: [MoveStats; 3],
}

fn full_ll(b: &Block, e: &Eval, ln_nu: f64, n: f64) -> f64 {
    match &e.collapsed {
        Some(c) if c.ln_k > f64::NEG_INFINITY => n * ln_nu + c.ll_rest - (ln_nu + c.ln_sum_pow).exp(),
        Some(_) => f64::NEG_INFINITY,
        None => {
            debug_assert_eq!(b.model(), Model::Gumbel);
            e.ln_lik
        }
    }
}

impl Chain<'_> {
    fn others(&self, s: &[BlockState; 3], k: usize) -> f64 {
        let mut acc = f64::NEG_INFINITY;
        for j in 0..3 {
            if j != k {
                acc = log_add_exp(acc, self.ln_w[j] + s[j].ll);
            }
        }
        acc
    }

    fn ln_target(&self, k: usize, y: [f64; 2], ln_c: f64) -> (f64, [f64; 2], Eval) {
        let b = &self.blocks[k];
        let p = b.from_y(y);
        let lp = b.ln_prior(p);
        if lp == f64::NEG_INFINITY || !y[0].is_finite() || !y[1].is_finite() {
            let e = Eval {
                ln_lik: f64::NEG_INFINITY,
                collapsed: None,
            };
            return (f64::NEG_INFINITY, p, e);
        }
        let e = b.eval(p, self.data);
        let t = lp + b.ln_jac(y) + log_add_exp(self.ln_w[k] + e.ln_lik, ln_c);
        (t, p, e)
    }

    /// Exact draw of `ln ν` with `ν ~ C·G(m, s) + π_M K·G(m + n, s + S)`.
    fn draw_nu<R: Rng + ?Sized>(&self, k: usize, e: &Eval, ln_c: f64, rng: &mut R) -> f64 {
        let b = &self.blocks[k];
        let c = e.collapsed.expect("semi-conjugate block");
        let m = b.m();
        let n = self.data.len() as f64;
        let ln_post = self.ln_w[k] + c.ln_k;
        let p_post = if ln_post == f64::NEG_INFINITY {
            0.0
        } else {
            (ln_post - log_add_exp(ln_post, ln_c)).exp()
        };
        if open01(rng) < p_post {
            std_gamma(rng, m + n).ln() - c.ln_post_rate()
        } else {
            std_gamma(rng, m).ln() - c.ln_prior_rate
        }
    }

    fn update<R: Rng + ?Sized>(
        &self,
        k: usize,
        s: &mut [BlockState; 3],
        rw: &RandomWalk,
        p_ind: f64,
        stats: &mut MoveStats,
        rng: &mut R,
    ) -> bool {
        let b = &self.blocks[k];
        let ln_c = self.others(s, k);
        let (cur_t, _, _) = self.ln_target(k, s[k].y, ln_c);
        let ind = open01(rng) < p_ind;
        let q = &self.pilots[k].proposal;
        let prop = if ind {
            q.sample(b, rng)
        } else {
            rw.step(s[k].y, rng)
        };
        let (t, p, e) = self.ln_target(k, prop, ln_c);
        let ln_alpha = if ind {
            (t - q.ln_pdf(b, prop)) - (cur_t - q.ln_pdf(b, s[k].y))
        } else {
            t - cur_t
        };
        let accept = t > f64::NEG_INFINITY
            && (cur_t == f64::NEG_INFINITY || open01(rng).ln() < ln_alpha);
        if ind {
            stats.ind_tries += 1;
        } else {
            stats.rw_tries += 1;
        }
        if accept {
            if ind {
                stats.ind_accepted += 1;
            } else {
                stats.rw_accepted += 1;
            }
            s[k].y = prop;
            s[k].p = p;
            s[k].eval = e;
        }
        let n = self.data.len() as f64;
        if b.semi().is_some() {
            s[k].ln_nu = self.draw_nu(k, &s[k].eval, ln_c, rng);
        }
        s[k].ll = full_ll(b, &s[k].eval, s[k].ln_nu, n);
        accept
    }

    fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<[BlockState; 3]> {
        let n = self.data.len() as f64;
        for _ in 0..1000 {
            let mut s = [BlockState {
                y: [0.0; 2],
                p: [0.0; 2],
                eval: Eval {
                    ln_lik: f64::NEG_INFINITY,
                    collapsed: None,
                },
                ln_nu: 0.0,
                ll: f64::NEG_INFINITY,
            }; 3];
            for k in 0..3 {
                let b = &self.blocks[k];
                let mut y = self.pilots[k].proposal.sample(b, rng);
                if b.ln_prior(b.from_y(y)) == f64::NEG_INFINITY {
                    y = self.pilots[k].start.unwrap_or_else(|| b.to_y(b.sample_prior(rng)));
                }
                let p = b.from_y(y);
                let e = b.eval(p, self.data);
                let ln_nu = match &e.collapsed {
                    Some(c) if c.ln_k > f64::NEG_INFINITY => {
                        std_gamma(rng, b.m() + n).ln() - c.ln_post_rate()
                    }
                    Some(c) => std_gamma(rng, b.m()).ln() - c.ln_prior_rate,
                    None => 0.0,
                };
                s[k] = BlockState {
                    y,
                    p,
                    eval: e,
                    ln_nu,
                    ll: full_ll(b, &e, ln_nu, n),
                };
            }
            let total = (0..3).fold(f64::NEG_INFINITY, |a, k| log_add_exp(a, self.ln_w[k] + s[k].ll));
            if total.is_finite() {
                return Ok(s);
            }
        }
        Err(Error::Diagnostics(
            "no initial state with positive mixture likelihood".into(),
        ))
    }

    fn run<R: Rng + ?Sized>(&self, st: &McmcSettings, rng: &mut R) -> Result<ChainOutput> {
        let mut s = self.init(rng)?;
        let mut rws = [self.pilots[0].rw, self.pilots[1].rw, self.pilots[2].rw];
        let mut batch = [0usize; 3];
        let mut batch_tries = [0usize; 3];
        let mut moves = [MoveStats::default(); 3];
        let kept = st.kept_per_chain();
        let mut states = Vec::with_capacity(kept);
        let mut weights = Vec::with_capacity(kept);
        for it in 0..st.iterations {
            let burning = it < st.burn_in;
            for k in 0..3 {
                let mut stats = MoveStats::default();
                let acc = self.update(k, &mut s, &rws[k], st.independence_prob, &mut stats, rng);
                if burning {
                    if stats.rw_tries == 1 {
                        batch_tries[k] += 1;
                        batch[k] += acc as usize;
                        if batch_tries[k] == ADAPT_BATCH {
                            let rate = batch[k] as f64 / ADAPT_BATCH as f64;
                            rws[k].log_scale = (rws[k].log_scale + rate - TARGET_ACCEPT).clamp(-6.0, 4.0);
                            batch[k] = 0;
                            batch_tries[k] = 0;
                        }
                    }
                } else {
                    moves[k].add(&stats);
                }
            }
            if !burning && (it - st.burn_in) % st.thin == 0 {
                let lw: [f64; 3] = std::array::from_fn(|k| self.ln_w[k] + s[k].ll);
                let total = lw.iter().fold(f64::NEG_INFINITY, |a, &l| log_add_exp(a, l));
                weights.push(std::array::from_fn(|k| (lw[k] - total).exp()));
                states.push(MixtureState {
                    theta_f: FrechetParams {
                        mu: s[0].p[0],
                        ln_nu: s[0].ln_nu,
                        xi: s[0].p[1],
                    },
                    theta_w: WeibullParams {
                        mu: s[1].p[0],
                        ln_nu: s[1].ln_nu,
                        xi: s[1].p[1],
                    },
                    theta_g: GumbelParams {
                        mu: s[2].p[0],
                        sigma: s[2].p[1],
                    },
                });
            }
        }
        Ok(ChainOutput {
            states,
            weights,
            moves,
        })
    }
}

/// Sample the encompassing mixture posterior.
///
/// Chains run in parallel on independent streams derived from one seed
/// drawn from `rng`; the output is deterministic given that seed.
pub fn mixture_posterior_mcmc<R: Rng + ?Sized>(
    data: &[f64],
    priors: &MixturePriors,
    cfg: &MixtureConfig,
    settings: &McmcSettings,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    if data.is_empty() {
        return Err(Error::Data("mixture posterior needs at least one observation".into()));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("observations must be finite".into()));
    }
    cfg.validate()?;
    settings.validate()?;
    let seed: u64 = rng.random();
    let blocks = [
        Block::new(Kind::Frechet(
            priors.frechet,
            priors.frechet.mu_sampler(crate::priors::DEFAULT_C),
        )),
        Block::new(Kind::Weibull(
            priors.weibull,
            priors.weibull.mu_sampler(priors.weibull.default_c()),
        )),
        Block::new(Kind::Gumbel(
            priors.gumbel.clone(),
            priors.gumbel.exact_sampler(),
        )),
    ];
    let pilots: Vec<Pilot> = blocks
        .par_iter()
        .enumerate()
        .map(|(k, b)| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(1000 + k as u64);
            pilot(b, data, settings.pilot_iterations, &mut r)
        })
        .collect();
    let pilots: [Pilot; 3] = pilots.try_into().unwrap_or_else(|_| unreachable!());
    let chain = Chain {
        blocks: &blocks,
        pilots: &pilots,
        data,
        ln_w: cfg.ln_weights(),
    };
    let outputs: Vec<ChainOutput> = (0..settings.chains)
        .into_par_iter()
        .map(|c| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(c as u64);
            chain.run(settings, &mut r)
        })
        .collect::<Result<_>>()?;
    let per_chain = settings.kept_per_chain();
    let mut moves = [MoveStats::default(); 3];
    let mut states = Vec::with_capacity(per_chain * outputs.len());
    let mut weights = Vec::with_capacity(per_chain * outputs.len());
    for o in &outputs {
        for k in 0..3 {
            moves[k].add(&o.moves[k]);
        }
    }
    for o in outputs {
        states.extend(o.states);
        weights.extend(o.weights);
    }
    let (rhat, prob_mcse) = monitor(&states, &weights, settings.chains, per_chain);
    let max_rhat = rhat
        .iter()
        .map(|r| r.1)
        .filter(|r| r.is_finite())
        .fold(1.0, f64::max);
    let converged = rhat.iter().all(|r| !(r.1 > RHAT_THRESHOLD));
    Ok(PosteriorDraws {
        states,
        weights,
        config: *cfg,
        diagnostics: Diagnostics {
            chains: settings.chains,
            iterations: settings.iterations,
            burn_in: settings.burn_in,
            thin: settings.thin,
            draws_per_chain: per_chain,
            moves,
            rhat,
            max_rhat,
            converged,
            prob_mcse,
            pilot_fitted: std::array::from_fn(|k| pilots[k].proposal.fit.is_some()),
        },
    })
}

/// Monitored coordinates: the model weights, and each block's parameters
/// (weighted blocks only matter, but prior-dominated blocks must mix too).
fn monitor(
    states: &[MixtureState],
    weights: &[[f64; 3]],
    chains: usize,
    per_chain: usize,
) -> (Vec<(String, f64)>, [f64; 3]) {
    let coords: Vec<(&str, Box<dyn Fn(usize) -> f64>)> = vec![
        ("frechet.mu", Box::new(|i| states[i].theta_f.mu)),
        ("frechet.ln_nu", Box::new(|i| states[i].theta_f.ln_nu)),
        ("frechet.xi", Box::new(|i| states[i].theta_f.xi)),
        ("weibull.mu", Box::new(|i| states[i].theta_w.mu)),
        ("weibull.ln_nu", Box::new(|i| states[i].theta_w.ln_nu)),
        ("weibull.xi", Box::new(|i| states[i].theta_w.xi)),
        ("gumbel.mu", Box::new(|i| states[i].theta_g.mu)),
        ("gumbel.sigma", Box::new(|i| states[i].theta_g.sigma)),
        ("w.frechet", Box::new(|i| weights[i][0])),
        ("w.weibull", Box::new(|i| weights[i][1])),
        ("w.gumbel", Box::new(|i| weights[i][2])),
    ];
    let series = |f: &dyn Fn(usize) -> f64| -> Vec<Vec<f64>> {
        (0..chains)
            .map(|c| (c * per_chain..(c + 1) * per_chain).map(f).collect())
            .collect()
    };
    let mut rhat = Vec::with_capacity(coords.len());
    let mut mcse = [f64::NAN; 3];
    for (name, f) in &coords {
        let s = series(f.as_ref());
        let refs: Vec<&[f64]> = s.iter().map(|v| v.as_slice()).collect();
        rhat.push((name.to_string(), rank_rhat(&refs)));
        if let Some(k) = ["w.frechet", "w.weibull", "w.gumbel"].iter().position(|n| n == name) {
            mcse[k] = batch_means_se(&refs, 20);
        }
    }
    (rhat, mcse)
}
