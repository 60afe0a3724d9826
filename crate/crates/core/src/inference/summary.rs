//! Posterior summaries: model probabilities, per-model weighted samples,
//! the mixture predictive and its return levels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mcmc::{Diagnostics, PosteriorDraws};
use crate::error::{Error, Result};
use crate::models::{DomainParams, Model};

/// Posterior model probabilities: the mean of the per-draw weights.
///
/// The sum is divided by its own total rather than the draw count; the two
/// agree up to rounding, and this way the result sums to one to an ulp.
pub fn model_posterior_probs(draws: &PosteriorDraws) -> [f64; 3] {
    let mut p = [0.0; 3];
    for w in &draws.weights {
        for k in 0..3 {
            p[k] += w[k];
        }
    }
    let total: f64 = p.iter().sum();
    if !(total > 0.0) {
        return [f64::NAN; 3];
    }
    p.map(|x| x / total)
}

/// Draws of one block weighted by its model weight `W_M`; a weighted sample
/// of that model's posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub model: Model,
    pub params: Vec<DomainParams>,
    pub weights: Vec<f64>,
}

impl WeightedSample {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Kish effective sample size.
    pub fn ess(&self) -> f64 {
        let s: f64 = self.total_weight();
        let s2: f64 = self.weights.iter().map(|w| w * w).sum();
        s * s / s2
    }

    pub fn mean(&self, f: impl Fn(&DomainParams) -> f64) -> f64 {
        let s = self.total_weight();
        self.params.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum::<f64>() / s
    }

    /// Weighted quantile (lower inverse of the weighted empirical CDF).
    pub fn quantile(&self, f: impl Fn(&DomainParams) -> f64, q: f64) -> f64 {
        let mut v: Vec<(f64, f64)> = self
            .params
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(p, w)| (f(p), *w))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let target = q * v.iter().map(|x| x.1).sum::<f64>();
        let mut acc = 0.0;
        for &(x, w) in &v {
            acc += w;
            if acc >= target {
                return x;
            }
        }
        v.last().map_or(f64::NAN, |x| x.0)
    }

    /// Multinomial resampling to an unweighted sample.
    pub fn resample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<DomainParams> {
        let total = self.total_weight();
        let mut cum = Vec::with_capacity(self.weights.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w / total;
            cum.push(acc);
        }
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let i = cum.partition_point(|&c| c < u).min(cum.len() - 1);
                self.params[i]
            })
            .collect()
    }
}

/// Weighted posterior sample of model `m`. Fails when the model carries
/// no posterior weight.
pub fn per_model_posterior(draws: &PosteriorDraws, m: Model) -> Result<WeightedSample> {
    let k = m.index();
    let weights: Vec<f64> = draws.weights.iter().map(|w| w[k]).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || total < 1e-300 * weights.len() as f64 {
        return Err(Error::Diagnostics(format!("{m} carries no posterior weight")));
    }
    let params = draws
        .states
        .iter()
        .map(|s| match m {
            Model::Frechet => DomainParams::Frechet(s.theta_f),
            Model::Weibull => DomainParams::Weibull(s.theta_w),
            Model::Gumbel => DomainParams::Gumbel(s.theta_g),
        })
        .collect();
    Ok(WeightedSample {
        model: m,
        params,
        weights,
    })
}

/// Draws used for predictive evaluation.
pub const PREDICTIVE_MAX_DRAWS: usize = 20_000;

fn predictive_subset(draws: &PosteriorDraws) -> impl Iterator<Item = usize> + Clone {
    let n = draws.len();
    let stride = n.div_ceil(PREDICTIVE_MAX_DRAWS).max(1);
    (0..n).step_by(stride)
}

/// Posterior predictive CDF `mean_s Σ_M W_M F_M(x | θ_M)`.
pub fn predictive_cdf(draws: &PosteriorDraws, x: f64) -> f64 {
    let idx = predictive_subset(draws);
    let mut acc = 0.0;
    let mut n = 0usize;
    for i in idx {
        let (s, w) = (&draws.states[i], &draws.weights[i]);
        for m in Model::ALL {
            let wk = w[m.index()];
            if wk > 0.0 {
                acc += wk * s.cdf(m, x);
            }
        }
        n += 1;
    }
    acc / n as f64
}

/// Posterior predictive quantile by bisection.
///
/// The mixture quantile lies between the smallest and the largest
/// component quantile, which bracket the search.
pub fn predictive_quantile(draws: &PosteriorDraws, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("probability {q} outside (0, 1)")));
    }
    if draws.is_empty() {
        return Err(Error::domain("no posterior draws"));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in predictive_subset(draws) {
        let s = &draws.states[i];
        for m in Model::ALL {
            if draws.weights[i][m.index()] > 0.0 {
                let p: DomainParams = match m {
                    Model::Frechet => s.theta_f.into(),
                    Model::Weibull => s.theta_w.into(),
                    Model::Gumbel => s.theta_g.into(),
                };
                let x = p.quantile(q)?;
                if x.is_finite() {
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
            }
        }
    }
    if !(lo <= hi) {
        return Err(Error::Diagnostics("predictive quantile has no finite bracket".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= 1e-12 * mid.abs().max(1.0) {
            break;
        }
        if predictive_cdf(draws, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Level exceeded on average once every `t` blocks.
pub fn return_level(draws: &PosteriorDraws, t: f64) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::domain(format!("return period must exceed 1, got {t}")));
    }
    predictive_quantile(draws, 1.0 - 1.0 / t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
}

impl ParamSummary {
    fn of(s: &WeightedSample, f: impl Fn(&DomainParams) -> f64 + Copy) -> Self {
        Self {
            mean: s.mean(f),
            q025: s.quantile(f, 0.025),
            q975: s.quantile(f, 0.975),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: Model,
    pub probability: f64,
    /// `(name, summary)` pairs: `mu, ln_nu, xi, sigma` or `mu, sigma`.
    pub params: Vec<(String, ParamSummary)>,
    /// Posterior summary of the shape in GEV convention.
    pub gev_shape: Option<ParamSummary>,
    pub ess: f64,
}

/// Tail verdict: the most probable model and its shape in GEV convention
/// (`+ξ` Fréchet, `-ξ` Weibull, `0` Gumbel).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeVerdict {
    pub model: Model,
    pub sign: i8,
    pub gev_shape: f64,
    /// Model-averaged posterior mean of the GEV shape.
    pub bma_shape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnLevel {
    pub period: f64,
    pub level: f64,
}

pub const RETURN_PERIODS: [f64; 3] = [10.0, 50.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub model_probs: [f64; 3],
    pub prob_mcse: [f64; 3],
    pub models: Vec<ModelSummary>,
    pub verdict: ShapeVerdict,
    pub return_levels: Vec<ReturnLevel>,
    pub diagnostics: Diagnostics,
    pub flags: Vec<String>,
    pub provenance: Provenance,
}

/// Signed GEV shape of a parameter vector.
pub fn gev_shape(p: &DomainParams) -> f64 {
    match p {
        DomainParams::Frechet(f) => f.xi,
        DomainParams::Weibull(w) => -w.xi,
        DomainParams::Gumbel(_) => 0.0,
    }
}

/// Relative spread of the data under which the Gumbel scale is flagged as
/// near-singular.
const DEGENERATE_SPREAD: f64 = 1e-9;

impl SelectionReport {
    pub fn from_draws(draws: &PosteriorDraws, data: &[f64], provenance: Provenance) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::Diagnostics("no posterior draws".into()));
        }
        let probs = model_posterior_probs(draws);
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diagnostics("model weights vanish at every draw".into()));
        }
        let mut models = Vec::with_capacity(3);
        let mut bma_shape = 0.0;
        for m in Model::ALL {
            let Ok(s) = per_model_posterior(draws, m) else {
                models.push(ModelSummary {
                    model: m,
                    probability: probs[m.index()],
                    params: Vec::new(),
                    gev_shape: None,
                    ess: 0.0,
                });
                continue;
            };
            let params = match m {
                Model::Gumbel => vec![
                    ("mu".into(), ParamSummary::of(&s, |p| gumbel(p).0)),
                    ("sigma".into(), ParamSummary::of(&s, |p| gumbel(p).1)),
                ],
                _ => vec![
                    ("mu".into(), ParamSummary::of(&s, |p| semi(p)[0])),
                    ("ln_nu".into(), ParamSummary::of(&s, |p| semi(p)[1])),
                    ("xi".into(), ParamSummary::of(&s, |p| semi(p)[2])),
                    ("sigma".into(), ParamSummary::of(&s, |p| semi(p)[3])),
                ],
            };
            let shape = ParamSummary::of(&s, gev_shape);
            bma_shape += probs[m.index()] * shape.mean;
            models.push(ModelSummary {
                model: m,
                probability: probs[m.index()],
                params,
                gev_shape: (m != Model::Gumbel).then_some(shape),
                ess: s.ess(),
            });
        }
        let best = Model::ALL
            .into_iter()
            .max_by(|a, b| probs[a.index()].total_cmp(&probs[b.index()]))
            .expect("three models");
        let best_shape = models[best.index()].gev_shape.map_or(0.0, |s| s.mean);
        let verdict = ShapeVerdict {
            model: best,
            sign: match best {
                Model::Frechet => 1,
                Model::Weibull => -1,
                Model::Gumbel => 0,
            },
            gev_shape: best_shape,
            bma_shape,
        };
        let return_levels = RETURN_PERIODS
            .iter()
            .map(|&t| return_level(draws, t).map(|level| ReturnLevel { period: t, level }))
            .collect::<Result<_>>()?;
        let mut flags = Vec::new();
        if !draws.diagnostics.converged {
            flags.push(format!(
                "not converged: max R-hat {:.3} exceeds {}",
                draws.diagnostics.max_rhat,
                super::mcmc::RHAT_THRESHOLD
            ));
        }
        if is_degenerate(data) {
            flags.push("degenerate data: all observations equal, Gumbel scale near-singular".into());
        }
        Ok(Self {
            model_probs: probs,
            prob_mcse: draws.diagnostics.prob_mcse,
            models,
            verdict,
            return_levels,
            diagnostics: draws.diagnostics.clone(),
            flags,
            provenance,
        })
    }

    pub fn converged(&self) -> bool {
        self.diagnostics.converged
    }
}

fn is_degenerate(data: &[f64]) -> bool {
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    data.len() > 1 && hi - lo <= DEGENERATE_SPREAD * hi.abs().max(1.0)
}

fn gumbel(p: &DomainParams) -> (f64, f64) {
    match p {
        DomainParams::Gumbel(g) => (g.mu, g.sigma),
        _ => unreachable!("Gumbel sample"),
    }
}

fn semi(p: &DomainParams) -> [f64; 4] {
    match p {
        DomainParams::Frechet(f) => [f.mu, f.ln_nu, f.xi, f.sigma()],
        DomainParams::Weibull(w) => [w.mu, w.ln_nu, w.xi, w.sigma()],
        DomainParams::Gumbel(_) => unreachable!("semi-conjugate sample"),
    }
}
