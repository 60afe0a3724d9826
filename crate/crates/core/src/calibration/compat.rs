use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::predictive::{GumbelPredictive, PredictiveCdf, PriorPredictive};
use super::{CalibrationResult, PriorSpec};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::priors::GumbelHyper;

pub const KL_BINS: usize = 512;
pub const KL_SMOOTHING: f64 = 1e-9;
/// Pooled predictive range retained for the histogram.
const RANGE: (f64, f64) = (0.001, 0.999);

/// `KL(a ‖ b) = Σ a ln(a/b)` over common bins, after normalizing each mass
/// vector and adding [`KL_SMOOTHING`]. Disjoint supports give `+inf`.
pub fn kl_marginal(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "histograms must share bins");
    if !a.iter().zip(b).any(|(&p, &q)| p > 0.0 && q > 0.0) {
        return f64::INFINITY;
    }
    let smooth = |v: &[f64]| -> Vec<f64> {
        let s: f64 = v.iter().sum();
        let raw: Vec<f64> = v.iter().map(|x| x / s + KL_SMOOTHING).collect();
        let t: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / t).collect()
    };
    let (p, q) = (smooth(a), smooth(b));
    p.iter()
        .zip(&q)
        .map(|(&p, &q)| p * (p / q).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Histogram KL between two samples over the pooled 0.1%–99.9% range.
pub fn histogram_kl(a: &[f64], b: &[f64]) -> f64 {
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().filter(|x| x.is_finite()).collect();
    if pooled.is_empty() {
        return f64::INFINITY;
    }
    pooled.sort_by(|x, y| x.total_cmp(y));
    let q = |p: f64| pooled[((pooled.len() - 1) as f64 * p).round() as usize];
    let (lo, hi) = (q(RANGE.0), q(RANGE.1));
    if !(hi > lo) {
        return 0.0;
    }
    let width = (hi - lo) / KL_BINS as f64;
    let hist = |s: &[f64]| -> Vec<f64> {
        let mut h = vec![0.0; KL_BINS];
        for &x in s {
            if x >= lo && x <= hi {
                h[(((x - lo) / width) as usize).min(KL_BINS - 1)] += 1.0;
            }
        }
        h
    };
    kl_marginal(&hist(a), &hist(b))
}

/// Interior edges of [`KL_BINS`] cells of equal mass under `reference`; the
/// two end cells are open, so no mass of either predictive is dropped
/// however heavy its tails.
fn reference_edges(reference: &dyn PredictiveCdf) -> Vec<f64> {
    (1..KL_BINS)
        .map(|i| reference.quantile(i as f64 / KL_BINS as f64))
        .collect()
}

/// Cell masses of a CDF evaluated at interior edges.
fn cell_masses(interior_cdf: &[f64]) -> Vec<f64> {
    let mut c = Vec::with_capacity(interior_cdf.len() + 2);
    c.push(0.0);
    c.extend_from_slice(interior_cdf);
    c.push(1.0);
    c.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatEntry {
    pub m: f64,
    pub kl: f64,
    pub calibration: CalibrationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityResult {
    pub model: Model,
    pub m_star: f64,
    pub entries: Vec<CompatEntry>,
}

impl CompatibilityResult {
    pub fn selected(&self) -> &CalibrationResult {
        &self
            .entries
            .iter()
            .find(|e| e.m == self.m_star)
            .expect("m_star comes from the entries")
            .calibration
    }
}

/// Select the virtual size whose calibrated prior predictive is closest,
/// in `KL(g_Σ ‖ g_G)`, to the Gumbel prior predictive.
///
/// `calibrations` must all be Fréchet or all Weibull. Each predictive is
/// estimated from `n_draws` exact prior draws with `ν` integrated out. Ties
/// go to the smaller `m`.
pub fn calibrate_virtual_size<R: Rng + ?Sized>(
    calibrations: &[CalibrationResult],
    gumbel: &GumbelHyper,
    n_draws: usize,
    rng: &mut R,
) -> Result<CompatibilityResult> {
    if calibrations.is_empty() {
        return Err(Error::config("no candidate virtual sizes"));
    }
    let model = match calibrations[0].hyper {
        PriorSpec::Frechet(_) => Model::Frechet,
        PriorSpec::Weibull(_) => Model::Weibull,
        PriorSpec::Gumbel(_) => {
            return Err(Error::config("virtual-size selection applies to Fréchet or Weibull"))
        }
    };
    let m_of = |c: &CalibrationResult| match &c.hyper {
        PriorSpec::Frechet(h) if model == Model::Frechet => Ok(h.m),
        PriorSpec::Weibull(h) if model == Model::Weibull => Ok(h.m),
        _ => Err(Error::config("candidate calibrations mix models")),
    };
    let ms = calibrations.iter().map(m_of).collect::<Result<Vec<_>>>()?;
    let g = GumbelPredictive::new(gumbel, GumbelPredictive::DEFAULT_NODES);
    let edges = reference_edges(&g);
    let q = cell_masses(&edges.iter().map(|&x| g.cdf(x)).collect::<Vec<_>>());
    let seeds: Vec<u64> = calibrations.iter().map(|_| rng.random()).collect();
    let kls: Vec<f64> = calibrations
        .par_iter()
        .zip(&seeds)
        .map(|(c, &seed)| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let p = match &c.hyper {
                PriorSpec::Frechet(h) => PriorPredictive::frechet(h, n_draws, &mut r),
                PriorSpec::Weibull(h) => PriorPredictive::weibull(h, n_draws, &mut r),
                PriorSpec::Gumbel(_) => unreachable!(),
            };
            kl_marginal(&cell_masses(&p.cdf_many(&edges)), &q)
        })
        .collect();
    let mut order: Vec<usize> = (0..ms.len()).collect();
    order.sort_by(|&i, &j| ms[i].total_cmp(&ms[j]));
    let mut best = order[0];
    for &i in &order[1..] {
        if kls[i] < kls[best] {
            best = i;
        }
    }
    let entries = order
        .iter()
        .map(|&i| CompatEntry {
            m: ms[i],
            kl: kls[i],
            calibration: calibrations[i].clone(),
        })
        .collect();
    Ok(CompatibilityResult {
        model,
        m_star: ms[best],
        entries,
    })
}
