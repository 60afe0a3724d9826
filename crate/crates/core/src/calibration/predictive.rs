use rand::Rng;

use crate::priors::{FrechetHyper, GumbelHyper, SigmaMarginal, WeibullHyper};
use crate::special::{ess_from_log_weights, log_sum_exp, ln_gamma, open01, std_gamma, std_normal};

/// Effective sample size under which an importance estimate is flagged.
pub const ESS_FLOOR: f64 = 100.0;

/// A prior predictive distribution function.
pub trait PredictiveCdf {
    fn cdf(&self, x: f64) -> f64;

    /// Quantile by bracketing and bisection.
    fn quantile(&self, p: f64) -> f64 {
        let mut lo = -1.0f64;
        let mut hi = 1.0f64;
        for _ in 0..200 {
            if self.cdf(lo) <= p {
                break;
            }
            lo *= 2.0;
        }
        for _ in 0..200 {
            if self.cdf(hi) >= p {
                break;
            }
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-10 * hi.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `(1 + t/m)^{-m}` from `ln t`: the conditional predictive CDF once the
/// gamma-distributed `ν` is integrated out.
#[inline]
fn integrated_tail(ln_t: f64, m: f64) -> f64 {
    let t = ln_t.exp();
    if m.fract() == 0.0 && m <= 64.0 {
        (1.0 + t / m).powi(-(m as i32))
    } else {
        (-m * (t / m).ln_1p()).exp()
    }
}

/// Frozen importance draws for the Fréchet prior predictive.
///
/// `μ_k ~ N(κ, σ²)` and `ξ_k ~ IG(m, m ln ρ_ξ)`, sorted by `μ`. The same
/// draws serve every grid candidate, so the estimated orders vary smoothly
/// with the hyperparameters.
#[derive(Debug, Clone)]
pub struct FrechetIsDraws {
    m: f64,
    mu: Vec<f64>,
    inv_xi: Vec<f64>,
    /// `-(m+1) ln ξ - ln f_IS(μ, ξ)`: the candidate-free part of the log weight.
    base: Vec<f64>,
    values: Vec<f64>,
    /// `ln(x_j - μ_k)` for the cached values, `-inf` when `x_j <= μ_k`.
    ln_gap: Vec<f64>,
}

/// Importance estimate of predictive orders.
#[derive(Debug, Clone, PartialEq)]
pub struct IsEstimate {
    pub orders: Vec<f64>,
    pub ess: f64,
}

impl FrechetIsDraws {
    /// `values` are cached for fast order evaluation (usually the expert values).
    pub fn new<R: Rng + ?Sized>(
        m: f64,
        is: &super::ISConfig,
        values: &[f64],
        rng: &mut R,
    ) -> Self {
        let scale = m * is.rho_xi.ln();
        let ln_norm = -0.5 * (2.0 * std::f64::consts::PI).ln() - is.sigma_mu.ln();
        let mut draws: Vec<(f64, f64, f64)> = (0..is.n_draws)
            .map(|_| {
                let n = std_normal(rng);
                let g = std_gamma(rng, m);
                let mu = is.kappa_mu + is.sigma_mu * n;
                let xi = scale / g;
                // ln IG(ξ; m, scale) = m ln scale - lnΓ(m) - (m+1) ln ξ - scale/ξ
                let ln_f = ln_norm - 0.5 * n * n + m * scale.ln() - ln_gamma(m)
                    - (m + 1.0) * xi.ln()
                    - g;
                (mu, 1.0 / xi, -(m + 1.0) * xi.ln() - ln_f)
            })
            .collect();
        draws.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mu: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let ln_gap = mu
            .iter()
            .flat_map(|&mu| {
                values
                    .iter()
                    .map(move |&x| if x > mu { (x - mu).ln() } else { f64::NEG_INFINITY })
            })
            .collect();
        Self {
            m,
            inv_xi: draws.iter().map(|d| d.1).collect(),
            base: draws.iter().map(|d| d.2).collect(),
            mu,
            values: values.to_vec(),
            ln_gap,
        }
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    fn support(&self, h: &FrechetHyper) -> std::ops::Range<usize> {
        let lo = self.mu.partition_point(|&mu| mu < h.mu_inf);
        let hi = self.mu.partition_point(|&mu| mu < h.x_e1);
        lo..hi.max(lo)
    }

    /// Per-draw log weights (unnormalized) and `ln(x_e1 - μ)` on the support.
    fn log_weights(&self, h: &FrechetHyper) -> (std::ops::Range<usize>, Vec<f64>, Vec<f64>) {
        let m = self.m;
        let range = self.support(h);
        let mut lw = Vec::with_capacity(range.len());
        let mut l1s = Vec::with_capacity(range.len());
        for k in range.clone() {
            let mu = self.mu[k];
            let l1 = (h.x_e1 - mu).ln();
            let l2 = (h.x_e2 - mu).ln();
            // ln π(μ) + ln IG(ξ; m, s2(μ)) up to candidate constants
            lw.push(-m * l2 - m * (l2 - l1) * self.inv_xi[k] + self.base[k]);
            l1s.push(l1);
        }
        (range, lw, l1s)
    }

    /// Predictive orders at the cached values.
    pub fn evaluate(&self, h: &FrechetHyper) -> IsEstimate {
        self.row(h.x_e1, h.mu_inf).evaluate(h.x_e2)
    }

    /// Everything that depends on `x_e1` alone: the support and the
    /// conditional predictive at the cached values. Candidates sharing
    /// `x_e1` then differ only through their weights.
    pub fn row(&self, x_e1: f64, mu_inf: f64) -> FrechetRow<'_> {
        let range = self.support(&FrechetHyper {
            m: self.m,
            x_e1,
            x_e2: x_e1,
            mu_inf,
        });
        let nv = self.values.len();
        let mut l1 = Vec::with_capacity(range.len());
        let mut tails = Vec::with_capacity(range.len() * nv);
        for k in range.clone() {
            let lk = (x_e1 - self.mu[k]).ln();
            l1.push(lk);
            for &lg in &self.ln_gap[k * nv..(k + 1) * nv] {
                tails.push(if lg > f64::NEG_INFINITY {
                    integrated_tail(-(lg - lk) * self.inv_xi[k], self.m)
                } else {
                    0.0
                });
            }
        }
        FrechetRow {
            draws: self,
            range,
            l1,
            tails,
        }
    }

    /// Predictive CDF at arbitrary points.
    pub fn cdf_at(&self, h: &FrechetHyper, xs: &[f64]) -> Vec<f64> {
        let (range, lw, l1s) = self.log_weights(h);
        if lw.is_empty() {
            return vec![f64::NAN; xs.len()];
        }
        let lse = log_sum_exp(&lw);
        let mut acc = vec![0.0; xs.len()];
        for (i, k) in range.enumerate() {
            let w = (lw[i] - lse).exp();
            let mu = self.mu[k];
            for (a, &x) in acc.iter_mut().zip(xs) {
                if x > mu {
                    let lg = (x - mu).ln();
                    *a += w * integrated_tail(-(lg - l1s[i]) * self.inv_xi[k], self.m);
                }
            }
        }
        acc.into_iter().map(|a| a.clamp(0.0, 1.0)).collect()
    }
}

/// Importance draws prepared for one `x_e1`.
#[derive(Debug, Clone)]
pub struct FrechetRow<'a> {
    draws: &'a FrechetIsDraws,
    range: std::ops::Range<usize>,
    l1: Vec<f64>,
    /// Row-major `[draw][value]` conditional CDFs.
    tails: Vec<f64>,
}

impl FrechetRow<'_> {
    /// Orders for the candidate `(x_e1, x_e2)`; `x_e2 > x_e1` is assumed.
    pub fn evaluate(&self, x_e2: f64) -> IsEstimate {
        let d = self.draws;
        let nv = d.values.len();
        if self.range.is_empty() {
            return IsEstimate {
                orders: vec![f64::NAN; nv],
                ess: 0.0,
            };
        }
        let m = d.m;
        let lw: Vec<f64> = self
            .range
            .clone()
            .zip(&self.l1)
            .map(|(k, &l1)| {
                let l2 = (x_e2 - d.mu[k]).ln();
                -m * l2 - m * (l2 - l1) * d.inv_xi[k] + d.base[k]
            })
            .collect();
        let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut acc = vec![0.0; nv];
        let (mut s1, mut s2) = (0.0, 0.0);
        for (i, &l) in lw.iter().enumerate() {
            let w = (l - max).exp();
            s1 += w;
            s2 += w * w;
            for (a, &t) in acc.iter_mut().zip(&self.tails[i * nv..(i + 1) * nv]) {
                *a += w * t;
            }
        }
        IsEstimate {
            orders: acc.into_iter().map(|a| (a / s1).clamp(0.0, 1.0)).collect(),
            ess: s1 * s1 / s2,
        }
    }
}

/// Frozen draws for the Weibull prior predictive, in the `z` scale.
///
/// `1/z` is uniform on `[1, 1/ρ]` (so `μ` is uniform on its support) and
/// `ξ = s4(μ)/G` with `G ~ Gamma(m, 1)`, an exact draw of `ξ | μ`. Because
/// `s4` depends on `μ` only through `z`, the weights
/// `(z / -ln(1 - z))^m` depend on `ρ` but not on the anchors.
#[derive(Debug, Clone)]
pub struct WeibullIsDraws {
    m: f64,
    u: Vec<f64>,
    g: Vec<f64>,
}

/// Weighted draws at one truncation level `ρ`.
#[derive(Debug, Clone)]
pub struct WeibullLevel {
    m: f64,
    rho: f64,
    z: Vec<f64>,
    inv_xi: Vec<f64>,
    w: Vec<f64>,
    ess: f64,
}

impl WeibullIsDraws {
    pub fn new<R: Rng + ?Sized>(m: f64, n_draws: usize, rng: &mut R) -> Self {
        let (u, g) = (0..n_draws).map(|_| (open01(rng), std_gamma(rng, m))).unzip();
        Self { m, u, g }
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn level(&self, rho: f64) -> WeibullLevel {
        let m = self.m;
        let span = 1.0 / rho - 1.0;
        let mut z = Vec::with_capacity(self.u.len());
        let mut inv_xi = Vec::with_capacity(self.u.len());
        let mut lw = Vec::with_capacity(self.u.len());
        for (&u, &g) in self.u.iter().zip(&self.g) {
            let zk = 1.0 / (1.0 + u * span);
            let l = -(-zk).ln_1p();
            z.push(zk);
            // ξ = s4/G with s4 = m l
            inv_xi.push(g / (m * l));
            lw.push(m * (zk.ln() - l.ln()));
        }
        let lse = log_sum_exp(&lw);
        let ess = ess_from_log_weights(&lw);
        WeibullLevel {
            m,
            rho,
            z,
            inv_xi,
            w: lw.iter().map(|l| (l - lse).exp()).collect(),
            ess,
        }
    }

    pub fn evaluate(&self, h: &WeibullHyper, xs: &[f64]) -> IsEstimate {
        self.level(h.rho).evaluate(h.x_e3, h.x_e4, xs)
    }
}

impl WeibullLevel {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn ess(&self) -> f64 {
        self.ess
    }

    /// Predictive CDF at `xs` for anchors `(x_e3, x_e4)`.
    pub fn evaluate(&self, x_e3: f64, x_e4: f64, xs: &[f64]) -> IsEstimate {
        self.evaluate_prefix(self.z.len(), x_e3, x_e4, xs)
    }

    /// As [`evaluate`](Self::evaluate) on the first `n` draws only, with the
    /// weights renormalized over them. The draws are i.i.d., so a prefix is
    /// itself a frozen importance sample.
    pub fn evaluate_prefix(&self, n: usize, x_e3: f64, x_e4: f64, xs: &[f64]) -> IsEstimate {
        let n = n.min(self.z.len());
        let delta = x_e4 - x_e3;
        let mut acc = vec![0.0; xs.len()];
        let mut total = 0.0;
        for k in 0..n {
            let w = self.w[k];
            total += w;
            let c = self.z[k] / delta;
            for (a, &x) in acc.iter_mut().zip(xs) {
                // (μ - x)/(μ - x_e3) = 1 - (x - x_e3) z / Δ
                let r = 1.0 - (x - x_e3) * c;
                *a += if r <= 0.0 {
                    w
                } else {
                    w * integrated_tail(r.ln() * self.inv_xi[k], self.m)
                };
            }
        }
        IsEstimate {
            orders: acc.into_iter().map(|a| (a / total).clamp(0.0, 1.0)).collect(),
            ess: self.ess,
        }
    }
}

/// Gumbel prior predictive by quadrature over the `σ` marginal, the
/// location being integrated analytically.
#[derive(Debug, Clone)]
pub struct GumbelPredictive {
    marg: SigmaMarginal,
}

impl GumbelPredictive {
    pub const DEFAULT_NODES: usize = SigmaMarginal::DEFAULT_NODES;

    pub fn new(h: &GumbelHyper, nodes: usize) -> Self {
        Self {
            marg: SigmaMarginal::new(h, nodes),
        }
    }
}

impl PredictiveCdf for GumbelPredictive {
    fn cdf(&self, x: f64) -> f64 {
        let mk = &self.marg;
        let m = mk.m() as f64;
        let mut acc = 0.0;
        for j in 0..mk.weights.len() {
            let w = mk.weights[j];
            if w == 0.0 {
                continue;
            }
            let sigma = mk.log_sigma[j].exp();
            let ln_a = mk.ln_a[j];
            let ln_ab = crate::special::log_add_exp(ln_a, -x / sigma);
            let mut l = m * (ln_a - ln_ab);
            if let Some(f) = mk.floor() {
                l += crate::special::ln_upper_gamma_q_int(mk.m(), (ln_ab + f / sigma).exp())
                    - mk.ln_q[j];
            }
            acc += w * l.exp();
        }
        acc.clamp(0.0, 1.0)
    }
}

/// Prior predictive from exact prior draws, with `ν` integrated analytically.
#[derive(Debug, Clone)]
pub struct PriorPredictive {
    kind: Kind,
    m: f64,
    mu: Vec<f64>,
    inv_xi: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    /// `x_e1`
    Frechet(f64),
    /// `x_e3`
    Weibull(f64),
}

impl PriorPredictive {
    pub fn frechet<R: Rng + ?Sized>(h: &FrechetHyper, n: usize, rng: &mut R) -> Self {
        let s = h.mu_sampler(crate::priors::DEFAULT_C);
        let mut mu = Vec::with_capacity(n);
        let mut inv_xi = Vec::with_capacity(n);
        for _ in 0..n {
            let m = s.sample(rng);
            let xi = h.s2_unchecked(m) / std_gamma(rng, h.m);
            mu.push(m);
            inv_xi.push(1.0 / xi);
        }
        Self {
            kind: Kind::Frechet(h.x_e1),
            m: h.m,
            mu,
            inv_xi,
        }
    }

    pub fn weibull<R: Rng + ?Sized>(h: &WeibullHyper, n: usize, rng: &mut R) -> Self {
        let s = h.mu_sampler(h.default_c());
        let mut mu = Vec::with_capacity(n);
        let mut inv_xi = Vec::with_capacity(n);
        for _ in 0..n {
            let m = s.sample(rng);
            let xi = h.s4_unchecked(m) / std_gamma(rng, h.m);
            mu.push(m);
            inv_xi.push(1.0 / xi);
        }
        Self {
            kind: Kind::Weibull(h.x_e3),
            m: h.m,
            mu,
            inv_xi,
        }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// CDF at several points in one pass over the draws.
    pub fn cdf_many(&self, xs: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; xs.len()];
        for (&mu, &ix) in self.mu.iter().zip(&self.inv_xi) {
            match self.kind {
                Kind::Frechet(x_e1) => {
                    let l1 = (x_e1 - mu).ln();
                    for (a, &x) in acc.iter_mut().zip(xs) {
                        if x > mu {
                            *a += integrated_tail(-((x - mu).ln() - l1) * ix, self.m);
                        }
                    }
                }
                Kind::Weibull(x_e3) => {
                    let l3 = (mu - x_e3).ln();
                    for (a, &x) in acc.iter_mut().zip(xs) {
                        *a += if x < mu {
                            integrated_tail(((mu - x).ln() - l3) * ix, self.m)
                        } else {
                            1.0
                        };
                    }
                }
            }
        }
        let n = self.mu.len() as f64;
        acc.into_iter().map(|a| (a / n).clamp(0.0, 1.0)).collect()
    }
}

impl PredictiveCdf for PriorPredictive {
    fn cdf(&self, x: f64) -> f64 {
        self.cdf_many(&[x])[0]
    }
}
