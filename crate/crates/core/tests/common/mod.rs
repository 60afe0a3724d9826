//! Independent numerical oracles shared by the integration tests. Nothing
//! here calls the quadrature or sampling code of the library.
#![allow(dead_code)]

use std::path::PathBuf;

use evd_select::inference::MixturePriors;
use evd_select::pipeline::{ingest_csv, Dataset};
use evd_select::priors::{FrechetHyper, GumbelHyper, WeibullHyper};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::{gamma_ur, ln_gamma};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn corsica() -> Dataset {
    ingest_csv(fixture_path("corsica.csv")).expect("fixture parses")
}

/// Two-sided Kolmogorov statistic of `sample` against `cdf`.
pub fn ks(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// CDF tabulated by the trapezoid rule on the nodes `xs`, linear in between.
pub struct TabulatedCdf {
    xs: Vec<f64>,
    cum: Vec<f64>,
}

impl TabulatedCdf {
    pub fn new(xs: Vec<f64>, density: impl Fn(f64) -> f64) -> Self {
        let f: Vec<f64> = xs.iter().map(|&x| density(x)).collect();
        let mut cum = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cum[i] = cum[i - 1] + 0.5 * (f[i] + f[i - 1]) * (xs[i] - xs[i - 1]);
        }
        let total = cum[cum.len() - 1];
        cum.iter_mut().for_each(|c| *c /= total);
        Self { xs, cum }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        let j = self.xs.partition_point(|&v| v < x);
        if j >= self.xs.len() {
            return 1.0;
        }
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        self.cum[j - 1] + (self.cum[j] - self.cum[j - 1]) * (x - x0) / (x1 - x0)
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// `lo + (hi - lo)` mapped through a log-spaced grid, dense near `lo`.
pub fn logspace_from(lo: f64, hi: f64, smallest: f64, n: usize) -> Vec<f64> {
    let (a, b) = (smallest.ln(), (hi - lo).ln());
    let mut v: Vec<f64> = (0..n).map(|i| lo + (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    v.insert(0, lo);
    v
}

pub fn ln_gamma_density(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Brute-force Gumbel prior quadrature on `σ ∈ [sigma_lo, sigma_hi]`.
///
/// Works in `(ln σ, w)` with `w = μ/σ + ln Σ_j e^{-x̃_j/σ}`, where the
/// integrand in `w` is a fixed gamma-like bump; the floor on `μ` becomes a
/// lower limit on `w`. Returns, per `ln σ` node, `σ` and the integrals over
/// `μ` of `e^{log_prior} σ` and `e^{log_prior} σ g(μ, σ)` (densities in `ln σ`).
pub fn gumbel_sigma_profile(
    h: &GumbelHyper,
    sigma_lo: f64,
    sigma_hi: f64,
    g: impl Fn(f64, f64) -> f64,
) -> Vec<(f64, f64, f64)> {
    let x = h.virtual_data();
    linspace(sigma_lo.ln(), sigma_hi.ln(), 4001)
        .into_iter()
        .map(|l| {
            let sigma = l.exp();
            let t: Vec<f64> = x.iter().map(|v| -v / sigma).collect();
            let mx = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let ln_a = mx + t.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
            let w_lo = h.mu_floor().map_or(-40.0, |f| (f / sigma + ln_a).max(-40.0));
            let w_hi = 6.0;
            if w_lo >= w_hi {
                return (sigma, 0.0, 0.0);
            }
            let ws = linspace(w_lo, w_hi, 801);
            let dw = ws[1] - ws[0];
            let (mut a, mut b) = (0.0, 0.0);
            for (k, &w) in ws.iter().enumerate() {
                let mu = sigma * (w - ln_a);
                // dμ dσ = σ dw · σ d ln σ
                let v = (h.log_prior(mu, sigma) + 2.0 * l).exp();
                let wt = if k == 0 || k == ws.len() - 1 { 0.5 } else { 1.0 };
                a += wt * v;
                b += wt * v * g(mu, sigma);
            }
            (sigma, a * dw, b * dw)
        })
        .collect()
}

/// `(∫∫ e^{log_prior}, ∫∫ e^{log_prior} g)` over `σ ∈ [sigma_lo, sigma_hi]`.
pub fn gumbel_prior_integral(
    h: &GumbelHyper,
    sigma_lo: f64,
    sigma_hi: f64,
    g: impl Fn(f64, f64) -> f64,
) -> (f64, f64) {
    let prof = gumbel_sigma_profile(h, sigma_lo, sigma_hi, g);
    let dls = (sigma_hi / sigma_lo).ln() / (prof.len() - 1) as f64;
    prof.windows(2).fold((0.0, 0.0), |(z, zg), w| {
        (z + 0.5 * (w[0].1 + w[1].1) * dls, zg + 0.5 * (w[0].2 + w[1].2) * dls)
    })
}

pub fn ln_inv_gamma_density(x: f64, shape: f64, scale: f64) -> f64 {
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

/// Priors elicited for the rainfall case study (virtual size 5).
pub fn case_study_priors() -> MixturePriors {
    MixturePriors {
        frechet: FrechetHyper::new(5.0, 87.72, 133.95, 0.0).unwrap(),
        weibull: WeibullHyper::new(5.0, 92.74, 128.44, 0.0011).unwrap(),
        gumbel: GumbelHyper::new(vec![81.0, 93.0, 101.0], Some(0.0)).unwrap(),
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Trapezoid rule for `ln ∫ e^{f}` from log-integrand values on a uniform grid.
fn ln_trapezoid(lf: &[f64], step: f64) -> f64 {
    let mut v = lf.to_vec();
    v[0] -= std::f64::consts::LN_2;
    let last = v.len() - 1;
    v[last] -= std::f64::consts::LN_2;
    log_sum_exp(&v) + step.ln()
}

/// `ln ∫∫ σ^{-k} exp{k(μ - x̄)/σ - Σ e^{-(x_j - μ)/σ}} dμ dσ` over `μ ≥ floor`.
///
/// This is the Gumbel conjugate kernel of the sample `xs`; the `μ` integral
/// is an upper incomplete gamma function, leaving a 1-D quadrature in `ln σ`.
/// With the virtual sample it is the prior normalizer, and with the virtual
/// sample pooled with data it is the prior normalizer times the marginal
/// likelihood.
pub fn gumbel_ln_kernel_integral(xs: &[f64], floor: Option<f64>) -> f64 {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let nodes = linspace(1e-3f64.ln(), 1e9f64.ln(), 40_001);
    let lf: Vec<f64> = nodes
        .iter()
        .map(|&l| {
            let sigma = l.exp();
            let t: Vec<f64> = xs.iter().map(|x| -(x - mean) / sigma).collect();
            let ln_b = log_sum_exp(&t);
            let ln_q = match floor {
                None => 0.0,
                Some(f) => {
                    let t0 = (f / sigma - mean / sigma + ln_b).exp();
                    match t0 {
                        0.0 => 0.0,
                        t if t.is_infinite() => f64::NEG_INFINITY,
                        t => gamma_ur(k, t).ln(),
                    }
                }
            };
            // dσ = σ d ln σ, and the μ integral contributes σ Γ(k) Q(k, t0) B^{-k}
            -k * l + 2.0 * l + ln_gamma(k) + ln_q - k * ln_b
        })
        .collect();
    ln_trapezoid(&lf, nodes[1] - nodes[0])
}

/// Gumbel log marginal likelihood of `data` under the conjugate prior `h`.
pub fn gumbel_ln_marginal(h: &GumbelHyper, data: &[f64]) -> f64 {
    let pooled: Vec<f64> = h.virtual_data().iter().chain(data).copied().collect();
    gumbel_ln_kernel_integral(&pooled, h.mu_floor()) - gumbel_ln_kernel_integral(h.virtual_data(), h.mu_floor())
}

/// Fréchet log marginal likelihood of `data` under the semi-conjugate prior.
///
/// `ν` is integrated in closed form (gamma prior against the `ν`-kernel of
/// the likelihood), `(μ, ξ)` on a grid in `(ln(min x - μ), ln ξ)`, and the
/// location prior is normalized by its own 1-D quadrature.
pub fn frechet_ln_marginal(h: &FrechetHyper, data: &[f64]) -> f64 {
    let m = h.m;
    let n = data.len() as f64;
    let x_min = data.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(x_min < h.x_e1 && x_min > h.mu_inf);

    let mus = linspace(h.mu_inf, h.x_e1, 200_001);
    let lpi: Vec<f64> = mus[..mus.len() - 1].iter().map(|&mu| h.log_pi_mu(mu)).collect();
    let mut lpi = lpi;
    lpi.push(f64::NEG_INFINITY);
    let ln_z_mu = ln_trapezoid(&lpi, mus[1] - mus[0]);

    let ts = linspace((x_min - h.mu_inf).ln(), 1e-5f64.ln(), 1501);
    let ss = linspace(1e-3f64.ln(), 50f64.ln(), 1501);
    let rows: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let mu = x_min - t.exp();
            let ln_d: Vec<f64> = data.iter().map(|x| (x - mu).ln()).collect();
            let sum_ln_d: f64 = ln_d.iter().sum();
            let s2 = m * ((h.x_e2 - mu) / (h.x_e1 - mu)).ln();
            let lf: Vec<f64> = ss
                .iter()
                .map(|&s| {
                    let xi = s.exp();
                    let ln_s1 = m.ln() - (h.x_e1 - mu).ln() / xi;
                    let pw: Vec<f64> = ln_d.iter().map(|l| -l / xi).collect();
                    let ln_rate = log_sum_exp(&[ln_s1, log_sum_exp(&pw)]);
                    let ln_k = m * ln_s1 + ln_gamma(m + n) - ln_gamma(m) - (m + n) * ln_rate
                        - n * s
                        - (1.0 / xi + 1.0) * sum_ln_d;
                    ln_inv_gamma_density(xi, m, s2) + ln_k + s
                })
                .collect();
            // dμ = (min x - μ) dt
            h.log_pi_mu(mu) + ln_trapezoid(&lf, ss[1] - ss[0]) + t
        })
        .collect();
    ln_trapezoid(&rows, (ts[0] - ts[1]).abs()) - ln_z_mu
}

/// Random-walk Metropolis on `R^D`: a diagonal pilot phase, then a proposal
/// with the pilot covariance scaled by `2.38² / D`. Returns `n` draws taken
/// every `thin` steps after the pilot.
pub fn rw_metropolis<const D: usize>(
    log_target: impl Fn(&[f64; D]) -> f64,
    x0: [f64; D],
    step0: [f64; D],
    pilot: usize,
    n: usize,
    thin: usize,
    rng: &mut impl Rng,
) -> Vec<[f64; D]> {
    let mut x = x0;
    let mut lp = log_target(&x);
    assert!(lp.is_finite(), "start outside the support");
    let mut step = step0;
    let mut hist = Vec::with_capacity(pilot);
    for i in 0..pilot {
        let mut y = x;
        let k = i % D;
        y[k] += step[k] * rng.sample::<f64, _>(StandardNormal);
        let ly = log_target(&y);
        if rng.random::<f64>().ln() < ly - lp {
            x = y;
            lp = ly;
            step[k] *= 1.1;
        } else {
            step[k] *= 0.95;
        }
        hist.push(x);
    }
    let tail = &hist[pilot / 2..];
    let mean: [f64; D] = std::array::from_fn(|a| tail.iter().map(|v| v[a]).sum::<f64>() / tail.len() as f64);
    let mut cov = [[0.0; D]; D];
    for v in tail {
        for a in 0..D {
            for b in 0..D {
                cov[a][b] += (v[a] - mean[a]) * (v[b] - mean[b]) / tail.len() as f64;
            }
        }
    }
    let scale = 2.38f64.powi(2) / D as f64;
    let mut l = [[0.0; D]; D];
    for a in 0..D {
        for b in 0..=a {
            let s: f64 = (0..b).map(|k| l[a][k] * l[b][k]).sum();
            let c = scale * cov[a][b];
            l[a][b] = if a == b { (c - s).sqrt() } else { (c - s) / l[b][b] };
        }
    }
    let mut out = Vec::with_capacity(n);
    let mut i = 0usize;
    while out.len() < n {
        let z: [f64; D] = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal));
        let y: [f64; D] = std::array::from_fn(|a| x[a] + (0..=a).map(|b| l[a][b] * z[b]).sum::<f64>());
        let ly = log_target(&y);
        if rng.random::<f64>().ln() < ly - lp {
            x = y;
            lp = ly;
        }
        i += 1;
        if i % thin == 0 {
            out.push(x);
        }
    }
    out
}

/// Standard error of a mean from `batches` non-overlapping batch means.
pub fn batch_se(v: &[f64], batches: usize) -> f64 {
    let size = v.len() / batches;
    let means: Vec<f64> = v.chunks_exact(size).take(batches).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let g = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - g).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Two-sample Kolmogorov statistic.
pub fn ks2(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Quadrature CDF of the normalized Fréchet location prior.
pub fn frechet_mu_cdf(h: &FrechetHyper) -> TabulatedCdf {
    let nodes = linspace(h.mu_inf, h.x_e1, 200_001);
    TabulatedCdf::new(nodes, |mu| h.log_pi_mu(mu).exp().max(0.0))
}

/// Quadrature CDF of the normalized Weibull location prior, on nodes
/// log-spaced away from `x_e4`.
pub fn weibull_mu_cdf(h: &WeibullHyper) -> TabulatedCdf {
    let nodes = logspace_from(h.x_e4, h.mu_sup(), 1e-9, 200_000);
    TabulatedCdf::new(nodes, |mu| {
        let l = h.log_pi_mu(mu);
        if l.is_finite() { l.exp() } else { 0.0 }
    })
}
