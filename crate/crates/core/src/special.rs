//! Small numerical helpers shared across modules.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

pub use statrs::function::gamma::ln_gamma;

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln(1 + exp(x))`.
pub fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Standard gamma draw, shape `a`, unit rate.
pub fn std_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    Gamma::new(shape, 1.0)
        .expect("gamma shape must be positive and finite")
        .sample(rng)
}

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform draw on the open interval (0, 1).
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::Open01)
}

/// Log density of the gamma law with shape `a` and rate `b` (mean `a/b`).
pub fn ln_gamma_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    a * b.ln() - ln_gamma(a) + (a - 1.0) * x.ln() - b * x
}

/// [`ln_gamma_pdf`] taking `ln x` and `ln b`, for arguments outside the
/// range of `f64`.
pub fn ln_gamma_pdf_ln(ln_x: f64, a: f64, ln_b: f64) -> f64 {
    a * ln_b - ln_gamma(a) + (a - 1.0) * ln_x - (ln_b + ln_x).exp()
}

/// Log density of the inverse-gamma law: `1/X` is gamma(a, b).
pub fn ln_inv_gamma_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    a * b.ln() - ln_gamma(a) - (a + 1.0) * x.ln() - b / x
}

/// Log of the regularized upper incomplete gamma `Q(m, x)` for integer `m >= 1`.
pub fn ln_upper_gamma_q_int(m: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    // Q(m, x) = exp(-x) * sum_{k<m} x^k / k!
    let mut term = 1.0f64;
    let mut acc = 1.0f64;
    for k in 1..m {
        term *= x / k as f64;
        acc += term;
    }
    if acc.is_finite() {
        -x + acc.ln()
    } else {
        // x^(m-1)/(m-1)! dominates
        -x + (m as f64 - 1.0) * x.ln() - ln_gamma(m as f64)
    }
}

/// Kolmogorov distance between the empirical CDF of `sample` and `cdf`.
pub fn kolmogorov_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Effective sample size of (unnormalized, log-scale) importance weights.
pub fn ess_from_log_weights(log_w: &[f64]) -> f64 {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return 0.0;
    }
    let (s1, s2) = log_w.iter().fold((0.0, 0.0), |(a, b), &lw| {
        let w = (lw - max).exp();
        (a + w, b + w * w)
    });
    if s2 == 0.0 {
        0.0
    } else {
        s1 * s1 / s2
    }
}

/// Tabulated CDF built from a density on a grid, for inverse-transform draws.
#[derive(Debug, Clone)]
pub struct GridInverse {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridInverse {
    /// `log_density` evaluated at sorted `xs`; trapezoid accumulation.
    pub fn new(xs: Vec<f64>, log_density: &[f64]) -> Option<Self> {
        assert_eq!(xs.len(), log_density.len());
        let max = log_density
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() || xs.len() < 2 {
            return None;
        }
        let dens: Vec<f64> = log_density.iter().map(|l| (l - max).exp()).collect();
        let mut cdf = Vec::with_capacity(xs.len());
        cdf.push(0.0);
        for i in 1..xs.len() {
            let step = 0.5 * (dens[i] + dens[i - 1]) * (xs[i] - xs[i - 1]);
            cdf.push(cdf[i - 1] + step);
        }
        let total = *cdf.last().unwrap();
        if !(total > 0.0) {
            return None;
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        Some(Self { xs, cdf })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        let i = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let t = (x - x0) / (x1 - x0);
        self.cdf[i - 1] + t * (self.cdf[i] - self.cdf[i - 1])
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.xs.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.xs[i - 1] + t.clamp(0.0, 1.0) * (self.xs[i] - self.xs[i - 1])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(open01(rng))
    }
}
