//! Exact sampling of the location prior through the `z` reparametrization.
//!
//! Both location priors reduce, after the change of variable
//! `z = Δ / (distance from the far anchor)`, to the density
//!
//! ```text
//! π̃(z) = z^{m-2} / (-ln(1 - z))^m,    z ∈ [ρ, 1]
//! ```
//!
//! which satisfies `π̃(z) ≤ z^{-2} (1 + z/2)^{-m}` because
//! `-ln(1 - z) ≥ z (1 + z/2)`. The instrumental law is an inverse-gamma
//! `IG(1, c)` truncated to `[ρ, 1]`, with density `Δ(c) z^{-2} e^{-c/z}`;
//! the envelope constant is smallest when `c` is small.
//!
//! When the expected acceptance rate falls under [`MIN_ACCEPTANCE`] the
//! sampler switches to inverse-transform sampling on a tabulated CDF.

use rand::Rng;

use crate::special::{open01, GridInverse};

/// Default instrumental parameter.
pub const DEFAULT_C: f64 = 0.01;

/// Floor on the expected acceptance rate before falling back to grid inversion.
pub const MIN_ACCEPTANCE: f64 = 0.05;

const GRID_NODES: usize = 4000;

/// `ln π̃(z)`.
pub fn ln_z_density(m: f64, z: f64) -> f64 {
    if !(z > 0.0 && z < 1.0) {
        return f64::NEG_INFINITY;
    }
    (m - 2.0) * z.ln() - m * (-(-z).ln_1p()).ln()
}

#[derive(Debug, Clone)]
enum Method {
    Rejection,
    Grid(GridInverse),
}

#[derive(Debug, Clone)]
pub struct ZSampler {
    m: f64,
    rho: f64,
    c: f64,
    acceptance: f64,
    method: Method,
}

impl ZSampler {
    /// `rho` in (0, 1), `c > 0` (values under 1e-9 use the `c → 0` limit).
    pub fn new(m: f64, rho: f64, c: f64) -> Self {
        assert!(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
        assert!(m > 0.0 && c >= 0.0);
        let c = if c < 1e-9 { 0.0 } else { c };
        let acceptance = expected_acceptance(m, rho, c);
        let method = if acceptance >= MIN_ACCEPTANCE {
            Method::Rejection
        } else {
            Method::Grid(z_grid(m, rho))
        };
        Self {
            m,
            rho,
            c,
            acceptance,
            method,
        }
    }

    /// Expected acceptance rate of the rejection scheme for these settings.
    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }

    pub fn uses_rejection(&self) -> bool {
        matches!(self.method, Method::Rejection)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// One draw; also returns the number of instrumental proposals consumed.
    pub fn sample_counted<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u64) {
        match &self.method {
            Method::Grid(g) => (g.sample(rng).exp(), 1),
            Method::Rejection => self.sample_rejection(rng),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_counted(rng).0
    }

    /// Rejection sampling, regardless of the expected acceptance rate.
    pub fn sample_rejection<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u64) {
        let (m, rho, c) = (self.m, self.rho, self.c);
        let log_scale = m * (0.5 * rho).ln_1p() - c / rho;
        let mut tries = 0u64;
        loop {
            tries += 1;
            let z = self.draw_instrumental(open01(rng));
            if z >= 1.0 {
                continue;
            }
            let log_ratio = log_scale + c / z + m * (z.ln() - (-(-z).ln_1p()).ln());
            if open01(rng).ln() <= log_ratio {
                return (z, tries);
            }
        }
    }

    fn draw_instrumental(&self, u: f64) -> f64 {
        let (rho, c) = (self.rho, self.c);
        if c == 0.0 {
            // density ∝ z^{-2}: 1/z uniform on [1, 1/ρ]
            return 1.0 / (1.0 / rho - u * (1.0 / rho - 1.0));
        }
        let lo = (-c / rho).exp();
        let hi = (-c).exp();
        let v = lo + u * (hi - lo);
        (-c / v.ln()).clamp(rho, 1.0)
    }
}

fn expected_acceptance(m: f64, rho: f64, c: f64) -> f64 {
    // acceptance = ∫π̃ · Δ(c) (1 + ρ/2)^m e^{-c/ρ}
    let integral = z_integral(m, rho);
    let delta_inv = if c == 0.0 {
        1.0 / rho - 1.0
    } else {
        ((-c).exp() - (-c / rho).exp()) / c
    };
    let log_acc = integral.ln() - delta_inv.ln() + m * (0.5 * rho).ln_1p() - c / rho;
    log_acc.exp().min(1.0)
}

fn z_grid_nodes(rho: f64) -> Vec<f64> {
    // log-spaced interior grid, plus a fine layer near z = 1
    let lo = rho.ln();
    let hi = (1.0 - 1e-12f64).ln();
    (0..GRID_NODES)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID_NODES - 1) as f64)
        .collect()
}

/// `∫_ρ^1 π̃(z) dz` by trapezoid quadrature in `ln z`.
pub fn z_integral(m: f64, rho: f64) -> f64 {
    let us = z_grid_nodes(rho);
    let f: Vec<f64> = us
        .iter()
        .map(|&u| (ln_z_density(m, u.exp()) + u).exp())
        .collect();
    us.windows(2)
        .zip(f.windows(2))
        .map(|(u, v)| 0.5 * (v[0] + v[1]) * (u[1] - u[0]))
        .sum()
}

fn z_grid(m: f64, rho: f64) -> GridInverse {
    let us = z_grid_nodes(rho);
    let ld: Vec<f64> = us.iter().map(|&u| ln_z_density(m, u.exp()) + u).collect();
    GridInverse::new(us, &ld).expect("z density is positive on [rho, 1)")
}
