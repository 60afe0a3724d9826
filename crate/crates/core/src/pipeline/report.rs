use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inference::{predictive_cdf, predictive_quantile, PosteriorDraws, SelectionReport};

pub const REPORT_FILE: &str = "report.json";
pub const DRAWS_FILE: &str = "draws.csv";
pub const PREDICTIVE_FILE: &str = "predictive.csv";

/// Points of the posterior predictive: return period, level and CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictivePoint {
    pub period: f64,
    pub level: f64,
    pub cdf: f64,
}

/// Return periods from 1.1 to 1000 blocks, log-spaced.
const CURVE_POINTS: usize = 40;

pub fn predictive_curve(draws: &PosteriorDraws) -> Result<Vec<PredictivePoint>> {
    let (lo, hi) = (1.1f64.ln(), 1000f64.ln());
    (0..CURVE_POINTS)
        .map(|i| {
            let period = (lo + (hi - lo) * i as f64 / (CURVE_POINTS - 1) as f64).exp();
            let level = predictive_quantile(draws, 1.0 - 1.0 / period)?;
            Ok(PredictivePoint {
                period,
                level,
                cdf: predictive_cdf(draws, level),
            })
        })
        .collect()
}

/// One row per retained draw: chain, index within chain, all parameters and
/// the model weights.
pub fn write_draws_csv(draws: &PosteriorDraws, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from(
        "chain,draw,frechet_mu,frechet_ln_nu,frechet_xi,weibull_mu,weibull_ln_nu,weibull_xi,gumbel_mu,gumbel_sigma,w_frechet,w_weibull,w_gumbel\n",
    );
    let per = draws.diagnostics.draws_per_chain.max(1);
    for (i, (s, w)) in draws.states.iter().zip(&draws.weights).enumerate() {
        let (f, wb, g) = (&s.theta_f, &s.theta_w, &s.theta_g);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            i / per,
            i % per,
            f.mu,
            f.ln_nu,
            f.xi,
            wb.mu,
            wb.ln_nu,
            wb.xi,
            g.mu,
            g.sigma,
            w[0],
            w[1],
            w[2]
        )
        .expect("writing to a String");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write `report.json`, `predictive.csv` and `draws.csv` into `dir`.
pub fn emit_report(report: &SelectionReport, draws: &PosteriorDraws, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    super::write_json(report, dir.join(REPORT_FILE))?;
    let mut curve = String::from("period,level,cdf\n");
    for p in predictive_curve(draws)? {
        writeln!(curve, "{},{},{}", p.period, p.level, p.cdf).expect("writing to a String");
    }
    std::fs::write(dir.join(PREDICTIVE_FILE), curve)?;
    write_draws_csv(draws, dir.join(DRAWS_FILE))
}
