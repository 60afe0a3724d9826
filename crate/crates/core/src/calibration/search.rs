use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::predictive::{FrechetIsDraws, GumbelPredictive, PredictiveCdf, WeibullIsDraws, ESS_FLOOR};
use super::{cooke_loss, CalibrationResult, ExpertQuantiles, ISConfig, PriorSpec};
use crate::error::{Error, Result};
use crate::priors::{FrechetHyper, GumbelHyper, WeibullHyper};

/// Lattice of anchor values `lo, lo + step, …, hi`.
///
/// The search is coarse to fine: the first pass scans the lattice thinned by
/// `coarse_factor`; each later pass divides the thinning by four and scans
/// one previous step either side of the current optimum, down to the full
/// lattice. With `exhaustive` the whole lattice is scanned in one pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    #[serde(default = "default_coarse")]
    pub coarse_factor: usize,
    #[serde(default)]
    pub exhaustive: bool,
}

fn default_coarse() -> usize {
    16
}

impl AnchorGrid {
    /// `[min value - 50, max value + 50]` at step 0.5.
    pub fn around(eq: &ExpertQuantiles) -> Self {
        let v = eq.values();
        Self {
            lo: v[0] - 50.0,
            hi: v[v.len() - 1] + 50.0,
            step: 0.5,
            coarse_factor: default_coarse(),
            exhaustive: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step > 0.0 && self.lo < self.hi) {
            return Err(Error::config("anchor grid needs finite lo < hi and step > 0"));
        }
        if self.coarse_factor == 0 {
            return Err(Error::config("coarse_factor must be at least 1"));
        }
        Ok(())
    }

    fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    fn at(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    /// Thinning factor of each pass, ending at 1.
    fn factors(&self) -> Vec<usize> {
        if self.exhaustive {
            return vec![1];
        }
        let mut f = vec![self.coarse_factor];
        while let Some(&last) = f.last().filter(|&&l| l > 1) {
            f.push((last / 4).max(1));
        }
        f
    }
}

/// `0, f, 2f, …` plus the last index.
fn thinned(len: usize, f: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..len).step_by(f).collect();
    if v.last() != Some(&(len - 1)) {
        v.push(len - 1);
    }
    v
}

/// Indices `centre ± k f` within `centre ± radius`, clipped to `[0, len)`.
fn around(centre: usize, radius: usize, f: usize, len: usize) -> Vec<usize> {
    let lo = centre.saturating_sub(radius);
    let hi = (centre + radius).min(len - 1);
    let below = (1..).map(|k| k * f).take_while(|&d| d <= centre - lo).map(|d| centre - d);
    let mut v: Vec<usize> = below.collect();
    v.reverse();
    v.extend((0..).map(|k| centre + k * f).take_while(|&i| i <= hi));
    v
}

/// Coarse-to-fine search over a product lattice. `dims[d]` is the length of
/// dimension `d` and `factors[d]` its thinning per pass; `scan` returns the
/// best of a candidate list, `None` when no candidate is feasible.
fn multilevel<const D: usize>(
    dims: [usize; D],
    factors: &[[usize; D]],
    mut scan: impl FnMut(&[[usize; D]]) -> Option<[usize; D]>,
) -> Option<[usize; D]> {
    let axes: [Vec<usize>; D] = std::array::from_fn(|d| thinned(dims[d], factors[0][d]));
    let mut best = scan(&product(&axes))?;
    for w in factors.windows(2) {
        let axes: [Vec<usize>; D] =
            std::array::from_fn(|d| around(best[d], w[0][d], w[1][d], dims[d]));
        best = scan(&product(&axes)).unwrap_or(best);
    }
    Some(best)
}

fn product<const D: usize>(axes: &[Vec<usize>; D]) -> Vec<[usize; D]> {
    let mut out = vec![[0; D]];
    for (d, axis) in axes.iter().enumerate() {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&i| {
                    let mut q = p;
                    q[d] = i;
                    q
                })
            })
            .collect();
    }
    out
}

/// Log-spaced truncation levels `10^{log10_lo} … 10^{log10_hi}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RhoGrid {
    pub log10_lo: f64,
    pub log10_hi: f64,
    pub per_decade: usize,
}

impl Default for RhoGrid {
    fn default() -> Self {
        Self {
            log10_lo: -4.0,
            log10_hi: -2.0,
            per_decade: 10,
        }
    }
}

impl RhoGrid {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.log10_hi - self.log10_lo) * self.per_decade as f64).round() as usize;
        (0..=n)
            .map(|i| 10f64.powf(self.log10_lo + i as f64 / self.per_decade.max(1) as f64))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.log10_lo <= self.log10_hi && self.log10_hi < 0.0 && self.per_decade > 0) {
            return Err(Error::config("rho grid needs log10_lo <= log10_hi < 0 and per_decade > 0"));
        }
        Ok(())
    }
}

/// Grid for the Gumbel virtual sample: anchor lattice plus quadrature size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelGrid {
    pub anchors: AnchorGrid,
    /// `σ` nodes used while searching; the optimum is re-evaluated with
    /// [`GumbelPredictive::DEFAULT_NODES`].
    pub search_nodes: usize,
}

impl GumbelGrid {
    pub fn around(eq: &ExpertQuantiles) -> Self {
        Self {
            anchors: AnchorGrid::around(eq),
            search_nodes: 400,
        }
    }
}

/// Index of the smallest loss; NaN counts as `+inf`, ties go to the lowest index.
fn argmin(losses: &[f64]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, &l) in losses.iter().enumerate() {
        let l = if l.is_nan() { f64::INFINITY } else { l };
        if best.is_none_or(|(b, _)| l < b) {
            best = Some((l, i));
        }
    }
    best.filter(|b| b.0.is_finite()).map(|b| b.1)
}

/// Calibrate `(x_e1, x_e2)` for a given virtual size `m`.
pub fn calibrate_frechet<R: Rng + ?Sized>(
    m: f64,
    mu_inf: f64,
    eq: &ExpertQuantiles,
    grid: &AnchorGrid,
    is: &ISConfig,
    rng: &mut R,
) -> Result<CalibrationResult> {
    grid.validate()?;
    is.validate()?;
    let draws = FrechetIsDraws::new(m, is, &eq.values(), rng);
    let target = eq.orders();
    let factors: Vec<[usize; 2]> = grid.factors().into_iter().map(|f| [f, f]).collect();
    let target = &target;
    let scan = |cands: &[[usize; 2]]| -> Option<[usize; 2]> {
        let cands: Vec<[usize; 2]> = cands
            .iter()
            .copied()
            .filter(|&[i, j]| i < j && grid.at(i) > mu_inf)
            .collect();
        // candidates arrive grouped by x_e1, so each row is prepared once
        let rows: Vec<&[[usize; 2]]> = cands.chunk_by(|a, b| a[0] == b[0]).collect();
        let losses: Vec<f64> = rows
            .par_iter()
            .flat_map_iter(|row| {
                let r = draws.row(grid.at(row[0][0]), mu_inf);
                row.iter()
                    .map(move |&[_, j]| cooke_loss(target, &r.evaluate(grid.at(j)).orders))
                    .collect::<Vec<_>>()
            })
            .collect();
        argmin(&losses).map(|k| cands[k])
    };
    let [bi, bj] = multilevel([grid.len(); 2], &factors, scan)
        .ok_or_else(|| Error::config("no feasible Fréchet grid candidate"))?;
    let hyper = FrechetHyper::new(m, grid.at(bi), grid.at(bj), mu_inf)?;
    let est = draws.evaluate(&hyper);
    let mut warnings = Vec::new();
    if est.ess < ESS_FLOOR {
        warnings.push(format!(
            "Fréchet m={m}: importance ESS {:.1} is below {ESS_FLOOR}",
            est.ess
        ));
    }
    Ok(CalibrationResult {
        loss: cooke_loss(target, &est.orders),
        achieved_orders: est.orders,
        hyper: PriorSpec::Frechet(hyper),
        ess: Some(est.ess),
        warnings,
    })
}

/// Calibrate `(x_e3, x_e4, ρ)` for a given virtual size `m`. Only
/// `is.n_draws` is used: the importance law is fixed by the `z` scale.
pub fn calibrate_weibull<R: Rng + ?Sized>(
    m: f64,
    eq: &ExpertQuantiles,
    grid: &AnchorGrid,
    rho_grid: &RhoGrid,
    is: &ISConfig,
    rng: &mut R,
) -> Result<CalibrationResult> {
    grid.validate()?;
    rho_grid.validate()?;
    is.validate()?;
    let draws = WeibullIsDraws::new(m, is.n_draws, rng);
    let rhos = rho_grid.values();
    let target = eq.orders();
    let xs = eq.values();
    let levels: Vec<_> = rhos.par_iter().map(|&r| draws.level(r)).collect();
    // ρ is thinned to about two values per decade first, then refined
    // alongside the anchors
    let anchor_f = grid.factors();
    let mut rho_f = (rho_grid.per_decade / 2).max(1);
    let factors: Vec<[usize; 3]> = anchor_f
        .iter()
        .enumerate()
        .map(|(p, &f)| {
            let r = if p + 1 == anchor_f.len() { 1 } else { rho_f };
            rho_f = (rho_f / 2).max(1);
            [f, f, r]
        })
        .collect();
    // Early passes only locate the basin, so they use a quarter of the
    // draws of the pass after them; the last pass uses all of them.
    let mut pass = 0;
    let scan = |cands: &[[usize; 3]]| -> Option<[usize; 3]> {
        let shrink = 4usize.pow((factors.len() - 1 - pass) as u32);
        let n = (is.n_draws / shrink).max(ISConfig::MIN_DRAWS);
        pass += 1;
        let cands: Vec<[usize; 3]> = cands.iter().copied().filter(|c| c[0] < c[1]).collect();
        let losses: Vec<f64> = cands
            .par_iter()
            .map(|&[i, j, r]| {
                let est = levels[r].evaluate_prefix(n, grid.at(i), grid.at(j), &xs);
                cooke_loss(&target, &est.orders)
            })
            .collect();
        argmin(&losses).map(|k| cands[k])
    };
    let [bi, bj, br] = multilevel([grid.len(), grid.len(), rhos.len()], &factors, scan)
        .ok_or_else(|| Error::config("no feasible Weibull grid candidate"))?;
    let hyper = WeibullHyper::new(m, grid.at(bi), grid.at(bj), rhos[br])?;
    let est = levels[br].evaluate(hyper.x_e3, hyper.x_e4, &xs);
    let mut warnings = Vec::new();
    if est.ess < ESS_FLOOR {
        warnings.push(format!(
            "Weibull m={m}: importance ESS {:.1} is below {ESS_FLOOR}",
            est.ess
        ));
    }
    if br == 0 || br == rhos.len() - 1 {
        warnings.push(format!(
            "Weibull m={m}: calibrated rho {:.3e} lies on the grid boundary",
            rhos[br]
        ));
    }
    Ok(CalibrationResult {
        loss: cooke_loss(&target, &est.orders),
        achieved_orders: est.orders,
        hyper: PriorSpec::Weibull(hyper),
        ess: Some(est.ess),
        warnings,
    })
}

/// Search a strictly increasing three-point virtual sample for the Gumbel prior.
pub fn calibrate_gumbel_virtual(
    eq: &ExpertQuantiles,
    grid: &GumbelGrid,
    mu_floor: Option<f64>,
) -> Result<CalibrationResult> {
    let g = &grid.anchors;
    g.validate()?;
    let target = eq.orders();
    let xs = eq.values();
    let orders = |v: [f64; 3], nodes: usize| -> Option<Vec<f64>> {
        let h = GumbelHyper::new(v.to_vec(), mu_floor).ok()?;
        let p = GumbelPredictive::new(&h, nodes);
        Some(xs.iter().map(|&x| p.cdf(x)).collect())
    };
    let loss_of = |t: [usize; 3]| -> f64 {
        match orders([g.at(t[0]), g.at(t[1]), g.at(t[2])], grid.search_nodes) {
            Some(o) => cooke_loss(&target, &o),
            None => f64::INFINITY,
        }
    };
    let scan = |cands: &[[usize; 3]]| -> Option<[usize; 3]> {
        let cands: Vec<[usize; 3]> = cands
            .iter()
            .copied()
            .filter(|c| c[0] < c[1] && c[1] < c[2])
            .collect();
        let losses: Vec<f64> = cands.par_iter().map(|&t| loss_of(t)).collect();
        argmin(&losses).map(|k| cands[k])
    };
    let factors: Vec<[usize; 3]> = g.factors().into_iter().map(|f| [f; 3]).collect();
    let best = multilevel([g.len(); 3], &factors, scan)
        .ok_or_else(|| Error::config("no feasible Gumbel virtual sample on the grid"))?;
    let v = vec![g.at(best[0]), g.at(best[1]), g.at(best[2])];
    let hyper = GumbelHyper::new(v, mu_floor)?;
    let p = GumbelPredictive::new(&hyper, GumbelPredictive::DEFAULT_NODES);
    let achieved: Vec<f64> = xs.iter().map(|&x| p.cdf(x)).collect();
    Ok(CalibrationResult {
        loss: cooke_loss(&target, &achieved),
        achieved_orders: achieved,
        hyper: PriorSpec::Gumbel(hyper),
        ess: None,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_rules() {
        assert_eq!(argmin(&[3.0, 1.0, 1.0]), Some(1));
        assert_eq!(argmin(&[f64::NAN, 2.0]), Some(1));
        assert_eq!(argmin(&[f64::INFINITY, f64::NAN]), None);
    }

    #[test]
    fn grid_lattice() {
        let g = AnchorGrid {
            lo: 0.0,
            hi: 10.0,
            step: 0.5,
            coarse_factor: 4,
            exhaustive: false,
        };
        assert_eq!(g.len(), 21);
        assert_eq!(thinned(g.len(), 4), vec![0, 4, 8, 12, 16, 20]);
        assert_eq!(g.factors(), vec![4, 1]);
        assert_eq!(around(2, 4, 1, 21), (0..=6).collect::<Vec<_>>());
        assert_eq!(around(10, 8, 4, 21), vec![2, 6, 10, 14, 18]);
        assert_eq!(around(20, 3, 2, 21), vec![18, 20]);
        let r = RhoGrid::default().values();
        assert_eq!(r.len(), 21);
        assert!((r[0] - 1e-4).abs() < 1e-18 && (r[20] - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn multilevel_finds_a_separable_minimum() {
        let target = [37usize, 150];
        let mut evals = 0;
        let best = multilevel([351, 351], &[[16, 16], [4, 4], [1, 1]], |c: &[[usize; 2]]| {
            evals += c.len();
            c.iter()
                .copied()
                .min_by_key(|p| p[0].abs_diff(target[0]).pow(2) + p[1].abs_diff(target[1]).pow(2))
        });
        assert_eq!(best, Some(target));
        assert!(evals < 1000, "{evals}");
    }
}
