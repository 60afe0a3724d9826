mod common;

use evd_select::calibration::{
    calibrate_frechet, calibrate_virtual_size, calibrate_weibull, cooke_loss, histogram_kl,
    AnchorGrid, CalibrationResult, ExpertQuantiles, FrechetIsDraws, GumbelPredictive, ISConfig,
    PredictiveCdf, PriorSpec, RhoGrid, WeibullIsDraws,
};
use evd_select::priors::{FrechetHyper, GumbelHyper, WeibullHyper};
use evd_select::{FrechetParams, GumbelParams, WeibullParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VALUES: [f64; 3] = [75.0, 100.0, 150.0];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fraction of `draws` at or below each value.
fn empirical_cdf(draws: &[f64], xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| draws.iter().filter(|&&d| d <= x).count() as f64 / draws.len() as f64)
        .collect()
}

fn assert_close(a: &[f64], b: &[f64], tol: f64, what: &str) {
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() < tol, "{what}: {a:?} vs {b:?}");
    }
}

/// Draw `θ` from the prior, then `x | θ` by inversion.
fn predictive_sample(n: usize, seed: u64, mut draw: impl FnMut(&mut ChaCha8Rng) -> f64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| draw(&mut r)).collect()
}

fn uniform(r: &mut ChaCha8Rng) -> f64 {
    r.random_range(f64::EPSILON..1.0)
}

#[test]
fn frechet_importance_predictive_matches_direct_simulation() {
    for (m, x_e1, x_e2) in [(1.0, 100.41, 130.20), (5.0, 87.72, 133.95)] {
        let h = FrechetHyper::new(m, x_e1, x_e2, 0.0).unwrap();
        let is = FrechetIsDraws::new(m, &ISConfig::default(), &VALUES, &mut rng(1));
        let est = is.evaluate(&h);
        let direct = predictive_sample(400_000, 2, |r| {
            let p: FrechetParams = h.sample(r);
            p.quantile(uniform(r)).unwrap()
        });
        assert_close(&est.orders, &empirical_cdf(&direct, &VALUES), 0.01, "Fréchet");
        assert_close(&is.cdf_at(&h, &VALUES), &est.orders, 1e-12, "cached vs fresh");
    }
}

#[test]
fn weibull_importance_predictive_matches_direct_simulation() {
    let h = WeibullHyper::new(5.0, 92.74, 128.44, 0.0011).unwrap();
    let is = WeibullIsDraws::new(5.0, 100_000, &mut rng(3));
    let est = is.evaluate(&h, &VALUES);
    let direct = predictive_sample(400_000, 4, |r| {
        let p: WeibullParams = h.sample(r);
        p.quantile(uniform(r)).unwrap()
    });
    assert_close(&est.orders, &empirical_cdf(&direct, &VALUES), 0.01, "Weibull");
}

#[test]
fn gumbel_quadrature_predictive_matches_direct_simulation() {
    let h = GumbelHyper::new(vec![81.0, 93.0, 101.0], Some(0.0)).unwrap();
    let pred = GumbelPredictive::new(&h, GumbelPredictive::DEFAULT_NODES);
    let s = h.exact_sampler();
    let direct = predictive_sample(400_000, 5, |r| {
        let p: GumbelParams = s.sample(r);
        p.quantile(uniform(r)).unwrap()
    });
    let quad: Vec<f64> = VALUES.iter().map(|&x| pred.cdf(x)).collect();
    assert_close(&quad, &empirical_cdf(&direct, &VALUES), 0.005, "Gumbel");
}

#[test]
fn predictive_limits() {
    let h = FrechetHyper::new(5.0, 87.72, 133.95, 0.0).unwrap();
    let is = FrechetIsDraws::new(5.0, &ISConfig::default(), &VALUES, &mut rng(6));
    let c = is.cdf_at(&h, &[-1e6, -1.0, 1e12]);
    assert_eq!(c[0], 0.0);
    assert_eq!(c[1], 0.0);
    assert!(c[2] > 0.999);
}

/// Candidates a small step apart reuse the same draws, so the orders move
/// by an amount proportional to the step.
#[test]
fn loss_surface_is_smooth_in_the_anchors() {
    let eq = ExpertQuantiles::rainfall_quartiles();
    let is = FrechetIsDraws::new(5.0, &ISConfig::default(), &VALUES, &mut rng(7));
    let loss = |x_e2: f64| {
        let h = FrechetHyper::new(5.0, 87.72, x_e2, 0.0).unwrap();
        cooke_loss(&eq.orders(), &is.evaluate(&h).orders)
    };
    let base = loss(133.95);
    let d1 = loss(133.95 + 1e-3) - base;
    let d2 = loss(133.95 + 2e-3) - base;
    assert!(d1.abs() < 1e-3);
    assert!((d2 / d1 - 2.0).abs() < 0.05, "{d1} {d2}");
}

fn frechet_calibration(m: f64, seed: u64) -> CalibrationResult {
    let eq = ExpertQuantiles::rainfall_quartiles();
    calibrate_frechet(m, 0.0, &eq, &AnchorGrid::around(&eq), &ISConfig::default(), &mut rng(seed)).unwrap()
}

fn anchors(c: &CalibrationResult) -> (f64, f64) {
    match &c.hyper {
        PriorSpec::Frechet(h) => (h.x_e1, h.x_e2),
        PriorSpec::Weibull(h) => (h.x_e3, h.x_e4),
        PriorSpec::Gumbel(_) => unreachable!(),
    }
}

#[test]
fn calibration_is_deterministic_given_the_seed() {
    assert_eq!(frechet_calibration(3.0, 11), frechet_calibration(3.0, 11));
    let eq = ExpertQuantiles::rainfall_quartiles();
    let run = || {
        calibrate_weibull(3.0, &eq, &AnchorGrid::around(&eq), &RhoGrid::default(), &ISConfig::default(), &mut rng(12))
            .unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn calibrated_orders_are_increasing_probabilities() {
    let c = frechet_calibration(2.0, 13);
    assert!(c.achieved_orders.windows(2).all(|w| w[0] < w[1]));
    assert!(c.achieved_orders.iter().all(|&o| o > 0.0 && o < 1.0));
    assert!((c.loss - cooke_loss(&ExpertQuantiles::rainfall_quartiles().orders(), &c.achieved_orders)).abs() < 1e-15);
    let (x_e1, x_e2) = anchors(&c);
    assert!(0.0 < x_e1 && x_e1 < x_e2);
}

#[test]
fn single_quantile_calibration_is_well_defined() {
    let eq = ExpertQuantiles::new(vec![(0.5, 100.0)]).unwrap();
    let grid = AnchorGrid::around(&eq);
    let c = calibrate_frechet(3.0, 0.0, &eq, &grid, &ISConfig::default(), &mut rng(14)).unwrap();
    assert!(c.loss.is_finite());
    assert!((c.achieved_orders[0] - 0.5).abs() < 0.02);
}

/// An observed property of the case-study calibrations rather than a theorem.
#[test]
fn inverse_mean_anchor_is_nonincreasing_in_m() {
    let x_e1: Vec<f64> = (1..=8).map(|m| anchors(&frechet_calibration(m as f64, 15)).0).collect();
    assert!(x_e1.windows(2).all(|w| w[1] <= w[0]), "{x_e1:?}");
}

#[test]
fn truncation_level_is_stable_across_m() {
    let eq = ExpertQuantiles::rainfall_quartiles();
    let rhos: Vec<f64> = [1.0, 5.0, 8.0]
        .iter()
        .map(|&m| {
            let c = calibrate_weibull(m, &eq, &AnchorGrid::around(&eq), &RhoGrid::default(), &ISConfig::default(), &mut rng(16))
                .unwrap();
            match c.hyper {
                PriorSpec::Weibull(h) => h.rho,
                _ => unreachable!(),
            }
        })
        .collect();
    let (lo, hi) = rhos.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 10.0, "{rhos:?}");
}

// ---------------------------------------------------------------------------
// Cooke's loss

fn gaps_to_orders(gaps: &[f64]) -> Vec<f64> {
    let total: f64 = gaps.iter().sum();
    let mut acc = 0.0;
    gaps[..gaps.len() - 1]
        .iter()
        .map(|g| {
            acc += g / total;
            acc
        })
        .collect()
}

proptest! {
    #[test]
    fn cooke_loss_is_a_divergence(
        t in prop::collection::vec(0.01..1.0f64, 2..8),
        noise in prop::collection::vec(0.5..2.0f64, 8),
    ) {
        let target = gaps_to_orders(&t);
        let a: Vec<f64> = t.iter().zip(&noise).map(|(g, e)| g * e).collect();
        let achieved = gaps_to_orders(&a);
        prop_assert!(cooke_loss(&target, &achieved) >= 0.0);
        prop_assert!(cooke_loss(&target, &target).abs() < 1e-15);
    }

    /// Splitting gap `j` in the same proportion in target and achieved
    /// leaves the loss unchanged.
    #[test]
    fn cooke_loss_is_invariant_under_proportional_refinement(
        t in prop::collection::vec(0.01..1.0f64, 2..8),
        noise in prop::collection::vec(0.5..2.0f64, 8),
        j in 0usize..8, lambda in 0.05..0.95f64,
    ) {
        let a: Vec<f64> = t.iter().zip(&noise).map(|(g, e)| g * e).collect();
        let j = j % t.len();
        let split = |g: &[f64]| -> Vec<f64> {
            let mut v = g.to_vec();
            let x = v[j];
            v[j] = lambda * x;
            v.insert(j + 1, (1.0 - lambda) * x);
            v
        };
        let before = cooke_loss(&gaps_to_orders(&t), &gaps_to_orders(&a));
        let after = cooke_loss(&gaps_to_orders(&split(&t)), &gaps_to_orders(&split(&a)));
        prop_assert!((before - after).abs() < 1e-12 * before.max(1.0));
    }
}

#[test]
fn zero_achieved_gap_is_infinite_loss() {
    assert_eq!(cooke_loss(&[0.25, 0.5, 0.75], &[0.3, 0.3, 0.75]), f64::INFINITY);
}

// ---------------------------------------------------------------------------
// Compatibility

fn gumbel_cloud(shift: f64, n: usize, seed: u64) -> Vec<f64> {
    let g = GumbelParams::new(shift, 1.0).unwrap();
    let mut r = rng(seed);
    (0..n).map(|_| g.quantile(uniform(&mut r)).unwrap()).collect()
}

#[test]
fn kl_grows_with_the_shift() {
    let base = gumbel_cloud(0.0, 200_000, 20);
    let kls: Vec<f64> = [0.0, 0.25, 0.5, 1.0, 2.0]
        .iter()
        .map(|&d| histogram_kl(&base, &gumbel_cloud(d, 200_000, 21)))
        .collect();
    assert!(kls[0] < 0.01, "{kls:?}");
    assert!(kls.windows(2).all(|w| w[1] > w[0]), "{kls:?}");
}

#[test]
fn identical_samples_have_zero_kl() {
    let a = gumbel_cloud(3.0, 10_000, 22);
    assert_eq!(histogram_kl(&a, &a), 0.0);
}

fn case_study_gumbel() -> GumbelHyper {
    GumbelHyper::new(vec![81.0, 93.0, 101.0], Some(0.0)).unwrap()
}

fn frechet_candidate(m: f64, x_e1: f64, x_e2: f64) -> CalibrationResult {
    CalibrationResult {
        hyper: PriorSpec::Frechet(FrechetHyper::new(m, x_e1, x_e2, 0.0).unwrap()),
        achieved_orders: vec![0.25, 0.5, 0.75],
        loss: 0.0,
        ess: None,
        warnings: Vec::new(),
    }
}

#[test]
fn single_candidate_is_selected() {
    let c = vec![frechet_candidate(4.0, 89.0, 133.0)];
    let r = calibrate_virtual_size(&c, &case_study_gumbel(), 10_000, &mut rng(23)).unwrap();
    assert_eq!(r.m_star, 4.0);
    assert_eq!(r.entries.len(), 1);
}

#[test]
fn weibull_candidates_are_accepted_and_mixed_sets_rejected() {
    let w = CalibrationResult {
        hyper: PriorSpec::Weibull(WeibullHyper::new(5.0, 92.74, 128.44, 0.0011).unwrap()),
        ..frechet_candidate(1.0, 100.0, 130.0)
    };
    let g = case_study_gumbel();
    let r = calibrate_virtual_size(std::slice::from_ref(&w), &g, 10_000, &mut rng(24)).unwrap();
    assert!(r.entries[0].kl.is_finite() && r.entries[0].kl >= 0.0);
    let mixed = vec![frechet_candidate(1.0, 100.0, 130.0), w];
    assert!(calibrate_virtual_size(&mixed, &g, 10_000, &mut rng(25)).is_err());
}
