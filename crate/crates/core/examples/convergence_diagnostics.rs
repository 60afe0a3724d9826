//! Rank-normalized split R-hat and batch-means standard errors on toy
//! chains: well-mixed chains score near 1, a stuck chain does not.

use evd_select::inference::diagnostics::{batch_means_se, rank_rhat, split_rhat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// AR(1) chain with stationary law N(centre, 1).
fn ar1(phi: f64, centre: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let e = Normal::new(0.0, (1.0 - phi * phi).sqrt()).unwrap();
    let mut x = centre;
    (0..n)
        .map(|_| {
            x = centre + phi * (x - centre) + e.sample(rng);
            x
        })
        .collect()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let good: Vec<Vec<f64>> = (0..4).map(|_| ar1(0.9, 0.0, 5_000, &mut rng)).collect();
    let mut bad = good.clone();
    bad[3] = ar1(0.9, 3.0, 5_000, &mut rng);
    for (name, chains) in [("mixed", &good), ("one chain stuck", &bad)] {
        let refs: Vec<&[f64]> = chains.iter().map(Vec::as_slice).collect();
        println!(
            "{name}: split R-hat {:.4}, rank R-hat {:.4}, MCSE of mean {:.4}",
            split_rhat(&refs),
            rank_rhat(&refs),
            batch_means_se(&refs, 20)
        );
    }
}
