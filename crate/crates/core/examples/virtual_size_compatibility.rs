//! Choose the Fréchet virtual size whose prior predictive is closest in
//! Kullback-Leibler divergence to the Gumbel prior predictive, so that no
//! model is favoured a priori.

use evd_select::calibration::{
    calibrate_frechet, calibrate_gumbel_virtual, calibrate_virtual_size, AnchorGrid,
    ExpertQuantiles, GumbelGrid, ISConfig, PriorSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> evd_select::Result<()> {
    let eq = ExpertQuantiles::rainfall_quartiles();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gumbel = calibrate_gumbel_virtual(&eq, &GumbelGrid::around(&eq), Some(0.0))?;
    let PriorSpec::Gumbel(gh) = &gumbel.hyper else {
        unreachable!()
    };
    let grid = AnchorGrid::around(&eq);
    let is = ISConfig::default();
    let candidates = (1..=8)
        .map(|m| calibrate_frechet(m as f64, 0.0, &eq, &grid, &is, &mut rng))
        .collect::<evd_select::Result<Vec<_>>>()?;
    let r = calibrate_virtual_size(&candidates, gh, 50_000, &mut rng)?;
    for e in &r.entries {
        println!("m = {}  KL = {:.4}", e.m, e.kl);
    }
    println!("selected m* = {}", r.m_star);
    Ok(())
}
