//! The scale-like parameter nu is conjugate given (mu, xi): its conditional
//! posterior is a gamma law whose shape grows by the sample size.

use evd_select::inference::{conditional_nu_posterior, log_conditional_mu, log_conditional_xi};
use evd_select::priors::FrechetHyper;

fn main() -> evd_select::Result<()> {
    let h = FrechetHyper::new(5.0, 87.72, 133.95, 0.0)?;
    let data = [97.0, 120.5, 143.2, 88.1, 210.4, 101.3];
    let (mu, xi) = (20.0, 0.4);

    let law = conditional_nu_posterior(&h, mu, xi, &data)?;
    println!(
        "nu | mu={mu}, xi={xi}, x ~ Gamma(shape {}, rate {:.3e}); mean {:.3e}",
        law.shape,
        law.rate,
        law.shape / law.rate
    );

    // ξ profile with ν integrated out
    for xi in [0.2, 0.3, 0.4, 0.6, 0.9] {
        println!("  ln pi(xi={xi} | mu, x) = {:.3}", log_conditional_xi(&h, xi, mu, &data));
    }
    let nu = law.shape / law.rate;
    for mu in [0.0, 20.0, 60.0, 85.0] {
        println!("  ln pi(mu={mu} | nu, xi, x) = {:.3}", log_conditional_mu(&h, mu, nu, xi, &data));
    }
    Ok(())
}
