//! Fits Gamma laws to three contact patterns with the same mean and shows how
//! irregularity changes the chance of a long-enough contact.

use d2d_offload::closeness::{closeness, fit_gamma, ContactLaw};
use d2d_offload::trace::ContactStats;
use d2d_offload::{UserId, UserPair};

fn main() -> d2d_offload::Result<()> {
    let pair = UserPair::new(UserId(0), UserId(1));
    println!("variance  law                        w(5s)   w(10s)  w(20s)");
    for variance in [0.0, 25.0, 400.0] {
        let stats = ContactStats {
            pair,
            n_encounters: 50,
            mean_duration: 10.0,
            irregularity: variance,
        };
        let law = fit_gamma(&stats)?;
        let label = match &law {
            ContactLaw::Gamma(g) => format!("Gamma(k={:.3}, θ={:.3})", g.shape(), g.scale()),
            ContactLaw::Degenerate(m) => format!("fixed at {m}"),
        };
        let w: Vec<f64> = [5.0, 10.0, 20.0]
            .iter()
            .map(|x| closeness(&law, *x).map(|c| c.value()))
            .collect::<Result<_, _>>()?;
        println!("{variance:>8}  {label:<26} {:.4}  {:.4}  {:.4}", w[0], w[1], w[2]);
    }
    Ok(())
}
