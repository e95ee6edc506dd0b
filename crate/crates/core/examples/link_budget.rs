//! Mean cellular and D2D spectral efficiency against distance for the
//! default channel, with and without eNB interference on the D2D link.

use d2d_offload::phy::{mean_gain, rate_clean, rate_d2d, ChannelConfig};

fn main() -> d2d_offload::Result<()> {
    let ch = ChannelConfig::default();
    let noise = ch.noise_mw();
    let eta = ch.path_loss_exp;
    let enb_at_user = ch.enb_tx_mw() * mean_gain(800.0, eta);
    println!(
        "noise {:.3e} mW, eNB tx {:.1} mW, UE tx {:.1} mW",
        noise,
        ch.enb_tx_mw(),
        ch.ue_tx_mw()
    );
    println!("   d_m   cellular   d2d_clean   d2d_under_eNB");
    for d in [10.0, 20.0, 40.0, 80.0, 160.0, 400.0, 800.0] {
        let cell = rate_clean(ch.enb_tx_mw() * mean_gain(d, eta), noise)?;
        let d2d_signal = ch.ue_tx_mw() * mean_gain(d, eta);
        let clean = rate_clean(d2d_signal, noise)?;
        let loaded = rate_d2d(d2d_signal, enb_at_user, 0.0, noise)?;
        println!("{d:>6} {cell:>10.3} {clean:>11.3} {loaded:>15.3}");
    }
    Ok(())
}
