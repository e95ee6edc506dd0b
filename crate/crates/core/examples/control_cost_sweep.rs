//! Sweeps offloaded traffic against the eNB control cost, given as a fraction of the cellular rate.
//! Pass a replica count as the first argument (default 200).

use d2d_offload::engine::EpisodeConfig;
use d2d_offload::sweep::{run_sweep, select, Axis, Metric, SweepSpec};

fn main() -> d2d_offload::Result<()> {
    let replicas = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let spec = SweepSpec {
        axis: Axis::CostFraction,
        values: vec![0.05, 0.15, 0.30, 0.50],
        replicas,
        base: EpisodeConfig::default(),
    };
    let rows = run_sweep(&spec, 1)?;
    println!(
        "{:>8} {:>22} {:>22}",
        spec.axis.name(),
        "offloaded/request",
        "eNB rate sum"
    );
    let offload = select(&rows, Metric::OffloadedTraffic);
    let enb = select(&rows, Metric::EnbDataRateSum);
    for (o, e) in offload.iter().zip(&enb) {
        println!(
            "{:>8} {:>13.3} ± {:<6.3} {:>13.1} ± {:<6.1}",
            o.value, o.mean, o.std, e.mean, e.std
        );
    }
    Ok(())
}
