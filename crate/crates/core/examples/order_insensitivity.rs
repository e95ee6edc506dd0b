//! Serves the same users in ascending and in reversed order and compares the
//! mean offloaded traffic over many replicas.

use d2d_offload::engine::{run_episode, EpisodeConfig};
use d2d_offload::UserId;

fn mean_offload(reverse: bool, replicas: u64) -> d2d_offload::Result<f64> {
    let base = EpisodeConfig::default();
    let mut order: Vec<UserId> = (0..base.n_users as u32).map(UserId).collect();
    if reverse {
        order.reverse();
    }
    let mut sum = 0.0;
    for seed in 0..replicas {
        let config = EpisodeConfig {
            seed,
            arrival_order: Some(order.clone()),
            ..base.clone()
        };
        sum += run_episode(&config)?.aggregates.offloaded_traffic;
    }
    Ok(sum / replicas as f64)
}

fn main() -> d2d_offload::Result<()> {
    let replicas = 300;
    println!("ascending order: {:.4}", mean_offload(false, replicas)?);
    println!("reversed order:  {:.4}", mean_offload(true, replicas)?);
    Ok(())
}
