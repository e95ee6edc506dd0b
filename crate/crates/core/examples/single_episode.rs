//! Runs one episode with the defaults and prints who was served how.

use d2d_offload::engine::{run_episode_logged, EpisodeConfig, Route};

fn main() -> d2d_offload::Result<()> {
    let (metrics, log) = run_episode_logged(&EpisodeConfig::default())?;
    println!("user offsn  m_n  d2d  fail  enb     R_c     R_d  offloaded");
    for u in &metrics.per_user {
        let offsn = u.offsn.map_or("-".to_string(), |i| i.to_string());
        println!(
            "{:>4} {:>5} {:>4} {:>4} {:>5} {:>4} {:>7.2} {:>7.2} {:>10.2}",
            u.user,
            offsn,
            u.m_n,
            u.old_served_d2d,
            u.d2d_failures,
            u.enb_served(),
            u.r_c,
            u.r_d,
            u.offloaded
        );
    }
    let transfers = log.iter().filter(|e| matches!(e.route, Route::D2d { .. })).count();
    let a = &metrics.aggregates;
    println!(
        "\n{} requests, {} over D2D ({} attempts), offloaded per request {:.3}, eNB rate sum {:.1}",
        a.requests, transfers, a.d2d_attempts, a.offloaded_traffic, a.enb_data_rate_sum
    );
    Ok(())
}
