//! Rebuilds the closeness graph of one episode for several required contact
//! times and shows how thresholding splits users into offline networks and
//! the white area.

use std::collections::BTreeMap;

use d2d_offload::closeness::closeness;
use d2d_offload::engine::{build_social_layer, EpisodeConfig};
use d2d_offload::offsn::{partition, ClosenessGraph};

fn main() -> d2d_offload::Result<()> {
    let config = EpisodeConfig::default();
    let social = build_social_layer(&config)?;
    println!(
        "{} users, {} pairs with contact history",
        social.graph.users().len(),
        social.laws.len()
    );
    for x_min in [0.1, 5.0, 10.0, 15.0, 20.0, 40.0] {
        let edges = social
            .laws
            .iter()
            .map(|(pair, law)| Ok((*pair, closeness(law, x_min)?.value())))
            .collect::<d2d_offload::Result<BTreeMap<_, _>>>()?;
        let graph = ClosenessGraph::new(social.graph.positions().clone(), edges)?;
        let p = partition(&graph, config.w_t);
        let sizes: Vec<usize> = p.offsns().iter().map(|s| s.len()).collect();
        println!(
            "x_min = {x_min:>4} s, w_t = {}: OffSN sizes {sizes:?}, white area {}",
            config.w_t,
            p.white_area().len()
        );
    }
    Ok(())
}
