//! Draws content requests for a stream of users and compares the catalog
//! growth with its expectation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use d2d_offload::onsn::{expected_library_size, ibp_select, IbpState};

fn main() -> d2d_offload::Result<()> {
    let alpha = 8.0;
    let users = 32;
    let runs = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sizes = 0.0;
    let mut old_share = 0.0;
    for _ in 0..runs {
        let mut state = IbpState::new(alpha)?;
        let (mut old, mut total) = (0u64, 0u64);
        for _ in 0..users {
            let sel = ibp_select(&state, &mut rng);
            old += sel.old_contents.len() as u64;
            total += sel.total();
            state.absorb(&sel)?;
        }
        sizes += state.library_size() as f64;
        old_share += old as f64 / total.max(1) as f64;
    }
    println!("alpha = {alpha}, {users} users, {runs} runs");
    println!("mean catalog size  {:.2}", sizes / runs as f64);
    println!("expected           {:.2}", expected_library_size(alpha, users)?);
    println!(
        "share of requests for already-seen content {:.3}",
        old_share / runs as f64
    );
    Ok(())
}
