//! Synthesizes an encounter history for a handful of users and prints the
//! per-pair contact statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use d2d_offload::geometry::uniform_disk;
use d2d_offload::trace::{contact_stats, synthesize_trace, TraceSynthesis};

fn main() -> d2d_offload::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let positions = uniform_disk(6, 80.0, &mut rng);
    let records = synthesize_trace(&positions, &TraceSynthesis::default(), &mut rng)?;
    println!("{} encounters", records.len());
    println!("pair      n    mean_s   variance");
    for (pair, s) in contact_stats(&records) {
        println!(
            "{:>2}-{:<2} {:>6} {:>9.3} {:>10.3}",
            pair.lo(),
            pair.hi(),
            s.n_encounters,
            s.mean_duration,
            s.irregularity
        );
    }
    Ok(())
}
