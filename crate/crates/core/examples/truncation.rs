//! Truncating a column block to finitely many subatoms.

use martblocks::gen::{gen_nc_block, gen_nc_filtration};
use martblocks::nc::{truncate_block, NCBlock};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> martblocks::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let filt = gen_nc_filtration(&mut rng, 4, 4)?;
    let block = gen_nc_block(&mut rng, &filt, 2.0, false);
    let NCBlock::Cancel { level, terms } = &block else {
        return Ok(());
    };
    println!(
        "block at level {level} with {} terms, mass {:.4}",
        terms.len(),
        block.lambda_mass()
    );
    for keep in 0..=terms.len() {
        let t = truncate_block(&block, keep, &filt, 2.0)?;
        println!(
            "keep {keep}: tail mass {:.4}, distance {:.4} ≤ {:.4}",
            t.tail_mass,
            t.distance,
            2.0 * *level as f64 * t.tail_mass
        );
    }
    Ok(())
}
