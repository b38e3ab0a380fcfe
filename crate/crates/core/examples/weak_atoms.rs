//! Weak `∞`-atoms and their two-subatom split.

use martblocks::gen::{gen_filtration, gen_unit_measurable};
use martblocks::medians::{weak_atom, weak_atom_split};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> martblocks::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let filt = gen_filtration(&mut rng, 24, 4)?;
    let k = filt.depth();
    let phi = gen_unit_measurable(&mut rng, &filt, k);
    if phi.support().is_empty() {
        return Ok(());
    }
    let wa = weak_atom(&phi, &filt, k)?;
    println!("weak atom at level {k}: ‖w‖_1 = {:.4}", wa.w.norm(1.0));

    for block in filt.blocks(k).iter().take(4) {
        let xi = filt.rv((0..filt.len())
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect())?;
        let split = weak_atom_split(&xi, block, &filt, k)?;
        let err = (&split.a1 + &split.a2).sup_dist(&split.w);
        println!(
            "block {block:?}: cost {:.4} ≤ 6, reconstruction error {err:.1e}",
            split.cost
        );
    }
    Ok(())
}
