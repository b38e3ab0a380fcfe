//! Conditional medians and the blocks built from them.

use martblocks::atoms::pairing;
use martblocks::gen::{gen_filtration, gen_measurable_set, gen_rv};
use martblocks::medians::{
    bmo_alpha_norm, build_block_indicator, build_block_mediandiff, build_block_power,
    build_block_sign, cm_lemma_check, MedianSequence,
};
use martblocks::norms::big_bmo_norm;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> martblocks::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let filt = gen_filtration(&mut rng, 40, 5)?;
    let f = gen_rv(&mut rng, &filt);
    let ms = MedianSequence::new(&f, &filt)?;
    let alpha = bmo_alpha_norm(&f, &filt, &ms, 2.0)?;
    println!(
        "BMO {:.4} ≤ 5·BMO^α = {:.4}",
        big_bmo_norm(&f, &filt)?,
        5.0 * alpha
    );

    let k = 3.min(filt.depth());
    let set = gen_measurable_set(&mut rng, &filt, k);
    let (_, lemma) = cm_lemma_check(&f, &filt, k, &set)?;
    println!(
        "level {k}, |A| = {} points, μ(A) = {:.4}, lemma holds: {lemma}",
        set.len(),
        filt.mass(&set)
    );

    for pp in [2.0, 3.0] {
        let mb = build_block_power(&set, &f, &filt, k, pp)?;
        let b = filt.rv(mb.values())?;
        println!(
            "power p' = {pp}: pairing {:.4}, cost {:.4} ≤ {:.4}",
            pairing(&f, &b)?,
            mb.cost,
            mb.bound
        );
    }
    let mb = build_block_mediandiff(&set, &f, &filt, k, 2.0)?;
    println!("median difference: cost {:.4} ≤ {:.4}", mb.cost, mb.bound);
    let mb = build_block_sign(&set, &f, &filt, k)?;
    let b = filt.rv(mb.values())?;
    println!(
        "sign: pairing {:.4}, cost {:.4} ≤ μ(A)",
        pairing(&f, &b)?,
        mb.cost
    );
    for n in [1, 4, 64] {
        let mb = build_block_indicator(&set, &filt, k, n)?;
        println!(
            "indicator N = {n}: cost {:.4}, slice bound {:.4}",
            mb.cost, mb.bound
        );
    }
    Ok(())
}
