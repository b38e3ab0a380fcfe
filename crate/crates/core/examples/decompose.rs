//! Decomposes a function into certified atomic blocks, and compares with the exact gauge.

use martblocks::atoms::{atb_norm_lp_with_certificate, davis_split, decompose_h1_to_blocks};
use martblocks::gen::{gen_filtration, gen_rv};
use martblocks::norms::big_h1_norm;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> martblocks::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let filt = gen_filtration(&mut rng, 8, 4)?;
    let f = gen_rv(&mut rng, &filt);
    println!("f = {:?}", f.values());
    let (g, h) = davis_split(&f, &filt)?;
    println!(
        "Davis split: ‖g‖_∞ {:.4}, ‖h‖_1 {:.4}",
        g.norm(f64::INFINITY),
        h.norm(1.0)
    );

    for p in [2.0, f64::INFINITY] {
        let report = decompose_h1_to_blocks(&f, &filt, p)?;
        println!(
            "p = {p}: {} blocks, certified cost {:.4}",
            report.blocks.len(),
            report.cost
        );
    }
    let lp = atb_norm_lp_with_certificate(&f, &filt)?;
    println!(
        "H1 {:.4}  ‖f‖_1 {:.4}  exact gauge {:.4}",
        big_h1_norm(&f, &filt)?,
        f.norm(1.0),
        lp.value
    );
    println!("optimal certificate uses {} blocks", lp.report.blocks.len());
    Ok(())
}
