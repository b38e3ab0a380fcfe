//! Column atomic block for `E_k p - E_{k-1} p` with `p` a projection in a matrix algebra.

use martblocks::gen::{gen_nc_filtration, gen_projection};
use martblocks::nc::algebra::real_op;
use martblocks::nc::{
    col_big_bmo_norm, col_big_h1_norm, decompose_delta_projection, m2chain, tau, validate_nc_block,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> martblocks::Result<()> {
    let m2 = m2chain();
    let p = real_op(&[&[0.5, 0.5], &[0.5, 0.5]]);
    let block = decompose_delta_projection(&p, &m2, 3)?;
    let b = block.value(2);
    let rows: Vec<String> = (0..2)
        .map(|i| format!("[{:.4}, {:.4}]", b[(i, 0)].re, b[(i, 1)].re))
        .collect();
    println!("2x2 chain: b = [{}]", rows.join(", "));
    println!(
        "  cost {:.6}  col H1 {:.6}  col BMO {:.6}",
        validate_nc_block(&block, &m2, f64::INFINITY)?,
        col_big_h1_norm(&b, &m2)?,
        col_big_bmo_norm(&b, &m2)?
    );

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let filt = gen_nc_filtration(&mut rng, 6, 5)?;
    let p = gen_projection(&mut rng, 6, 2);
    for k in 2..=filt.depth() {
        let block = decompose_delta_projection(&p, &filt, k)?;
        let cost = validate_nc_block(&block, &filt, 2.0)?;
        println!(
            "k = {k}: {} terms, cost {cost:.4} ≤ 6τ(p) = {:.4}",
            block.terms().len(),
            6.0 * tau(&p).re
        );
    }
    Ok(())
}
