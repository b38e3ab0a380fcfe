//! Atomic block for `E_k χ_A - E_{k-1} χ_A`, with its certified cost.

use martblocks::atoms::{
    decompose_delta_indicator, subatom_l1_bound_check, validate_block, BlockRule,
};
use martblocks::gen::{gen_filtration, gen_set};
use martblocks::prob::omega4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> martblocks::Result<()> {
    let filt = omega4();
    let block = decompose_delta_indicator(&[0], &filt, 2)?;
    println!("fixture block {:?}", block.values(4));
    for t in block.terms() {
        println!(
            "  λ = {:+.4}  level {}  set {:?}  atom {:?}",
            t.lambda, t.atom.level, t.atom.set, t.atom.values
        );
    }
    println!(
        "  cost {}",
        validate_block(&block, &filt, BlockRule::hardy(f64::INFINITY))?
    );

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let filt = gen_filtration(&mut rng, 48, 6)?;
    let a0 = gen_set(&mut rng, filt.len());
    for k in 2..=filt.depth() {
        let block = decompose_delta_indicator(&a0, &filt, k)?;
        let cost = validate_block(&block, &filt, BlockRule::hardy(f64::INFINITY))?;
        let level = match &block {
            martblocks::atoms::AtomicBlock::Cancel { level, .. } => *level,
            _ => unreachable!(),
        };
        let l1_ok = block
            .terms()
            .iter()
            .all(|t| subatom_l1_bound_check(&t.atom, level, &filt));
        println!(
            "k = {k}: {} subatoms, cost {cost:.4} ≤ 6μ(A0) = {:.4}, l1 bounds {l1_ok}",
            block.terms().len(),
            6.0 * filt.mass(&a0)
        );
    }
    Ok(())
}
