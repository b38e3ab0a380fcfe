//! `|⟨b, φ⟩| ≤ |b| (‖φ‖_bmo + sup_k ‖dφ_k‖_∞)` for blocks at `p = 2`.

use martblocks::atoms::duality_bound_check_p2;
use martblocks::gen::{
    gen_block, gen_filtration, gen_hermitian, gen_nc_block, gen_nc_filtration, gen_rv,
};
use martblocks::nc::nc_duality_bound_check_p2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> martblocks::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..4 {
        let filt = gen_filtration(&mut rng, 30, 5)?;
        let b = gen_block(&mut rng, &filt, 2.0);
        let phi = gen_rv(&mut rng, &filt);
        let (lhs, rhs) = duality_bound_check_p2(&b, &phi, &filt)?;
        println!("functions: {lhs:.4} ≤ {rhs:.4}");
    }
    for _ in 0..4 {
        let filt = gen_nc_filtration(&mut rng, 4, 4)?;
        let b = gen_nc_block(&mut rng, &filt, 2.0, true);
        let phi = gen_hermitian(&mut rng, 4);
        let (lhs, rhs) = nc_duality_bound_check_p2(&b, &phi, &filt)?;
        println!("matrices:  {lhs:.4} ≤ {rhs:.4}");
    }
    Ok(())
}
