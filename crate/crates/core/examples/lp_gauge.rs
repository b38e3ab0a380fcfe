//! Exact `p = ∞` gauge by linear programming: homogeneity and subadditivity.

use martblocks::atoms::atb_norm_lp;
use martblocks::gen::{gen_filtration, gen_rv};
use martblocks::prob::omega4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> martblocks::Result<()> {
    let filt = omega4();
    let d = filt.rv(vec![0.25, 0.25, -0.25, -0.25])?;
    println!(
        "gauge of E_2 χ_0 - E_1 χ_0 on the fixture: {}",
        atb_norm_lp(&d, &filt)?
    );

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let filt = gen_filtration(&mut rng, 8, 4)?;
        let f = gen_rv(&mut rng, &filt);
        let g = gen_rv(&mut rng, &filt);
        let (vf, vg) = (atb_norm_lp(&f, &filt)?, atb_norm_lp(&g, &filt)?);
        let vs = atb_norm_lp(&(&f + &g), &filt)?;
        let v3 = atb_norm_lp(&f.scale(-3.0), &filt)?;
        println!(
            "‖f‖_1 {:.4} ≤ |f| {vf:.4};  |f+g| {vs:.4} ≤ {:.4};  |-3f| {v3:.4} = {:.4}",
            f.norm(1.0),
            vf + vg,
            3.0 * vf
        );
    }
    Ok(())
}
