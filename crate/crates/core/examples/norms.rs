//! Hardy and BMO norms of a random martingale on a random filtration.

use martblocks::gen::{gen_filtration, gen_rv};
use martblocks::norms::{
    big_bmo_norm, big_h1_norm, bmo_equiv_gap, bmo_norm, diag_norm, h1_norm, lambda_pq_norm,
};
use martblocks::prob::{omega4, MartingaleView};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> martblocks::Result<()> {
    let filt = omega4();
    let f = filt.rv(vec![1.0, -1.0, 0.0, 0.0])?;
    println!("four-point fixture f = {:?}", f.values());
    let (h, hh) = (big_h1_norm(&f, &filt)?, h1_norm(&f, &filt)?);
    println!(
        "  H1 {h}  h1 {hh}  BMO {}  bmo {}",
        big_bmo_norm(&f, &filt)?,
        bmo_norm(&f, &filt, 2.0)?
    );

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let filt = gen_filtration(&mut rng, 32, 5)?;
    let f = gen_rv(&mut rng, &filt);
    let view = MartingaleView::new(f.clone(), &filt)?;
    println!(
        "random instance: {} points, {} levels",
        filt.len(),
        filt.depth()
    );
    for (k, d) in view.diffs().iter().enumerate() {
        println!("  ‖df_{}‖_∞ = {:.4}", k + 1, d.norm(f64::INFINITY));
    }
    println!(
        "  H1 {:.4}  h1 {:.4}  diag {:.4}",
        big_h1_norm(&f, &filt)?,
        h1_norm(&f, &filt)?,
        diag_norm(&f, &filt)?
    );
    let (lhs, rhs) = bmo_equiv_gap(&f, &filt)?;
    println!("  BMO {lhs:.4} ≤ bmo + sup‖df‖_∞ = {rhs:.4}");
    println!("  Λ(1/2, 2) = {:.4}", lambda_pq_norm(&f, &filt, 0.5, 2.0)?);
    Ok(())
}
