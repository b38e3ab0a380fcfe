use martblocks::atoms::{decompose_delta_indicator, pairing, validate_block, BlockRule};
use martblocks::gen::{
    gen_filtration, gen_hermitian, gen_level_projection, gen_measurable_set, gen_nc_filtration,
    gen_op, gen_rv, gen_set,
};
use martblocks::medians::{build_block_indicator, indicator_slice_bound, MedianSequence};
use martblocks::nc::algebra::{c, max_entry};
use martblocks::nc::{
    col_big_bmo_norm, col_big_h1_norm, col_bmo_norm, col_h1_norm, nc_diag_norm, schatten_norm, tau,
    NCFiltration, Op,
};
use martblocks::norms::{
    big_bmo_norm, big_h1_norm, bmo_equiv_gap, bmo_norm, diag_norm, h1_norm, lambda_pq_norm,
    lambda_pq_norm_pairs,
};
use martblocks::prob::{cond_exp, Filtration, Rv, WeightedSpace};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn filtration(r: &mut ChaCha8Rng, max_points: usize) -> Filtration {
    let n = r.random_range(1..=max_points);
    let d = r.random_range(1..=6);
    gen_filtration(r, n, d).unwrap()
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

type NormFn = fn(&Rv, &Filtration) -> martblocks::Result<f64>;

fn norms() -> [(&'static str, NormFn); 5] {
    [
        ("h1", h1_norm),
        ("H1", big_h1_norm),
        ("bmo", |f, filt| bmo_norm(f, filt, 2.0)),
        ("BMO", big_bmo_norm),
        ("diag", diag_norm),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conditional_expectation_axioms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let filt = filtration(&mut r, 64);
        let f = gen_rv(&mut r, &filt);
        for k in 1..=filt.depth() {
            let ek = cond_exp(&f, &filt, k).unwrap();
            prop_assert!(filt.is_measurable(ek.values(), k, 1e-12));
            prop_assert!((ek.integral() - f.integral()).abs() <= 1e-12 * f.norm(1.0).max(1.0));
            for j in 1..=filt.depth() {
                let ejk = cond_exp(&ek, &filt, j).unwrap();
                let direct = cond_exp(&f, &filt, j.min(k)).unwrap();
                prop_assert!(sup_dist(ejk.values(), direct.values()) <= 1e-12 * f.norm(f64::INFINITY).max(1.0));
            }
        }
    }

    #[test]
    fn norms_are_homogeneous_and_subadditive(seed in any::<u64>(), scale in -4.0f64..4.0) {
        let mut r = rng(seed);
        let filt = filtration(&mut r, 32);
        let f = gen_rv(&mut r, &filt);
        let g = gen_rv(&mut r, &filt);
        for (name, norm) in norms() {
            let (nf, ng) = (norm(&f, &filt).unwrap(), norm(&g, &filt).unwrap());
            let ns = norm(&f.scale(scale), &filt).unwrap();
            let nsum = norm(&(&f + &g), &filt).unwrap();
            prop_assert!((ns - scale.abs() * nf).abs() <= 1e-9 * nf.max(1.0), "{name} homogeneity");
            prop_assert!(nsum <= nf + ng + 1e-9 * (nf + ng).max(1.0), "{name} triangle");
        }
    }

    #[test]
    fn bmo_gap_is_bounded(seed in any::<u64>()) {
        let mut r = rng(seed);
        let filt = filtration(&mut r, 64);
        let f = gen_rv(&mut r, &filt);
        let (lhs, rhs) = bmo_equiv_gap(&f, &filt).unwrap();
        prop_assert!(lhs <= rhs + 1e-12 * rhs.max(1.0));
        prop_assert!(rhs <= 3.0 * lhs + 1e-12 * lhs.max(1.0));
    }

    #[test]
    fn lipschitz_class_needs_only_single_blocks(seed in any::<u64>(), p0 in 0.1f64..0.95, q in 1.1f64..6.0) {
        let mut r = rng(seed);
        let filt = filtration(&mut r, 24);
        let f = gen_rv(&mut r, &filt);
        let single = lambda_pq_norm(&f, &filt, p0, q).unwrap();
        let pairs = lambda_pq_norm_pairs(&f, &filt, p0, q).unwrap();
        prop_assert!((single - pairs).abs() <= 1e-12 * single.max(1.0));
    }

    #[test]
    fn square_function_below_diagonal(seed in any::<u64>()) {
        let mut r = rng(seed);
        let filt = filtration(&mut r, 64);
        let f = gen_rv(&mut r, &filt);
        let diag = diag_norm(&f, &filt).unwrap();
        prop_assert!(big_h1_norm(&f, &filt).unwrap() <= diag + 1e-12 * diag.max(1.0));
        prop_assert!(h1_norm(&f, &filt).unwrap() >= 0.0);
    }

    #[test]
    fn step2_blocks_pair_like_their_values(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..=48);
        let d = r.random_range(2..=6);
        let filt = gen_filtration(&mut r, n, d).unwrap();
        let a0 = gen_set(&mut r, n);
        let k = r.random_range(2..=d);
        let block = decompose_delta_indicator(&a0, &filt, k).unwrap();
        let cost = validate_block(&block, &filt, BlockRule::hardy(f64::INFINITY)).unwrap();
        prop_assert!(cost <= 6.0 * filt.mass(&a0) * (1.0 + 1e-12));
        let b = filt.rv(block.values(n)).unwrap();
        let phi = gen_rv(&mut r, &filt);
        prop_assert!((pairing(&b, &phi).unwrap() - pairing(&phi, &b).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn median_sequences_are_valid(seed in any::<u64>()) {
        let mut r = rng(seed);
        let filt = filtration(&mut r, 64);
        let f = gen_rv(&mut r, &filt);
        let ms = MedianSequence::new(&f, &filt).unwrap();
        prop_assert!(ms.is_valid(&f, &filt));
        let shifted = MedianSequence::new(&f.map(|v| v + 2.5), &filt).unwrap();
        for k in 1..=filt.depth() {
            let moved: Vec<f64> = ms.alpha(k).values().iter().map(|v| v + 2.5).collect();
            prop_assert!(sup_dist(shifted.alpha(k).values(), &moved) <= 1e-12);
        }
    }

    #[test]
    fn indicator_bound_settles_as_slices_refine(seed in any::<u64>(), coarse in 1usize..32, extra in 1usize..64) {
        let mut r = rng(seed);
        let n = r.random_range(2..=64);
        let d = r.random_range(2..=6);
        let filt = gen_filtration(&mut r, n, d).unwrap();
        let k = r.random_range(2..=d);
        let set = gen_measurable_set(&mut r, &filt, k);
        let fine = coarse + extra;
        let a = indicator_slice_bound(&set, &filt, k, coarse).unwrap();
        let b = indicator_slice_bound(&set, &filt, k, fine).unwrap();
        prop_assert!(b <= a + 1.0 / fine as f64 + 1e-12);
        let block = build_block_indicator(&set, &filt, k, fine).unwrap();
        // Damping on the χ_{A∩B_j} subatoms can add at most μ(A) to the slice bound.
        let mass = filt.mass(&set);
        prop_assert!(block.cost <= block.bound + mass + 1e-12);
        let hull = filt.mass(&filt.hull(&set, k - 1));
        prop_assert!(block.cost <= 3.0 * mass + hull / fine as f64 + 1e-12);
    }
}

fn nc_instance(seed: u64) -> (ChaCha8Rng, NCFiltration) {
    let mut r = rng(seed);
    let n = r.random_range(1..=6);
    let depth = r.random_range(2..=5);
    let filt = gen_nc_filtration(&mut r, n, depth).unwrap();
    (r, filt)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn matrix_conditional_expectation_axioms(seed in any::<u64>()) {
        let (mut r, filt) = nc_instance(seed);
        let n = filt.dim();
        let x = gen_op(&mut r, n);
        let one = Op::identity(n, n);
        for k in 1..=filt.depth() {
            let ex = filt.cond_exp(&x, k);
            prop_assert!(max_entry(&(filt.cond_exp(&ex, k) - &ex)) <= 1e-10);
            prop_assert!(max_entry(&(filt.cond_exp(&one, k) - &one)) <= 1e-10);
            prop_assert!((tau(&ex) - tau(&x)).norm() <= 1e-10);
            prop_assert!(max_entry(&(filt.cond_exp(&x.adjoint(), k) - ex.adjoint())) <= 1e-10);
            let q = gen_level_projection(&mut r, &filt, k);
            let side = filt.cond_exp(&gen_op(&mut r, n), k);
            let lhs = filt.cond_exp(&(&side * &x * &q), k);
            prop_assert!(max_entry(&(lhs - &side * &ex * &q)) <= 1e-9);
            for p in [1.0, 2.0, f64::INFINITY] {
                prop_assert!(schatten_norm(&ex, p) <= schatten_norm(&x, p) * (1.0 + 1e-10) + 1e-12);
            }
            for j in 1..k {
                let tower = filt.cond_exp(&ex, j);
                prop_assert!(max_entry(&(tower - filt.cond_exp(&x, j))) <= 1e-10);
            }
        }
    }

    #[test]
    fn column_norms_are_ordered(seed in any::<u64>()) {
        let (mut r, filt) = nc_instance(seed);
        let x = gen_hermitian(&mut r, filt.dim());
        let big = col_big_h1_norm(&x, &filt).unwrap();
        prop_assert!(big <= nc_diag_norm(&x, &filt) * (1.0 + 1e-9) + 1e-12);
        prop_assert!(col_bmo_norm(&x, &filt).unwrap() <= col_big_bmo_norm(&x, &filt).unwrap() * (1.0 + 1e-9) + 1e-12);
        let scaled = &x * c(-1.7);
        prop_assert!((col_big_h1_norm(&scaled, &filt).unwrap() - 1.7 * big).abs() <= 1e-9 * big.max(1.0));
    }

    #[test]
    fn diagonal_embedding_matches_commutative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=8);
        let d = r.random_range(1..=5);
        let gen = gen_filtration(&mut r, n, d).unwrap();
        let filt = Filtration::new(WeightedSpace::uniform(n).unwrap(), gen.levels().to_vec()).unwrap();
        let nc = NCFiltration::from_commutative(&filt).unwrap();
        let f = gen_rv(&mut r, &filt);
        let x = Op::from_diagonal(&nalgebra::DVector::from_iterator(n, f.values().iter().map(|&v| c(v))));
        let pairs = [
            (big_h1_norm(&f, &filt).unwrap(), col_big_h1_norm(&x, &nc).unwrap()),
            (h1_norm(&f, &filt).unwrap(), col_h1_norm(&x, &nc).unwrap()),
            (big_bmo_norm(&f, &filt).unwrap(), col_big_bmo_norm(&x, &nc).unwrap()),
            (bmo_norm(&f, &filt, 2.0).unwrap(), col_bmo_norm(&x, &nc).unwrap()),
            (diag_norm(&f, &filt).unwrap(), nc_diag_norm(&x, &nc)),
        ];
        for (a, b) in pairs {
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
        }
        for k in 1..=filt.depth() {
            let ek = filt.average(f.values(), k);
            let ex = nc.cond_exp(&x, k);
            for i in 0..n {
                prop_assert!((ex[(i, i)].re - ek[i]).abs() <= 1e-10);
            }
        }
    }
}
