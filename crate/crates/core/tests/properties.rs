//! Property tests for the norm and approximation invariants, plus the
//! Monte-Carlo concentration smoke test for the Gaussian ensemble.

use bslp_core::block_model::{
    best_block_approx, mixed_norm, mixed_norm_pow, BlockPartition,
};
use bslp_core::sensing::{generate_matrix, EnsembleKind, MatrixEnsemble};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn arb_partitioned_vector() -> impl Strategy<Value = (Vec<usize>, Vec<f64>)> {
    prop::collection::vec(1usize..5, 1..8).prop_flat_map(|sizes| {
        let n: usize = sizes.iter().sum();
        (
            Just(sizes),
            prop::collection::vec(-100.0f64..100.0, n..=n),
        )
    })
}

proptest! {
    // mixed-norm monotonicity: q < p implies ||x||_{2,p} <= ||x||_{2,q}
    #[test]
    fn norm_ordering((sizes, x) in arb_partitioned_vector(),
                     q in 0.05f64..0.95, gap in 0.01f64..0.5) {
        let part = BlockPartition::new(sizes).unwrap();
        let p = (q + gap).min(1.0);
        let np = mixed_norm(&x, &part, p).unwrap();
        let nq = mixed_norm(&x, &part, q).unwrap();
        prop_assert!(np <= nq * (1.0 + 1e-10) + 1e-12, "p={p}, q={q}: {np} > {nq}");
    }

    // p = 1 reduces to the sum of block norms
    #[test]
    fn p1_consistency((sizes, x) in arb_partitioned_vector()) {
        let part = BlockPartition::new(sizes).unwrap();
        let direct: f64 = (0..part.num_blocks())
            .map(|i| {
                part.block(&x, i).iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .sum();
        let norm = mixed_norm(&x, &part, 1.0).unwrap();
        prop_assert!((norm - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    // ||x||_{2,2}^2 equals the plain squared Euclidean norm
    #[test]
    fn two_two_norm_is_euclidean((sizes, x) in arb_partitioned_vector()) {
        let part = BlockPartition::new(sizes).unwrap();
        let pow = mixed_norm_pow(&x, &part, 2.0).unwrap();
        let euclid: f64 = x.iter().map(|v| v * v).sum();
        prop_assert!((pow - euclid).abs() <= 1e-12 * euclid.max(1.0));
    }

    // best block approximation splits exactly and disjointly at any s
    #[test]
    fn approximation_identity((sizes, x) in arb_partitioned_vector(), sel in 0usize..8) {
        let part = BlockPartition::new(sizes).unwrap();
        let s = sel % (part.num_blocks() + 1);
        let split = best_block_approx(&x, &part, s).unwrap();
        prop_assert_eq!(split.support.len(), s);
        for ((&a, &b), &v) in split.principal.iter().zip(&split.residual).zip(&x) {
            prop_assert_eq!(a + b, v);
            prop_assert!(a == 0.0 || b == 0.0);
        }
    }
}

#[test]
fn two_two_identity_on_gaussian_vectors() {
    // the (2,2) identity at the stated scale: 1000 random vectors, 1e-12
    let part = BlockPartition::uniform(4, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2222);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..128).map(|_| StandardNormal.sample(&mut rng)).collect();
        let pow = mixed_norm_pow(&x, &part, 2.0).unwrap();
        let euclid: f64 = x.iter().map(|v| v * v).sum();
        assert!((pow - euclid).abs() <= 1e-12 * euclid);
    }
}

#[test]
fn gaussian_concentration_smoke() {
    // fraction of unit vectors with | ||Phi x||^2 - 1 | > 0.5 stays below 1%
    let ens = MatrixEnsemble::new(EnsembleKind::Gaussian, 256, 512, 77).unwrap();
    let phi = generate_matrix(&ens);
    let mut rng = ChaCha8Rng::seed_from_u64(4096);
    let draws = 2000;
    let mut outliers = 0;
    for _ in 0..draws {
        let mut x = DVector::from_fn(512, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        });
        x /= x.norm();
        let distortion = ((&phi * &x).norm_squared() - 1.0).abs();
        if distortion > 0.5 {
            outliers += 1;
        }
    }
    assert!(
        (outliers as f64) < 0.01 * draws as f64,
        "{outliers}/{draws} outliers"
    );
}
