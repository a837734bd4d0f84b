//! Linear algebra and protocol checks against nalgebra.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use vfedtrans::dataset::SampleId;
use vfedtrans::frl::{
    fedsvd_keygen, fedsvd_run, vfedpca_aggregate, vfedpca_run, FrlConfig, FrlInput, FrlMethod, PartyBlock, Transcript,
};
use vfedtrans::linalg::{householder_qr, power_iteration, random_orthogonal, svd, Matrix};
use vfedtrans::seed::rng;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
}

fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut g = rng(seed);
    Matrix::from_fn(rows, cols, |_, _| g.sample(StandardNormal))
}

fn input(blocks: &[Matrix]) -> FrlInput {
    let n = blocks[0].rows();
    FrlInput::new(
        (0..n).map(SampleId::from).collect(),
        PartyBlock {
            party_id: "t".into(),
            shared: blocks[0].clone(),
        },
        blocks[1..]
            .iter()
            .enumerate()
            .map(|(k, b)| PartyBlock {
                party_id: format!("d{k}"),
                shared: b.clone(),
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn singular_values_match_nalgebra() {
    for (seed, (r, c)) in [(40, 7), (7, 40), (25, 25), (1, 9)].into_iter().enumerate() {
        let m = gaussian(r, c, seed as u64);
        let ours = svd(&m, r.min(c)).unwrap();
        let mut theirs: Vec<f64> = to_na(&m).singular_values().iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.sigma.iter().zip(&theirs) {
            assert!((a - b).abs() <= 1e-12 * theirs[0], "{a} vs {b}");
        }
    }
}

#[test]
fn power_iteration_matches_symmetric_eigen() {
    let m = gaussian(60, 8, 9);
    let a = m.t_matmul(&m).unwrap();
    let est = power_iteration(&a, 500).unwrap();
    let eig = to_na(&a).symmetric_eigen();
    let top = eig.eigenvalues.max();
    assert!((est.value - top).abs() <= 1e-8 * top);
}

#[test]
fn fedsvd_singular_values_equal_unmasked_concatenation() {
    let blocks = [gaussian(120, 5, 10), gaussian(120, 9, 11), gaussian(120, 4, 12)];
    let out = fedsvd_run(&input(&blocks), &FrlConfig::default(), &mut rng(5), &mut Transcript::new()).unwrap();
    let joined = Matrix::hstack(&[&blocks[0], &blocks[1], &blocks[2]]).unwrap();
    let mut sigma: Vec<f64> = to_na(&joined).singular_values().iter().copied().collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    for (a, b) in out.server_singular_values.iter().zip(&sigma) {
        assert!((a - b).abs() <= 1e-10 * sigma[0]);
    }
    assert_eq!(out.representation.matrix.shape(), (120, 5));
}

#[test]
fn fedsvd_representation_is_mask_independent_up_to_sign() {
    let blocks = [gaussian(80, 4, 20), gaussian(80, 6, 21)];
    let a = fedsvd_run(&input(&blocks), &FrlConfig::default(), &mut rng(1), &mut Transcript::new()).unwrap();
    let b = fedsvd_run(&input(&blocks), &FrlConfig::default(), &mut rng(2), &mut Transcript::new()).unwrap();
    let (ua, ub) = (to_na(&a.representation.matrix), to_na(&b.representation.matrix));
    for c in 0..4 {
        let dot = ua.column(c).dot(&ub.column(c));
        assert!((dot.abs() - 1.0).abs() < 1e-8, "column {c}: {dot}");
    }
}

#[test]
fn vfedpca_two_parties_produce_task_shaped_output() {
    let blocks = [gaussian(50, 3, 30), gaussian(50, 6, 31)];
    let cfg = FrlConfig {
        method: FrlMethod::Vfedpca,
        ..FrlConfig::default()
    };
    let mut t = Transcript::new();
    let out = vfedpca_run(&input(&blocks), &cfg, &mut t).unwrap();
    assert_eq!(out.representation.matrix.shape(), (50, 3));
    assert_eq!(out.direction.len(), 9);
    assert!((out.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    // two uploads and two broadcasts per period
    assert_eq!(t.len(), 4 * cfg.period_num);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn svd_reconstructs(rows in 1usize..30, cols in 1usize..30, seed in any::<u64>()) {
        let m = gaussian(rows, cols, seed);
        let s = svd(&m, rows.min(cols)).unwrap();
        let err = s.reconstruct().max_abs_diff(&m).unwrap();
        prop_assert!(err <= 1e-10 * m.max_abs().max(1.0));
        prop_assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn qr_factors_are_orthogonal_and_triangular(rows in 1usize..25, extra in 0usize..10, seed in any::<u64>()) {
        let m = gaussian(rows + extra, rows, seed);
        let (q, r) = householder_qr(&m);
        prop_assert!(q.matmul(&r).unwrap().max_abs_diff(&m).unwrap() < 1e-10);
        for i in 0..r.rows() {
            for j in 0..i.min(r.cols()) {
                prop_assert!(r[(i, j)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn masks_are_orthogonal(n in 1usize..260, block in 1usize..120, seed in any::<u64>()) {
        let q = random_orthogonal(n, block, &mut rng(seed)).unwrap();
        prop_assert!(q.t_matmul(&q).unwrap().max_abs_diff(&Matrix::identity(n)).unwrap() < 1e-10);
    }

    #[test]
    fn keygen_splits_b_into_orthogonal_rows(widths in proptest::collection::vec(1usize..12, 1..5), seed in any::<u64>()) {
        let keys = fedsvd_keygen(10, &widths, 7, &mut rng(seed)).unwrap();
        let b = keys.b();
        let total: usize = widths.iter().sum();
        prop_assert!(b.matmul(&b.transpose()).unwrap().max_abs_diff(&Matrix::identity(total)).unwrap() < 1e-10);
        for (part, w) in keys.b_parts.iter().zip(&widths) {
            prop_assert_eq!(part.shape(), (*w, total));
        }
    }

    #[test]
    fn aggregation_weights_sum_to_one(alphas in proptest::collection::vec(1e-6f64..1e6, 1..40)) {
        let pairs: Vec<(Vec<f64>, f64)> = alphas.iter().map(|&a| (vec![1.0, 0.0], a)).collect();
        let agg = vfedpca_aggregate(&pairs).unwrap();
        let sum: f64 = agg.weights.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-15 * alphas.len() as f64);
        prop_assert!(agg.weights.iter().all(|w| *w >= 0.0));
    }
}
