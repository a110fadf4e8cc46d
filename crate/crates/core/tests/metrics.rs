use libm::sqrt;
use nalgebra::{DMatrix, DVector};
use l4dec_core::model::SignedPermutation;
use l4dec_core::metrics::*;
use l4dec_core::model::{seeded_rng, MixingKind, MixingMatrix};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn orthonormal(p: usize, r: usize, seed: u64) -> DMatrix<f64> {
    MixingMatrix::generate(p, r, MixingKind::SemiOrthogonal, seed).unwrap().into_matrix()
}

#[test]
fn err_single_examples() {
    let a = orthonormal(6, 3, 1);
    assert!(err_single(&a.column(0).into_owned(), &a).unwrap() < 1e-15);
    let mut perp = DVector::from_fn(6, |i, _| (i as f64).cos());
    perp -= &a * a.tr_mul(&perp);
    let perp = perp.normalize();
    assert!((err_single(&perp, &a).unwrap() - 1.0).abs() < 1e-12);
    let mix = (a.column(0) + a.column(1)) / sqrt(2.0);
    let e = err_single(&mix, &a).unwrap();
    assert!((e - (1.0 - 1.0 / sqrt(2.0))).abs() < 1e-12);
}

#[test]
fn matching_identity_and_reversal() {
    let a = orthonormal(8, 4, 2);
    let (p, e) = match_signed_permutation(&a, &a).unwrap();
    assert_eq!(p, SignedPermutation::identity(4));
    assert!(e < 1e-15);
    let truth_p = SignedPermutation::new(vec![3, 2, 1, 0], vec![-1, 1, 1, 1]).unwrap();
    let est = truth_p.apply(&a).unwrap();
    let (p, e) = match_signed_permutation(&est, &a).unwrap();
    assert_eq!(p, truth_p);
    assert!(e < 1e-15);
}

fn all_signed_perms(r: usize) -> Vec<SignedPermutation> {
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for k in 0..r {
        let mut next = Vec::new();
        for p in &perms {
            for pos in 0..=k {
                let mut q = p.clone();
                q.insert(pos, k);
                next.push(q);
            }
        }
        perms = next;
    }
    let mut out = Vec::new();
    for p in perms {
        for mask in 0..(1u32 << r) {
            let signs = (0..r).map(|k| if mask >> k & 1 == 1 { -1 } else { 1 }).collect();
            out.push(SignedPermutation::new(p.clone(), signs).unwrap());
        }
    }
    out
}

pub(crate) fn brute_force(a_est: &DMatrix<f64>, a_true: &DMatrix<f64>) -> (SignedPermutation, f64) {
    let r = a_est.ncols();
    all_signed_perms(r)
        .into_iter()
        .map(|p| {
            let e = (a_est - p.apply(a_true).unwrap()).norm() / sqrt(r as f64);
            (p, e)
        })
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap()
}

#[test]
fn matching_equals_brute_force_r5() {
    let mut rng = seeded_rng(3, 0);
    for trial in 0..20 {
        let a = orthonormal(10, 5, trial);
        let noise = DMatrix::from_fn(10, 5, |_, _| 0.3 * rng.sample::<f64, _>(StandardNormal));
        let est = &a + noise;
        let (p, e) = match_signed_permutation(&est, &a).unwrap();
        let (pb, eb) = brute_force(&est, &a);
        assert!((e - eb).abs() <= 1e-12);
        assert_eq!(p, pb);
    }
}

#[test]
fn success_rate_counting() {
    let mk = |e: f64| RecoveryReport {
        per_column_err: vec![e],
        frobenius_err: 0.0,
        matching: SignedPermutation::identity(1),
        success: e <= RHO_E,
    };
    let zeros: Vec<_> = (0..4).map(|_| mk(0.0)).collect();
    assert_eq!(success_rate(&zeros, RHO_E, SuccessMode::SingleColumn).unwrap(), 1.0);
    let ones: Vec<_> = (0..4).map(|_| mk(1.0)).collect();
    assert_eq!(success_rate(&ones, RHO_E, SuccessMode::FullMatrix).unwrap(), 0.0);
    let half = vec![mk(0.005), mk(0.02), mk(0.005), mk(0.02)];
    assert_eq!(success_rate(&half, 0.01, SuccessMode::SingleColumn).unwrap(), 0.5);
    assert!(success_rate(&[], 0.01, SuccessMode::SingleColumn).is_err());
}

#[test]
fn report_on_exact_estimate() {
    let a = orthonormal(7, 3, 4);
    let rep = RecoveryReport::new(&a, &a, RHO_E).unwrap();
    assert!(rep.success);
    assert!(rep.per_column_err.iter().all(|&e| (0.0..=1e-14).contains(&e)));
    assert_eq!(rep.csv_row().split(',').count(), RecoveryReport::CSV_HEADER.split(',').count());
}

fn arb_signed_perm(r: usize) -> impl Strategy<Value = SignedPermutation> {
    (Just((0..r).collect::<Vec<_>>()).prop_shuffle(), proptest::collection::vec(any::<bool>(), r))
        .prop_map(|(perm, s)| {
            SignedPermutation::new(perm, s.into_iter().map(|b| if b { -1 } else { 1 }).collect()).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn err_single_is_signed_permutation_invariant(seed in 0u64..1000, p in arb_signed_perm(4)) {
        let a = orthonormal(9, 4, seed);
        let mut rng = seeded_rng(seed, 1);
        let q = l4dec_core::model::SphereVector::random(9, &mut rng).into_vector();
        let permuted = p.apply(&a).unwrap();
        prop_assert_eq!(err_single(&q, &a).unwrap(), err_single(&q, &permuted).unwrap());
    }

    #[test]
    fn frobenius_error_ignores_estimate_column_order(seed in 0u64..1000, p in arb_signed_perm(5)) {
        let a = orthonormal(8, 5, seed);
        let mut rng = seeded_rng(seed, 2);
        let est = &a + DMatrix::from_fn(8, 5, |_, _| 0.2 * rng.sample::<f64, _>(StandardNormal));
        let (_, e1) = match_signed_permutation(&est, &a).unwrap();
        let (_, e2) = match_signed_permutation(&p.apply(&est).unwrap(), &a).unwrap();
        prop_assert!((e1 - e2).abs() <= 1e-12);
    }

    #[test]
    fn hungarian_is_optimal_on_small_costs(vals in proptest::collection::vec(0.0f64..10.0, 16)) {
        let cost = DMatrix::from_vec(4, 4, vals);
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
        let best = all_signed_perms(4)
            .iter()
            .filter(|p| p.signs().iter().all(|&s| s == 1))
            .map(|p| p.perm().iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        prop_assert!((total - best).abs() <= 1e-12);
    }
}
