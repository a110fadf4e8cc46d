use l4dec_core::Error;
use libm::sqrt;
use nalgebra::{DMatrix, DVector};
use l4dec_core::model::{seeded_rng, SphereVector};
use l4dec_core::objective::{linf_sq, Objective, ObjectiveKind};
use l4dec_core::solver::min_tangent_eigenpair;
use l4dec_core::landscape::*;
use l4dec_core::model::{MixingKind, MixingMatrix};
use proptest::prelude::*;

fn orthonormal(p: usize, r: usize, seed: u64) -> DMatrix<f64> {
    MixingMatrix::generate(p, r, MixingKind::SemiOrthogonal, seed).unwrap().into_matrix()
}

#[test]
fn region_examples() {
    let a = orthonormal(6, 3, 1);
    let q = SphereVector::normalize(a.column(0).into_owned()).unwrap();
    assert_eq!(classify_region(&a, &q, 1.0 / 6.0, 0.25).unwrap().label, Region::R1);
    let mut v = DVector::from_fn(6, |i, _| (i as f64 + 0.5).sin());
    v -= &a * a.tr_mul(&v);
    let q = SphereVector::normalize(v).unwrap();
    assert_eq!(classify_region(&a, &q, 0.1, 0.25).unwrap().label, Region::R0);
    let q = balanced_point(&a, &[0, 1], &[1.0, 1.0]).unwrap();
    let lab = classify_region(&a, &q, 0.1, 0.25).unwrap();
    assert_eq!(lab.label, Region::R1);
    assert!((lab.zeta_inf_sq - 0.5).abs() < 1e-12);
    assert!(classify_region(&a, &q, 0.3, 0.2).is_err());
}

#[test]
fn theta_condition_examples() {
    assert!(theta_condition_check(1.0 / 6.0));
    assert!(!theta_condition_check(0.3));
    assert!(theta_condition_check(1e-12));
}

#[test]
fn flat_at_zero_zeta() {
    let a = orthonormal(5, 2, 2);
    let mut v = DVector::from_fn(5, |i, _| (i as f64).cos());
    v -= &a * a.tr_mul(&v);
    let q = SphereVector::normalize(v).unwrap();
    let obj = Objective::new(ObjectiveKind::PopulationOrth { theta: 0.1 }, a.clone()).unwrap();
    assert!(obj.hess(&q).amax() < 1e-14);
    let (_, value) = negative_curvature_witness(&a, &q, 0.1).unwrap();
    assert!(value.abs() < 1e-14);
}

#[test]
fn taxonomy_single_and_multi_spike() {
    let theta = 0.1;
    let a = orthonormal(8, 8, 3);
    let q = balanced_point(&a, &[0], &[1.0]).unwrap();
    let rep = critical_point_taxonomy(&a, &q, theta, 1e-10).unwrap();
    assert_eq!(rep.case, CriticalCase::SingleSpike);
    assert!((rep.alpha - 1.0).abs() < 1e-12);
    for k in 2..=4usize {
        let idx: Vec<usize> = (0..k).collect();
        let signs: Vec<f64> = (0..k).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let q = balanced_point(&a, &idx, &signs).unwrap();
        let rep = critical_point_taxonomy(&a, &q, theta, 1e-10).unwrap();
        assert_eq!(rep.case, CriticalCase::MultiSpike);
        assert_eq!(rep.spikes.len(), k);
        assert!((rep.alpha - 1.0 / k as f64).abs() < 1e-8);
        let (_, w) = rep.curvature_witness.unwrap();
        assert!(w <= -2.0 * (1.0 - theta) / k as f64 + 1e-6, "k={k}: {w}");
    }
}

#[test]
fn taxonomy_rejects_non_critical_points() {
    let a = orthonormal(4, 4, 4);
    let q = SphereVector::from_slice(&[0.9, 0.3, 0.2, 0.1]).unwrap();
    let q = SphereVector::normalize(&a * q.as_vector()).unwrap();
    assert!(matches!(
        critical_point_taxonomy(&a, &q, 0.1, 1e-8),
        Err(Error::NotCritical { .. })
    ));
}

#[test]
fn min_tangent_eigenvalue_at_columns() {
    for (theta, p, r) in [(0.1, 10, 10), (0.3, 12, 5), (0.0, 6, 6)] {
        let a = orthonormal(p, r, 5);
        let obj = Objective::new(ObjectiveKind::PopulationOrth { theta }, a.clone()).unwrap();
        for i in 0..r {
            let q = balanced_point(&a, &[i], &[1.0]).unwrap();
            let (l, _) = min_tangent_eigenpair(obj.hess_operator(&q), &q);
            assert!(l >= (1.0 - theta) - 1e-8, "θ={theta}: {l}");
        }
    }
}

#[test]
fn population_witness_in_r2_beats_printed_constant() {
    let theta = 1.0 / 6.0;
    let big = 1.0 / (3.0 * sqrt(2.0));
    let bound = (11.0 - 5.0 * sqrt(2.0)) / 9.0;
    let a = orthonormal(10, 10, 6);
    let mut rng = seeded_rng(6, 0);
    for _ in 0..1000 {
        let q = sample_band(&a, 0.0, big, &mut rng, 100_000).unwrap();
        let x = linf_sq(&a.tr_mul(q.as_vector()));
        let (_, value) = negative_curvature_witness(&a, &q, theta).unwrap();
        assert!(value < -bound * x, "x={x}, value={value}");
    }
}

#[test]
fn survey_counts_add_up() {
    let a = DMatrix::identity(3, 3);
    let s = survey(&a, 0.1, 1.0 / 6.0, 0.25, 50, 5, 1).unwrap();
    let c = s.region_counts;
    assert_eq!(c.r0 + c.r1 + c.r2, 50);
    assert_eq!(s.points.len(), 50);
    assert_eq!(s.taxonomy.single_spike, 5);
    assert!(!s.outside_theory);
    assert!(survey(&a, 0.5, 0.1, 0.65, 10, 0, 1).unwrap().outside_theory);
    assert!(survey(&a, 0.1, 0.1, 0.25, 0, 0, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn alpha_bracket_in_r1(seed in 0u64..10_000, theta in 0.01f64..0.15) {
        let a = orthonormal(12, 6, seed % 17);
        let big = 0.3;
        prop_assume!(big * big > theta / (4.0 * (1.0 - theta)));
        let mut rng = seeded_rng(seed, 3);
        let q = sample_band(&a, big, 1.0 + 1e-9, &mut rng, 100_000);
        prop_assume!(q.is_some());
        let zeta = a.tr_mul(q.unwrap().as_vector());
        let al = alpha(&zeta, theta);
        let (lo, hi) = alpha_bounds(&zeta, theta, big);
        prop_assert!(lo <= al && al <= hi + 1e-15);
    }

    #[test]
    fn witness_negative_in_r2(seed in 0u64..10_000) {
        let a = orthonormal(10, 10, seed % 13);
        let mut rng = seeded_rng(seed, 4);
        let q = sample_band(&a, 0.05, 0.25, &mut rng, 100_000).unwrap();
        let (_, value) = negative_curvature_witness(&a, &q, 0.1).unwrap();
        prop_assert!(value < 0.0);
    }
}

#[test]
fn alpha_at_three_spike_point() {
    let a = orthonormal(5, 5, 7);
    let q = balanced_point(&a, &[0, 1, 2], &[1.0, 1.0, 1.0]).unwrap();
    let zeta = a.tr_mul(q.as_vector());
    assert!((alpha(&zeta, 0.1) - 1.0 / 3.0).abs() < 1e-8);
}
