use l4dec_core::Error;
use nalgebra::{DMatrix, DVector};
use l4dec_core::model::SphereVector;
use l4dec_core::objective::*;
use l4dec_core::linalg::{project_tangent, tangent_basis};
use l4dec_core::model::{
    generate_x, seeded_rng, synthesize, MixingKind, MixingMatrix, ProblemDims, SparsityModel,
};

fn unit(v: &[f64]) -> SphereVector {
    SphereVector::from_slice(v).unwrap()
}

#[test]
fn population_at_basis_vector() {
    let a = DMatrix::identity(2, 2);
    for theta in [0.0, 0.1, 0.5, 1.0] {
        let kind = ObjectiveKind::PopulationOrth { theta };
        let v = eval_value(kind, &a, &unit(&[1.0, 0.0])).unwrap();
        assert!((v + 0.25).abs() < 1e-15);
    }
}

#[test]
fn population_at_diagonal_with_theta_zero() {
    let a = DMatrix::identity(2, 2);
    let v = eval_value(ObjectiveKind::PopulationOrth { theta: 0.0 }, &a, &unit(&[1.0, 1.0])).unwrap();
    assert!((v + 0.125).abs() < 1e-15);
}

#[test]
fn rejects_non_unit_points() {
    let a = DMatrix::identity(2, 2);
    let q = SphereVector::from_unit_unchecked(DVector::from_vec(vec![1.0, 1.0]));
    assert!(matches!(
        eval_value(ObjectiveKind::RawL4, &a, &q),
        Err(Error::NotUnitNorm(_))
    ));
}

#[test]
fn population_gradient_vanishes_at_columns_and_null_space() {
    let a = MixingMatrix::generate(6, 3, MixingKind::SemiOrthogonal, 4).unwrap();
    let obj = Objective::new(ObjectiveKind::PopulationOrth { theta: 0.2 }, a.matrix().clone()).unwrap();
    let q = SphereVector::normalize(a.column(0)).unwrap();
    assert!(obj.grad(&q).amax() < 1e-12);
    let u = a.matrix();
    let mut v = DVector::from_fn(6, |i, _| (i as f64 + 1.0).sin());
    v -= u * u.tr_mul(&v);
    let q = SphereVector::normalize(v).unwrap();
    assert!(obj.grad(&q).amax() < 1e-12);
}

#[test]
fn curvature_at_columns_and_radial_direction() {
    let theta = 0.3;
    let a = MixingMatrix::generate(5, 5, MixingKind::SemiOrthogonal, 8).unwrap();
    let obj = Objective::new(ObjectiveKind::PopulationOrth { theta }, a.matrix().clone()).unwrap();
    let q = SphereVector::normalize(a.column(0)).unwrap();
    let h = obj.hess(&q);
    let v = a.column(1);
    assert!((v.dot(&(&h * &v)) - (1.0 - theta)).abs() < 1e-12);
    assert!((h * q.as_vector()).amax() < 1e-12);
}

#[test]
fn zeta_examples() {
    let a = DMatrix::<f64>::identity(3, 3);
    let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    assert_eq!(zeta(&a, &e1).unwrap(), e1);
    let a2 = a.columns(1, 2).into_owned();
    assert_eq!(zeta(&a2, &e1).unwrap(), DVector::zeros(2));
    let s = MixingMatrix::generate(12, 4, MixingKind::SemiOrthogonal, 1).unwrap();
    let mut rng = seeded_rng(2, 0);
    for _ in 0..10_000 {
        let q = SphereVector::random(12, &mut rng);
        assert!(zeta(s.matrix(), q.as_vector()).unwrap().norm() <= 1.0 + 1e-12);
    }
}

fn instances() -> Vec<Objective> {
    let dims = ProblemDims::new(12, 4, 300).unwrap();
    let a = MixingMatrix::generate(12, 4, MixingKind::SemiOrthogonal, 3).unwrap();
    let x = generate_x(dims, SparsityModel::with_theta(0.3).unwrap(), 3).unwrap();
    let y = synthesize(&a, &x).unwrap();
    vec![
        Objective::new(ObjectiveKind::PopulationOrth { theta: 0.3 }, a.matrix().clone()).unwrap(),
        Objective::new(ObjectiveKind::SampleOrth { theta: 0.3, sigma: 1.0 }, y.clone()).unwrap(),
        Objective::new(ObjectiveKind::SampleGeneral { theta: 0.3 }, y.clone() / 20.0).unwrap(),
        Objective::new(ObjectiveKind::RawL4, y).unwrap(),
    ]
}

fn retract(q: &DVector<f64>, d: &DVector<f64>, t: f64) -> DVector<f64> {
    let v = q + d * t;
    let n = v.norm();
    v / n
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = seeded_rng(17, 0);
    for obj in instances() {
        let p = obj.dim();
        for _ in 0..5 {
            let q = SphereVector::random(p, &mut rng);
            let g = obj.grad(&q);
            let h = obj.hess(&q);
            assert!(g.dot(q.as_vector()).abs() <= 1e-10 * g.norm().max(1e-300));
            for _ in 0..10 {
                let d = project_tangent(q.as_vector(), SphereVector::random(p, &mut rng).as_vector());
                let d = &d / d.norm();
                let f = |t: f64| obj.value_unchecked(&retract(q.as_vector(), &d, t));
                let hs = 1e-5;
                let fd = (f(hs) - f(-hs)) / (2.0 * hs);
                let an = g.dot(&d);
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(g.norm()), "{fd} vs {an}");
                let hh = 1e-4;
                let sd = (f(hh) - 2.0 * f(0.0) + f(-hh)) / (hh * hh);
                let an2 = d.dot(&(&h * &d));
                assert!((sd - an2).abs() <= 1e-4 * an2.abs().max(h.norm()), "{sd} vs {an2}");
                let hv = obj.hess_vec(&q, &d);
                assert!((hv - &h * &d).amax() <= 1e-12 * h.amax().max(1.0));
            }
        }
    }
}

#[test]
fn value_delta_matches_direct_difference() {
    let mut rng = seeded_rng(23, 0);
    for obj in instances() {
        let q = SphereVector::random(obj.dim(), &mut rng);
        let d = SphereVector::random(obj.dim(), &mut rng).into_vector() * 1e-3;
        let moved = q.as_vector() + &d;
        let diff = obj.value_difference(&q, &d);
        let direct = obj.value_unchecked(&moved) - obj.value(&q);
        assert!((diff - direct).abs() <= 1e-9 * direct.abs().max(1e-12));
    }
}

#[test]
fn hessian_is_symmetric_and_annihilates_base() {
    let mut rng = seeded_rng(5, 1);
    for obj in instances() {
        let q = SphereVector::random(obj.dim(), &mut rng);
        let h = obj.hess(&q);
        assert!((&h - h.transpose()).amax() <= 1e-12 * h.amax());
        assert!((&h * q.as_vector()).amax() <= 1e-10 * h.amax());
        let b = tangent_basis(q.as_vector());
        assert!(b.ncols() == obj.dim() - 1);
    }
}

#[test]
fn rescaling_preserves_argmin_over_candidates() {
    let objs = instances();
    let (raw, general) = (&objs[3], &objs[2]);
    let mut rng = seeded_rng(9, 0);
    let cands: Vec<SphereVector> = (0..50).map(|_| SphereVector::random(12, &mut rng)).collect();
    let argmin = |o: &Objective| {
        (0..cands.len())
            .min_by(|&i, &j| o.value(&cands[i]).total_cmp(&o.value(&cands[j])))
            .unwrap()
    };
    assert_eq!(argmin(raw), argmin(general));
}

#[test]
fn maximizers_exhaustive_on_orthonormal_basis() {
    for r in 1..=6usize {
        let a = MixingMatrix::generate(r, r, MixingKind::SemiOrthogonal, r as u64).unwrap();
        let obj = Objective::new(ObjectiveKind::RawL4, a.matrix().clone()).unwrap();
        for mask in 1u32..(1 << r) {
            let s = mask.count_ones() as usize;
            for signs in 0u32..(1 << r) {
                if signs & !mask != 0 {
                    continue;
                }
                let mut q = DVector::zeros(r);
                for j in (0..r).filter(|j| mask >> j & 1 == 1) {
                    let sign = if signs >> j & 1 == 1 { -1.0 } else { 1.0 };
                    q += a.column(j) * sign;
                }
                let q = SphereVector::normalize(q).unwrap();
                let v = -obj.value(&q);
                assert!((v - 1.0 / s as f64).abs() <= 1e-12, "r={r} mask={mask:b} v={v}");
                assert_eq!((v - 1.0).abs() <= 1e-12, s == 1);
            }
        }
    }
}
