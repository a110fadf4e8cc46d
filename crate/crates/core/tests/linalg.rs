use nalgebra::{DMatrix, DVector};
use l4dec_core::linalg::*;

#[test]
fn tangent_basis_is_orthonormal_and_orthogonal_to_q() {
    for q in [
        DVector::from_vec(std::vec![1.0, 0.0, 0.0]),
        DVector::from_vec(std::vec![-0.6, 0.0, 0.8]),
        DVector::from_vec(std::vec![0.5, -0.5, 0.5, -0.5]),
    ] {
        let b = tangent_basis(&q);
        assert!(orthonormality_defect(&b) < 1e-14);
        assert!((b.transpose() * &q).amax() < 1e-14);
    }
}

#[test]
fn pseudo_inverse_of_rank_one() {
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
    let pinv = pseudo_inverse(&m, 1e-12);
    let back = &m * &pinv * &m;
    assert!((back - m).amax() < 1e-12);
}

#[test]
fn orthonormalize_removes_prior_span() {
    let e1 = DVector::from_vec(std::vec![1.0, 0.0, 0.0]);
    let v = DVector::from_vec(std::vec![3.0, 4.0, 0.0]);
    let w = orthonormalize_against(&[e1.clone()], &v).unwrap();
    assert!(w.dot(&e1).abs() < 1e-15);
    assert!((w[1] - 1.0).abs() < 1e-15);
    assert!(orthonormalize_against(&[e1.clone()], &(e1 * 2.0)).is_none());
}
