//! Small dense linear-algebra helpers shared by the numerical modules.
//!
//! Everything here is a thin layer over nalgebra; the point is to keep the
//! conventions (descending singular values, thin factors, tangent-space
//! bases) in one place.

use nalgebra::{DMatrix, DVector};

/// Thin SVD `M = U diag(s) Vᵀ` with singular values in descending order.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl ThinSvd {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let svd = m.clone().svd(true, true);
        ThinSvd {
            u: svd.u.expect("left singular vectors requested"),
            singular_values: svd.singular_values,
            v_t: svd.v_t.expect("right singular vectors requested"),
        }
    }

    /// Keeps the leading `k` singular triplets.
    pub fn truncate(self, k: usize) -> Self {
        ThinSvd {
            u: self.u.columns(0, k).into_owned(),
            singular_values: self.singular_values.rows(0, k).into_owned(),
            v_t: self.v_t.rows(0, k).into_owned(),
        }
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    m.clone().svd(false, false).singular_values
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).max()
}

/// `v - q (qᵀ v)`.
pub fn project_tangent(q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    v - q * q.dot(v)
}

/// Orthonormal basis (p × (p−1)) of the orthogonal complement of the unit
/// vector `q`, taken from the columns of a Householder reflector.
pub fn tangent_basis(q: &DVector<f64>) -> DMatrix<f64> {
    let p = q.len();
    let k = q.iamax();
    let mut w = q.clone();
    w[k] += if q[k] >= 0.0 { 1.0 } else { -1.0 };
    let ww = w.dot(&w);
    let mut basis = DMatrix::zeros(p, p.saturating_sub(1));
    let mut col = 0;
    for j in 0..p {
        if j == k {
            continue;
        }
        // Column j of I − 2wwᵀ/(wᵀw).
        let scale = 2.0 * w[j] / ww;
        for i in 0..p {
            let delta = if i == j { 1.0 } else { 0.0 };
            basis[(i, col)] = delta - scale * w[i];
        }
        col += 1;
    }
    basis
}

/// Modified Gram–Schmidt step: removes the span of `basis` (orthonormal
/// columns) from `v` twice and normalizes. Returns `None` when nothing is
/// left.
pub fn orthonormalize_against(basis: &[DVector<f64>], v: &DVector<f64>) -> Option<DVector<f64>> {
    let mut w = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&w);
            w.axpy(-c, b, 1.0);
        }
    }
    let norm = w.norm();
    if norm <= 1e-12 * v.norm().max(f64::MIN_POSITIVE) {
        None
    } else {
        Some(w / norm)
    }
}

/// `‖MᵀM − I‖_F`.
pub fn orthonormality_defect(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    (gram - DMatrix::identity(m.ncols(), m.ncols())).norm()
}

/// Moore–Penrose pseudo-inverse through the thin SVD, dropping singular
/// values below `rel_tol · σ₁`.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = ThinSvd::new(m);
    let cutoff = rel_tol * svd.singular_values.max();
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let v = svd.v_t.row(k).transpose();
            let u = svd.u.column(k);
            out += (v * u.transpose()) / s;
        }
    }
    out
}
