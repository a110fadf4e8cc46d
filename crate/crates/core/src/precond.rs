//! Whitening of the data so that the effective mixing matrix is close to
//! semi-orthogonal, and the map back to the original scale.

use libm::sqrt;
use nalgebra::{DMatrix, DVector};

use crate::error::{dim_err, param_err, Error, Result};
use crate::linalg::ThinSvd;
use crate::model::MixingMatrix;

/// Residual above which an estimate is considered to leave the column
/// space of the preconditioner.
pub const OUTSIDE_TOL: f64 = 1e-6;

/// `D = ((YYᵀ)⁺)^{1/2}` restricted to the leading rank-r subspace,
/// stored in factored form `D = U Σ⁻¹ Uᵀ`.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    u: DMatrix<f64>,
    sigma: DVector<f64>,
    singular_values: DVector<f64>,
}

impl Preconditioner {
    pub fn rank_used(&self) -> usize {
        self.u.ncols()
    }

    /// All singular values of the input data, descending.
    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    /// Orthonormal basis `U` (p × r) of the retained column space.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// Dense `D`.
    pub fn matrix(&self) -> DMatrix<f64> {
        self.factored(|s| 1.0 / s)
    }

    /// Dense `D⁺ = U Σ Uᵀ`.
    pub fn inverse_matrix(&self) -> DMatrix<f64> {
        self.factored(|s| s)
    }

    fn factored(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.u.clone();
        for (mut col, &s) in scaled.column_iter_mut().zip(self.sigma.iter()) {
            col *= f(s);
        }
        scaled * self.u.transpose()
    }

    /// `D·M` without forming `D`.
    pub fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut coords = self.u.tr_mul(m);
        for (mut row, &s) in coords.row_iter_mut().zip(self.sigma.iter()) {
            row /= s;
        }
        &self.u * coords
    }

    /// Index `k` (1-based count of retained values) maximizing
    /// `σ_k / σ_{k+1}`, with that ratio. Diagnostic only.
    pub fn largest_gap(&self) -> Option<(usize, f64)> {
        largest_singular_gap(&self.singular_values)
    }
}

/// Preconditioned data `Ȳ = D·Y = U Vᵀ`.
#[derive(Debug, Clone)]
pub struct PreconditionedData {
    ybar: DMatrix<f64>,
    reduced: DMatrix<f64>,
    d: Preconditioner,
}

impl PreconditionedData {
    pub fn ybar(&self) -> &DMatrix<f64> {
        &self.ybar
    }

    /// Coordinates `Vᵀ` (r × n) of `Ȳ` in the basis `U`: `Ȳ = U·Vᵀ`.
    pub fn reduced(&self) -> &DMatrix<f64> {
        &self.reduced
    }

    pub fn preconditioner(&self) -> &Preconditioner {
        &self.d
    }
}

/// Thin SVD of `Y` truncated to rank `r`; `Ȳ = U Vᵀ`.
pub fn precondition(y: &DMatrix<f64>, r: usize) -> Result<PreconditionedData> {
    let (p, n) = y.shape();
    if p == 0 || n == 0 {
        return Err(Error::Empty("data matrix".into()));
    }
    if r == 0 || r > p.min(n) {
        return Err(dim_err!("rank r={r} must lie in 1..={} for a {p}×{n} matrix", p.min(n)));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(param_err!("data matrix contains non-finite entries"));
    }
    let svd = ThinSvd::new(y);
    let singular_values = svd.singular_values.clone();
    let s1 = singular_values[0];
    let threshold = 1e-10 * s1 * p.max(n) as f64;
    let sr = singular_values[r - 1];
    if !(sr > threshold) {
        return Err(Error::IllConditioned {
            index: r,
            value: sr,
            threshold,
        });
    }
    let svd = svd.truncate(r);
    let ybar = &svd.u * &svd.v_t;
    Ok(PreconditionedData {
        ybar,
        reduced: svd.v_t,
        d: Preconditioner {
            u: svd.u,
            sigma: svd.singular_values,
            singular_values,
        },
    })
}

/// Result of mapping a whitened estimate back to the data scale.
#[derive(Debug, Clone)]
pub struct Inverted {
    pub mixing: MixingMatrix,
    /// `‖(I − UUᵀ)Ā_est‖_F`.
    pub outside_residual: f64,
    /// Set when the residual exceeded [`OUTSIDE_TOL`] and the estimate was
    /// projected before inversion.
    pub projected: bool,
}

/// `D⁺·Ā_est / ‖D⁺·Ā_est‖_op`.
pub fn invert_precondition(abar_est: &DMatrix<f64>, d: &Preconditioner) -> Result<Inverted> {
    if abar_est.nrows() != d.u.nrows() {
        return Err(dim_err!(
            "estimate has {} rows, preconditioner acts on {}",
            abar_est.nrows(),
            d.u.nrows()
        ));
    }
    if abar_est.ncols() == 0 || abar_est.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("estimate is empty or zero".into()));
    }
    let coords = d.u.tr_mul(abar_est);
    let outside_residual = (abar_est - &d.u * &coords).norm();
    let mut scaled = coords;
    for (mut row, &s) in scaled.row_iter_mut().zip(d.sigma.iter()) {
        row *= s;
    }
    let mixing = MixingMatrix::normalized(&d.u * scaled)?;
    Ok(Inverted {
        mixing,
        outside_residual,
        projected: outside_residual > OUTSIDE_TOL,
    })
}

/// Reference rate `(1/θ)·√(r/n)` for the whitening perturbation.
pub fn prop1_delta_bound(theta: f64, r: usize, n: usize) -> f64 {
    sqrt(r as f64 / n as f64) / theta
}

/// `Δ̂ = Āᵀ Ȳ X̄ᵀ (X̄ X̄ᵀ)⁻¹ − I` with `X̄ = X / √(θnσ²)`: the least-squares
/// fit of `Ȳ ≈ Ā(I + Δ)X̄`. Used only for validation.
pub fn fit_delta(
    a: &MixingMatrix,
    ybar: &DMatrix<f64>,
    x: &DMatrix<f64>,
    theta: f64,
    sigma: f64,
) -> Result<DMatrix<f64>> {
    let r = a.ncols();
    if x.nrows() != r || x.ncols() != ybar.ncols() || ybar.nrows() != a.nrows() {
        return Err(dim_err!("inconsistent shapes for A, Ȳ, X"));
    }
    let n = x.ncols() as f64;
    let xbar = x / sqrt(theta * n * sigma * sigma);
    let abar = a.orthogonal_factor();
    let gram = &xbar * xbar.transpose();
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Degenerate("X̄X̄ᵀ is singular".into()))?;
    let cross = abar.tr_mul(ybar) * xbar.transpose();
    // cross · G⁻¹ = (G⁻¹ crossᵀ)ᵀ since G is symmetric.
    let fitted = chol.solve(&cross.transpose()).transpose();
    Ok(fitted - DMatrix::identity(r, r))
}

/// `(k, σ_k/σ_{k+1})` maximizing the ratio over positive trailing values.
pub fn largest_singular_gap(sv: &DVector<f64>) -> Option<(usize, f64)> {
    (0..sv.len().saturating_sub(1))
        .filter(|&k| sv[k + 1] > 0.0)
        .map(|k| (k + 1, sv[k] / sv[k + 1]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}
