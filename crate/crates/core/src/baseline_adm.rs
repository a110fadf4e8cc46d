//! Sparse-PCA baseline: rank-one alternating minimization of
//! `‖Y − u vᵀ‖_F² + λ‖v‖₁` over unit `u` and sparse `v`, with deflation.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, Error, Result};
use crate::model::{MixingMatrix, SphereVector, SPHERE_TOL};
use crate::pipeline::DeflationState;

/// How the ℓ1 weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lambda {
    Fixed(f64),
    /// `λ = factor · median(|Yᵀu₀|)`, recomputed for every column.
    MedianScaled(f64),
    /// `λ = 2 · quantile_q(|Yᵀu₀|)`: the first sweep keeps a fraction
    /// `1 − q` of the coordinates. Recomputed for every column.
    Quantile(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmOptions {
    pub lambda: Lambda,
    pub max_iters: usize,
    pub tol: f64,
}

/// Default multiple of `median(|Yᵀu₀|)`.
pub const DEFAULT_MEDIAN_FACTOR: f64 = 0.1;

impl Default for AdmOptions {
    fn default() -> Self {
        AdmOptions {
            lambda: Lambda::MedianScaled(DEFAULT_MEDIAN_FACTOR),
            max_iters: 500,
            tol: 1e-8,
        }
    }
}

impl AdmOptions {
    fn validate(&self) -> Result<()> {
        let ok = match self.lambda {
            Lambda::Fixed(l) | Lambda::MedianScaled(l) => l > 0.0 && l.is_finite(),
            Lambda::Quantile(q) => q > 0.0 && q < 1.0,
        };
        if !ok {
            return Err(param_err!("lambda must be positive"));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(param_err!("tol and max_iters must be positive"));
        }
        Ok(())
    }

    /// Resolves the ℓ1 weight for data `y` and start `u0`.
    pub fn resolve_lambda(&self, y: &DMatrix<f64>, u0: &DVector<f64>) -> f64 {
        match self.lambda {
            Lambda::Fixed(l) => l,
            Lambda::MedianScaled(f) => f * quantile_abs(&y.tr_mul(u0), 0.5),
            Lambda::Quantile(q) => 2.0 * quantile_abs(&y.tr_mul(u0), q),
        }
    }
}

/// Linear-interpolated `q`-quantile of `|v_i|`.
fn quantile_abs(v: &DVector<f64>, q: f64) -> f64 {
    let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    if a.is_empty() {
        return 0.0;
    }
    a.sort_by(f64::total_cmp);
    let pos = q * (a.len() - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(a.len() - 1);
    let frac = pos - lo as f64;
    a[lo] + frac * (a[hi] - a[lo])
}

/// `sign(x_i) · max(|x_i| − t, 0)`.
pub fn soft_threshold(x: &DVector<f64>, t: f64) -> DVector<f64> {
    x.map(|v| {
        let m = v.abs() - t;
        if m > 0.0 {
            m.copysign(v)
        } else {
            0.0
        }
    })
}

/// `‖Y − u vᵀ‖_F² + λ‖v‖₁` for unit `u`, from `‖Y‖_F²`.
fn composite(y_norm_sq: f64, y: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>, lambda: f64) -> f64 {
    let yv = y * v;
    y_norm_sq - 2.0 * u.dot(&yv) + u.norm_squared() * v.norm_squared() + lambda * v.lp_norm(1)
}

#[derive(Debug, Clone)]
pub struct AdmResult {
    pub u: SphereVector,
    pub v: DVector<f64>,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Composite objective after each full sweep.
    pub objective: Vec<f64>,
    /// Set when the threshold removed every coordinate.
    pub vanished: bool,
}

/// Alternates `v ← soft(Yᵀu, λ/2)` and `u ← Yv/‖Yv‖` from `u0` with the
/// resolved λ.
pub fn adm_rank_one(y: &DMatrix<f64>, opts: &AdmOptions, u0: &SphereVector) -> Result<AdmResult> {
    opts.validate()?;
    if u0.dim() != y.nrows() {
        return Err(dim_err!("u0 has length {}, Y has {} rows", u0.dim(), y.nrows()));
    }
    let norm = u0.as_vector().norm();
    if (norm - 1.0).abs() > SPHERE_TOL {
        return Err(Error::NotUnitNorm(norm));
    }
    let lambda = opts.resolve_lambda(y, u0.as_vector());
    adm_with_lambda(y, lambda, opts, u0)
}

fn adm_with_lambda(y: &DMatrix<f64>, lambda: f64, opts: &AdmOptions, u0: &SphereVector) -> Result<AdmResult> {
    let y_norm_sq = y.norm_squared();
    let mut u = u0.as_vector().clone();
    let mut v = DVector::zeros(y.ncols());
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iters {
        iterations = it + 1;
        v = soft_threshold(&y.tr_mul(&u), lambda / 2.0);
        let yv = y * &v;
        let n = yv.norm();
        if !(n > 0.0) {
            history.push(composite(y_norm_sq, y, &u, &v, lambda));
            return Ok(AdmResult {
                u: SphereVector::from_unit_unchecked(u),
                v,
                lambda,
                iterations,
                converged: false,
                objective: history,
                vanished: true,
            });
        }
        let next = yv / n;
        let moved = (&next - &u).norm();
        u = next;
        history.push(composite(y_norm_sq, y, &u, &v, lambda));
        if moved <= opts.tol {
            converged = true;
            break;
        }
    }
    Ok(AdmResult {
        u: SphereVector::from_unit_unchecked(u),
        v,
        lambda,
        iterations,
        converged,
        objective: history,
        vanished: false,
    })
}

/// Leading left singular vector of `y` via the eigendecomposition of
/// `YYᵀ`.
fn leading_left_vector(gram: &DMatrix<f64>) -> Option<DVector<f64>> {
    let eig = gram.clone().symmetric_eigen();
    let k = eig.eigenvalues.imax();
    if !(eig.eigenvalues[k] > 0.0) {
        return None;
    }
    Some(eig.eigenvectors.column(k).into_owned())
}

#[derive(Debug, Clone)]
pub struct AdmRecovery {
    pub a_est: MixingMatrix,
    pub columns: Vec<AdmResult>,
}

/// Sequential deflation with [`adm_rank_one`] per column. The estimate is
/// rescaled to unit operator norm.
pub fn adm_recover_all(y: &DMatrix<f64>, r: usize, opts: &AdmOptions) -> Result<AdmRecovery> {
    opts.validate()?;
    let p = y.nrows();
    if r == 0 || r > p.min(y.ncols()) {
        return Err(dim_err!("rank r={r} must lie in 1..={}", p.min(y.ncols())));
    }
    let gram = y * y.transpose();
    let mut state = DeflationState::new(p);
    let mut columns = Vec::with_capacity(r);
    for _ in 0..r {
        let deflated = state.project_out(y);
        let b = state.basis_matrix();
        let pg = {
            // P⊥ (YYᵀ) P⊥ without touching the n-dimensional side.
            let left = &gram - &b * (b.transpose() * &gram);
            &left - (&left * &b) * b.transpose()
        };
        let u0 = leading_left_vector(&pg)
            .ok_or_else(|| Error::Degenerate("deflated data vanished".into()))?;
        let u0 = SphereVector::normalize(u0)?;
        let res = adm_rank_one(&deflated, opts, &u0)?;
        state.push(res.u.as_vector().clone())?;
        columns.push(res);
    }
    let est = DMatrix::from_columns(state.recovered());
    Ok(AdmRecovery {
        a_est: MixingMatrix::normalized(est)?,
        columns,
    })
}
