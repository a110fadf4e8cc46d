//! Recovery errors and signed-permutation alignment.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::model::SignedPermutation;

/// Success threshold on the per-column error.
pub const RHO_E: f64 = 0.01;

/// `min_i (1 − |⟨q̄, ā_i⟩|)`.
pub fn err_single(qbar: &DVector<f64>, abar: &DMatrix<f64>) -> Result<f64> {
    if qbar.len() != abar.nrows() {
        return Err(dim_err!("q̄ has length {}, Ā has {} rows", qbar.len(), abar.nrows()));
    }
    let best = abar.tr_mul(qbar).amax();
    Ok((1.0 - best).clamp(0.0, 1.0))
}

/// Signed permutation `P` minimizing `‖A_est − A_true·P‖_F / √r`, and that
/// minimum.
pub fn match_signed_permutation(
    a_est: &DMatrix<f64>,
    a_true: &DMatrix<f64>,
) -> Result<(SignedPermutation, f64)> {
    if a_est.shape() != a_true.shape() {
        return Err(dim_err!("shapes differ: {:?} vs {:?}", a_est.shape(), a_true.shape()));
    }
    let r = a_est.ncols();
    if r == 0 {
        return Err(Error::Empty("no columns to match".into()));
    }
    // cost[(j, k)]: estimate column j against ±(true column k).
    let mut cost = DMatrix::zeros(r, r);
    let mut sign = vec![1i8; r * r];
    for j in 0..r {
        let e = a_est.column(j);
        let ee = e.norm_squared();
        for k in 0..r {
            let t = a_true.column(k);
            let dot = e.dot(&t);
            let s = if dot < 0.0 { -1.0 } else { 1.0 };
            cost[(j, k)] = (ee - 2.0 * s * dot + t.norm_squared()).max(0.0);
            sign[j * r + k] = s as i8;
        }
    }
    let perm = hungarian(&cost);
    let signs = perm.iter().enumerate().map(|(j, &k)| sign[j * r + k]).collect();
    let p = SignedPermutation::new(perm, signs)?;
    let aligned = p.apply(a_true)?;
    let err = (a_est - aligned).norm() / sqrt(r as f64);
    Ok((p, err))
}

/// Minimum-cost perfect assignment on a square cost matrix: returns
/// `assignment[row] = column`. Shortest augmenting paths with potentials,
/// O(r³).
pub fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    let inf = f64::INFINITY;
    // 1-based arrays; index 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let i0 = owner[col0];
            let mut delta = inf;
            let mut col1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = col0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Scores for one recovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub per_column_err: Vec<f64>,
    pub frobenius_err: f64,
    pub matching: SignedPermutation,
    pub success: bool,
}

impl RecoveryReport {
    /// Compares `a_est` against `a_true`. `per_column_err` scores each
    /// normalized estimate column against the normalized true columns;
    /// `success` means every column is within `rho_e`.
    pub fn new(a_est: &DMatrix<f64>, a_true: &DMatrix<f64>, rho_e: f64) -> Result<Self> {
        let (matching, frobenius_err) = match_signed_permutation(a_est, a_true)?;
        let truth = normalize_columns(a_true);
        let est = normalize_columns(a_est);
        let per_column_err = est
            .column_iter()
            .map(|c| err_single(&c.into_owned(), &truth))
            .collect::<Result<Vec<_>>>()?;
        let success = per_column_err.iter().all(|&e| e <= rho_e);
        Ok(RecoveryReport {
            per_column_err,
            frobenius_err,
            matching,
            success,
        })
    }

    pub fn min_err(&self) -> f64 {
        self.per_column_err.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_err(&self) -> f64 {
        self.per_column_err.iter().copied().fold(0.0, f64::max)
    }

    /// Header matching [`RecoveryReport::csv_row`].
    pub const CSV_HEADER: &'static str = "frobenius_err,min_column_err,max_column_err,success";

    pub fn csv_row(&self) -> alloc::string::String {
        alloc::format!(
            "{:e},{:e},{:e},{}",
            self.frobenius_err,
            self.min_err(),
            self.max_err(),
            self.success
        )
    }
}

/// Whether success requires one column or all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessMode {
    SingleColumn,
    FullMatrix,
}

/// Fraction of reports counted as successes at threshold `rho_e`.
pub fn success_rate(reports: &[RecoveryReport], rho_e: f64, mode: SuccessMode) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::Empty("no reports".into()));
    }
    let hits = reports
        .iter()
        .filter(|r| match mode {
            SuccessMode::SingleColumn => r.min_err() <= rho_e,
            SuccessMode::FullMatrix => r.max_err() <= rho_e,
        })
        .count();
    Ok(hits as f64 / reports.len() as f64)
}

/// Copy of `m` with unit-norm columns (zero columns left unchanged).
pub fn normalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut c in out.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
    out
}
