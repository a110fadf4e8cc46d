//! Monotone Riemannian descent on the unit sphere with negative-curvature
//! escape, and the data-driven starting point.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use libm::sqrt;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, Error, Result};
use crate::linalg::{project_tangent, tangent_basis};
use crate::model::{seeded_rng, SphereVector, SPHERE_TOL};
use crate::objective::{Evaluated, Objective};

const MAX_HALVINGS: usize = 60;
const LANCZOS_STREAM: u64 = 0x1A;
const INIT_STREAM: u64 = 0x1B;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub tol_grad: f64,
    pub tol_curv: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    /// Upper bound on the length of a trial step.
    pub init_step: f64,
    /// Accepted for interface compatibility; every solve is already
    /// sequential and reproducible.
    pub deterministic: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_grad: 1e-8,
            tol_curv: 1e-6,
            max_iters: 10_000,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            init_step: 1.0,
            deterministic: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.tol_grad) || !positive(self.tol_curv) || !positive(self.init_step) {
            return Err(param_err!("tolerances and init_step must be positive"));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(param_err!("armijo_c must lie in (0, 1), got {}", self.armijo_c));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(param_err!("backtrack_factor must lie in (0, 1), got {}", self.backtrack_factor));
        }
        if self.max_iters == 0 {
            return Err(param_err!("max_iters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Gradient,
    Curvature,
    /// Terminal record: no step taken from this point.
    None,
}

impl StepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepKind::Gradient => "gradient",
            StepKind::Curvature => "curvature",
            StepKind::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
}

/// State at iterate `iter` and the kind of step taken from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iter: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub min_curvature: Option<f64>,
    pub step_kind: StepKind,
}

#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub iterates: Vec<IterateRecord>,
    pub status: SolveStatus,
    pub final_q: SphereVector,
    pub diagnostic: Option<String>,
}

impl SolveTrace {
    /// Number of accepted steps.
    pub fn steps(&self) -> usize {
        self.iterates.iter().filter(|r| r.step_kind != StepKind::None).count()
    }

    pub fn final_value(&self) -> f64 {
        self.iterates.last().map_or(f64::NAN, |r| r.value)
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.iterates.last().map_or(f64::NAN, |r| r.grad_norm)
    }

    /// CSV with header `iter,value,grad_norm,min_curv,step_kind`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,value,grad_norm,min_curv,step_kind\n");
        for r in &self.iterates {
            let curv = r.min_curvature.map(|c| format!("{c:e}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{:e},{:e},{},{}",
                r.iter,
                r.value,
                r.grad_norm,
                curv,
                r.step_kind.as_str()
            );
        }
        out
    }
}

/// Starting point and whether the fallback was needed.
#[derive(Debug, Clone)]
pub struct InitOutcome {
    pub q: SphereVector,
    pub fallback: bool,
}

/// `q⁰ = Ȳ𝟙 / ‖Ȳ𝟙‖₂`, falling back to a random direction in the column
/// space of `Ȳ` when the row sums vanish.
pub fn init_q0(ybar: &DMatrix<f64>) -> Result<InitOutcome> {
    init_q0_seeded(ybar, 0)
}

pub fn init_q0_seeded(ybar: &DMatrix<f64>, seed: u64) -> Result<InitOutcome> {
    if ybar.is_empty() {
        return Err(Error::Empty("initialization data".into()));
    }
    let sums = row_sums(ybar);
    let scale = ybar.norm();
    if sums.norm() > 1e-14 * scale {
        return Ok(InitOutcome {
            q: SphereVector::normalize(sums)?,
            fallback: false,
        });
    }
    let mut rng = seeded_rng(seed, INIT_STREAM);
    let g = DVector::from_fn(ybar.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let v = ybar * g;
    if !(v.norm() > 1e-14 * scale) {
        return Err(Error::Degenerate("data has no usable column space".into()));
    }
    Ok(InitOutcome {
        q: SphereVector::normalize(v)?,
        fallback: true,
    })
}

fn row_sums(m: &DMatrix<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(m.nrows());
    for col in m.column_iter() {
        out += col;
    }
    out
}

/// Smallest eigenpair of a symmetric operator restricted to `{v : v ⟂ q}`.
///
/// Lanczos with full reorthogonalization against `q` and all previous
/// vectors; falls back to a dense eigendecomposition in a tangent basis
/// when the Ritz residual does not certify the pair.
pub fn min_tangent_eigenpair<F>(op: F, q: &SphereVector) -> (f64, DVector<f64>)
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let qv = q.as_vector();
    let p = qv.len();
    if p <= 1 {
        return (0.0, DVector::zeros(p));
    }
    let dim = p - 1;
    let mut rng = seeded_rng(0, LANCZOS_STREAM);
    let mut random_tangent = |basis: &[DVector<f64>]| -> Option<DVector<f64>> {
        for _ in 0..8 {
            let g = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
            let mut w = project_tangent(qv, &g);
            reorthogonalize(&mut w, qv, basis);
            let n = w.norm();
            if n > 1e-8 {
                return Some(w / n);
            }
        }
        None
    };

    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut v = match random_tangent(&basis) {
        Some(v) => v,
        None => return dense_min_eigenpair(&op, qv),
    };
    let mut scale = 0.0f64;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for k in 0..dim {
        let mut w = op(&v);
        let alpha = v.dot(&w);
        basis.push(v.clone());
        alphas.push(alpha);
        reorthogonalize(&mut w, qv, &basis);
        let beta = w.norm();
        scale = scale.max(alpha.abs()).max(beta);
        let last = k + 1 == dim;
        if last || (k + 1) % 10 == 0 || beta <= 1e-12 * scale.max(1e-300) {
            let (theta, s) = tridiag_min(&alphas, &betas);
            let residual = (beta * s[s.len() - 1]).abs();
            if last || residual <= 1e-10 * scale.max(1.0) {
                best = Some((theta, combine(&basis, &s)));
                if residual <= 1e-10 * scale.max(1.0) || last {
                    break;
                }
            }
        }
        if beta <= 1e-12 * scale.max(1e-300) {
            // Invariant subspace found; restart in its complement.
            match random_tangent(&basis) {
                Some(fresh) => {
                    betas.push(0.0);
                    v = fresh;
                }
                None => break,
            }
        } else {
            betas.push(beta);
            v = w / beta;
        }
    }

    if let Some((theta, vec)) = best {
        let vec = project_tangent(qv, &vec);
        let n = vec.norm();
        if n > 0.0 {
            let vec = vec / n;
            let res = (op(&vec) - &vec * theta).norm();
            if res <= 1e-8 * scale.max(1.0) {
                return (theta, vec);
            }
        }
    }
    dense_min_eigenpair(&op, qv)
}

fn reorthogonalize(w: &mut DVector<f64>, q: &DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        let c = q.dot(w);
        w.axpy(-c, q, 1.0);
        for b in basis {
            let c = b.dot(w);
            w.axpy(-c, b, 1.0);
        }
    }
}

fn combine(basis: &[DVector<f64>], s: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(basis[0].len());
    for (b, &c) in basis.iter().zip(s.iter()) {
        out.axpy(c, b, 1.0);
    }
    out
}

/// Smallest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `alphas` and off-diagonal `betas`.
fn tridiag_min(alphas: &[f64], betas: &[f64]) -> (f64, DVector<f64>) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
}

fn dense_min_eigenpair<F>(op: &F, q: &DVector<f64>) -> (f64, DVector<f64>)
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let b = tangent_basis(q);
    let mut hb = DMatrix::zeros(q.len(), b.ncols());
    for (j, col) in b.column_iter().enumerate() {
        hb.set_column(j, &op(&col.into_owned()));
    }
    let small = b.tr_mul(&hb);
    let small = (&small + small.transpose()) * 0.5;
    let eig = small.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let v = &b * eig.eigenvectors.column(k);
    let n = v.norm();
    (eig.eigenvalues[k], v / n)
}

/// Dense variant for an explicit tangent Hessian.
pub fn min_tangent_eigenpair_dense(h: &DMatrix<f64>, q: &SphereVector) -> (f64, DVector<f64>) {
    dense_min_eigenpair(&|v: &DVector<f64>| h * v, q.as_vector())
}

/// Runs the descent from `q0`.
pub fn solve(obj: &Objective, q0: &SphereVector, opts: &SolverOptions) -> Result<SolveTrace> {
    solve_observed(obj, q0, opts, |_| {})
}

/// Retraction `(q + t·d)/‖q + t·d‖` for tangent `d`, returned as the
/// increment `q_new − q` computed without cancellation.
fn retraction_increment(q: &DVector<f64>, d: &DVector<f64>, t: f64) -> DVector<f64> {
    let dd = t * t * d.norm_squared();
    let s = sqrt(1.0 + dd);
    // (q(1 − s) + t·d)/s with 1 − s = −dd/(1 + s).
    (q * (-dd / (1.0 + s)) + d * t) / s
}

struct Accepted {
    q: SphereVector,
    dq: DVector<f64>,
    diff: f64,
}

/// Backtracking along `d` until `f(R(q + αd)) − f(q) ≤ bound(α)`.
fn backtrack(
    obj: &Objective,
    q: &SphereVector,
    at: &Evaluated,
    d: &DVector<f64>,
    mut alpha: f64,
    factor: f64,
    bound: impl Fn(f64) -> f64,
) -> Option<Accepted> {
    let qv = q.as_vector();
    for _ in 0..=MAX_HALVINGS {
        let dq = retraction_increment(qv, d, alpha);
        let (diff, _) = obj.value_delta(at, &dq);
        if diff <= bound(alpha) && diff <= 0.0 {
            let next = qv + &dq;
            let n = next.norm();
            return Some(Accepted {
                q: SphereVector::from_unit_unchecked(next / n),
                dq,
                diff,
            });
        }
        alpha *= factor;
    }
    None
}

/// [`solve`] with a callback invoked on every iterate, including `q0`.
///
/// Recorded values are `f(q0)` plus the accumulated exact-difference
/// decrements, so the value column is non-increasing in floating point.
pub fn solve_observed(
    obj: &Objective,
    q0: &SphereVector,
    opts: &SolverOptions,
    mut observer: impl FnMut(&SphereVector),
) -> Result<SolveTrace> {
    opts.validate()?;
    if q0.dim() != obj.dim() {
        return Err(dim_err!("q0 has length {}, objective expects {}", q0.dim(), obj.dim()));
    }
    let norm = q0.as_vector().norm();
    if (norm - 1.0).abs() > SPHERE_TOL {
        return Err(Error::NotUnitNorm(norm));
    }

    let mut q = q0.clone();
    let mut at = obj.evaluate(&q);
    let mut value = at.value;
    let mut iterates = Vec::new();
    let mut bb: Option<f64> = None;
    let mut diagnostic = None;
    let mut status = SolveStatus::MaxIters;
    observer(&q);

    for iter in 0..opts.max_iters {
        let gnorm = at.grad.norm();
        if gnorm > opts.tol_grad {
            let max_alpha = opts.init_step / gnorm;
            let alpha0 = bb.map_or(max_alpha, |a| a.min(max_alpha));
            let d = -&at.grad;
            let c = opts.armijo_c * gnorm * gnorm;
            let Some(acc) = backtrack(obj, &q, &at, &d, alpha0, opts.backtrack_factor, |a| -c * a) else {
                iterates.push(record(iter, value, gnorm, None, StepKind::None));
                diagnostic = Some(format!("line search failed at iteration {iter} (gradient norm {gnorm:e})"));
                break;
            };
            iterates.push(record(iter, value, gnorm, None, StepKind::Gradient));
            let next = obj.evaluate(&acc.q);
            // Barzilai–Borwein step for the next iteration.
            let s = project_tangent(acc.q.as_vector(), &acc.dq);
            let y = &next.grad - project_tangent(acc.q.as_vector(), &at.grad);
            let sy = s.dot(&y);
            bb = if sy > 0.0 { Some(s.norm_squared() / sy) } else { None };
            value += acc.diff;
            q = acc.q;
            at = next;
        } else {
            let (lambda, v) = min_tangent_eigenpair(obj.hess_operator(&q), &q);
            if lambda >= -opts.tol_curv {
                iterates.push(record(iter, value, gnorm, Some(lambda), StepKind::None));
                status = SolveStatus::Converged;
                break;
            }
            let c = 0.5 * opts.armijo_c * lambda;
            let qv = q.as_vector();
            let plus = obj.value_delta(&at, &retraction_increment(qv, &v, opts.init_step)).0;
            let minus = obj.value_delta(&at, &retraction_increment(qv, &(-&v), opts.init_step)).0;
            let d = if minus < plus { -v } else { v };
            let Some(acc) = backtrack(obj, &q, &at, &d, opts.init_step, opts.backtrack_factor, |a| c * a * a) else {
                iterates.push(record(iter, value, gnorm, Some(lambda), StepKind::None));
                diagnostic = Some(format!("curvature step failed at iteration {iter} (λ = {lambda:e})"));
                break;
            };
            iterates.push(record(iter, value, gnorm, Some(lambda), StepKind::Curvature));
            value += acc.diff;
            q = acc.q;
            at = obj.evaluate(&q);
            bb = None;
        }
        observer(&q);
    }

    if iterates.last().is_none_or(|r| r.step_kind != StepKind::None) {
        iterates.push(record(iterates.len(), value, at.grad.norm(), None, StepKind::None));
        diagnostic.get_or_insert_with(|| format!("reached max_iters = {}", opts.max_iters));
    }
    Ok(SolveTrace {
        iterates,
        status,
        final_q: q,
        diagnostic,
    })
}

fn record(iter: usize, value: f64, grad_norm: f64, min_curvature: Option<f64>, step_kind: StepKind) -> IterateRecord {
    IterateRecord {
        iter,
        value,
        grad_norm,
        min_curvature,
        step_kind,
    }
}
