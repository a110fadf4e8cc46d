//! Column-by-column recovery of `A` by deflation.
//!
//! The whitened data `Ȳ = U Vᵀ` has its columns in the span of the r
//! orthonormal columns of `U`, and so do all iterates started there. Every
//! solve therefore runs on the r × n coordinate matrix `Vᵀ` with `q = U z`;
//! the map `z ↦ U z` is an isometry onto that span, so objective values,
//! gradients and curvature are unchanged. Under
//! [`MixingAssumption::SemiOrthogonal`] the coordinates are `UᵀY` instead.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::linalg::orthonormalize_against;
use crate::model::{seeded_rng, MixingMatrix, SphereVector};
use crate::objective::{Objective, ObjectiveKind};
use crate::precond::{invert_precondition, precondition, PreconditionedData};
use crate::solver::{init_q0_seeded, solve, SolveStatus, SolveTrace, SolverOptions};

/// `‖(P⊥Ȳ)ᵀq‖₂` below this marks a solve that ended in the flat region.
const NULL_REGION_TOL: f64 = 1e-6;
const RETRY_STREAM: u64 = 0x2C;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Initialize from the deflated data at every step.
    PerStep,
    /// Initialize once from `Ȳ` and restart every step from that point.
    Once,
}

/// What is assumed about the mixing matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingAssumption {
    /// Full column rank: whiten, solve, map back through `D⁺`.
    General,
    /// Semi-orthogonal: solve on the unwhitened data restricted to its
    /// column space and return the unit-norm directions.
    SemiOrthogonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    pub solver: SolverOptions,
    /// Sparsity level if known; selects the calibrated objective. Otherwise
    /// the scale-free `−‖·‖₄⁴` is used (same minimizers).
    pub theta: Option<f64>,
    pub init: InitMode,
    pub mixing: MixingAssumption,
    /// Retry a failed column once from a random start.
    pub retry: bool,
    /// Seed for fallback and retry starting points.
    pub seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            solver: SolverOptions::default(),
            theta: None,
            init: InitMode::PerStep,
            mixing: MixingAssumption::General,
            retry: true,
            seed: 0,
        }
    }
}

impl PipelineOptions {
    fn objective_kind(&self) -> ObjectiveKind {
        match (self.theta, self.mixing) {
            (Some(theta), MixingAssumption::General) => ObjectiveKind::SampleGeneral { theta },
            (Some(theta), MixingAssumption::SemiOrthogonal) => ObjectiveKind::SampleOrth { theta, sigma: 1.0 },
            (None, _) => ObjectiveKind::RawL4,
        }
    }
}

/// Recovered directions and an orthonormal basis of their span.
#[derive(Debug, Clone)]
pub struct DeflationState {
    dim: usize,
    recovered: Vec<DVector<f64>>,
    basis: Vec<DVector<f64>>,
}

impl DeflationState {
    pub fn new(dim: usize) -> Self {
        DeflationState {
            dim,
            recovered: Vec::new(),
            basis: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.recovered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recovered.is_empty()
    }

    pub fn recovered(&self) -> &[DVector<f64>] {
        &self.recovered
    }

    /// Basis as a `dim × k` matrix.
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        if self.basis.is_empty() {
            return DMatrix::zeros(self.dim, 0);
        }
        DMatrix::from_columns(&self.basis)
    }

    /// Largest `|⟨v, b⟩|` over the current basis.
    pub fn overlap(&self, v: &DVector<f64>) -> f64 {
        self.basis.iter().map(|b| b.dot(v).abs()).fold(0.0, f64::max)
    }

    /// Appends `v` and extends the basis by modified Gram–Schmidt.
    /// Returns the overlap with the previous basis.
    pub fn push(&mut self, v: DVector<f64>) -> Result<f64> {
        if v.len() != self.dim {
            return Err(dim_err!("vector has length {}, state has dimension {}", v.len(), self.dim));
        }
        let overlap = self.overlap(&v);
        let b = orthonormalize_against(&self.basis, &v)
            .ok_or_else(|| Error::Degenerate("recovered vector lies in the span of earlier ones".into()))?;
        self.recovered.push(v);
        self.basis.push(b);
        Ok(overlap)
    }

    /// `(I − QQᵀ)·M`.
    pub fn project_out(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for b in &self.basis {
            let coeffs = b.transpose() * &out;
            out -= b * coeffs;
        }
        out
    }

    fn project_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        for b in &self.basis {
            let c = b.dot(&out);
            out.axpy(-c, b, 1.0);
        }
        out
    }
}

/// Data of the deflated problem: `P⊥·Ȳ`.
pub fn deflation_objective(ybar: &DMatrix<f64>, state: &DeflationState) -> Result<DMatrix<f64>> {
    if ybar.nrows() != state.dim {
        return Err(dim_err!("Ȳ has {} rows, state has dimension {}", ybar.nrows(), state.dim));
    }
    Ok(state.project_out(ybar))
}

/// Per-column outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDiagnostic {
    pub index: usize,
    pub status: SolveStatus,
    pub steps: usize,
    pub final_value: f64,
    pub grad_norm: f64,
    pub init_fallback: bool,
    pub retried: bool,
    pub null_region: bool,
    /// `max |⟨new, prior basis⟩|` before re-orthonormalization.
    pub prior_overlap: f64,
    pub message: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Recovery {
    /// Estimate of `A`, unit operator norm.
    pub a_est: MixingMatrix,
    /// Unit-norm directions `Ā_est` (p × r) found by the solves.
    pub abar_est: DMatrix<f64>,
    /// Solver traces in the r-dimensional coordinates of `Ȳ`'s column space.
    pub traces: Vec<SolveTrace>,
    pub columns: Vec<ColumnDiagnostic>,
    pub preconditioned: PreconditionedData,
}

impl Recovery {
    pub fn all_converged(&self) -> bool {
        self.columns.iter().all(|c| c.status == SolveStatus::Converged && !c.null_region)
    }
}

fn random_start(state: &DeflationState, dim: usize, seed: u64, index: usize) -> Option<SphereVector> {
    let mut rng = seeded_rng(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15), RETRY_STREAM);
    for _ in 0..16 {
        let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let v = state.project_vector(&g);
        if let Ok(q) = SphereVector::normalize(v) {
            return Some(q);
        }
    }
    None
}

/// Recovers `r` columns of `A` one at a time by deflation. In the general
/// case the data is whitened first and the result is mapped back to the
/// data scale.
pub fn recover_all(y: &DMatrix<f64>, r: usize, opts: &PipelineOptions) -> Result<Recovery> {
    opts.solver.validate()?;
    let pd = precondition(y, r)?;
    let w = match opts.mixing {
        MixingAssumption::General => pd.reduced().clone(),
        MixingAssumption::SemiOrthogonal => pd.preconditioner().basis().tr_mul(y),
    };
    let kind = opts.objective_kind();
    let mut state = DeflationState::new(r);
    let mut traces = Vec::with_capacity(r);
    let mut columns = Vec::with_capacity(r);

    let once_start = match opts.init {
        InitMode::Once => Some(init_q0_seeded(&w, opts.seed)?),
        InitMode::PerStep => None,
    };

    for j in 0..r {
        let data = state.project_out(&w);
        let obj = Objective::new(kind, data)?;
        let start = match &once_start {
            Some(init) => init.clone(),
            None => init_q0_seeded(obj.data(), opts.seed.wrapping_add(j as u64))?,
        };
        let mut trace = solve(&obj, &start.q, &opts.solver)?;
        let is_null = |t: &SolveTrace| obj.data().tr_mul(t.final_q.as_vector()).norm() <= NULL_REGION_TOL;
        let mut null_region = is_null(&trace);
        let mut retried = false;
        if opts.retry && (trace.status != SolveStatus::Converged || null_region) {
            if let Some(q0) = random_start(&state, r, opts.seed, j) {
                let second = solve(&obj, &q0, &opts.solver)?;
                let second_null = is_null(&second);
                retried = true;
                let better = (second.status == SolveStatus::Converged && !second_null)
                    || second.final_value() < trace.final_value();
                if better {
                    null_region = second_null;
                    trace = second;
                }
            }
        }
        let z = trace.final_q.as_vector().clone();
        let prior_overlap = state.push(z).map_err(|e| match e {
            Error::Degenerate(_) => Error::Degenerate(format!("column {j} duplicates an earlier column")),
            other => other,
        })?;
        columns.push(ColumnDiagnostic {
            index: j,
            status: trace.status,
            steps: trace.steps(),
            final_value: trace.final_value(),
            grad_norm: trace.final_grad_norm(),
            init_fallback: start.fallback,
            retried,
            null_region,
            prior_overlap,
            message: trace.diagnostic.clone(),
        });
        traces.push(trace);
    }

    let z = DMatrix::from_columns(state.recovered());
    let abar_est = pd.preconditioner().basis() * z;
    let a_est = match opts.mixing {
        MixingAssumption::General => invert_precondition(&abar_est, pd.preconditioner())?.mixing,
        MixingAssumption::SemiOrthogonal => MixingMatrix::normalized(abar_est.clone())?,
    };
    Ok(Recovery {
        a_est,
        abar_est,
        traces,
        columns,
        preconditioned: pd,
    })
}
