//! Seeded single-instance experiments shared by the sweep, compare and
//! decompose commands.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use l4dec_core::baseline_adm::{adm_recover_all, AdmOptions};
use l4dec_core::landscape::{default_thresholds, survey};
use l4dec_core::metrics::{err_single, match_signed_permutation, normalize_columns, RecoveryReport, RHO_E};
use l4dec_core::model::{generate_x, synthesize, MixingKind, MixingMatrix, ProblemDims, SparseCoefficients, SparsityModel};
use l4dec_core::objective::{Objective, ObjectiveKind};
use l4dec_core::pipeline::{recover_all, MixingAssumption, PipelineOptions};
use l4dec_core::precond::precondition;
use l4dec_core::solver::{init_q0_seeded, solve, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    SingleColumn,
    FullMatrix,
    Compare,
    Landscape,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::SingleColumn => "single_column",
            SweepMode::FullMatrix => "full_matrix",
            SweepMode::Compare => "compare",
            SweepMode::Landscape => "landscape",
        }
    }
}

/// One seeded instance: `A` (p × r), `X` (r × n) and `Y = AX`.
pub struct Instance {
    pub a: MixingMatrix,
    pub x: SparseCoefficients,
    pub y: DMatrix<f64>,
}

/// Generates an instance. `r = p` is allowed for the mixing matrix, the
/// sample count must exceed `r`.
pub fn instance(p: usize, r: usize, theta: f64, n: usize, kind: MixingKind, seed: u64) -> l4dec_core::Result<Instance> {
    let a = MixingMatrix::generate(p, r, kind, seed)?;
    // `generate_x` only reads r and n; p is set to keep the check `r < p`.
    let dims = ProblemDims::new(p.max(r + 1), r, n)?;
    let x = generate_x(dims, SparsityModel::with_theta(theta)?, seed)?;
    let y = synthesize(&a, &x)?;
    Ok(Instance { a, x, y })
}

/// Outcome of one trial. `err` is the headline error of the mode and
/// `baseline_err` the ADM error in compare mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub success: bool,
    pub err: f64,
    pub iters: f64,
    pub baseline_err: Option<f64>,
    pub failure: Option<String>,
}

impl TrialOutcome {
    fn failed(message: String) -> Self {
        TrialOutcome {
            success: false,
            err: f64::NAN,
            iters: f64::NAN,
            baseline_err: None,
            failure: Some(message),
        }
    }
}

/// Runs one trial of `mode`; numerical failures are reported in the
/// outcome rather than returned.
pub fn run_trial(mode: SweepMode, p: usize, r: usize, theta: f64, n: usize, seed: u64) -> TrialOutcome {
    let res = match mode {
        SweepMode::SingleColumn => single_column(p, r, theta, n, seed),
        SweepMode::FullMatrix => full_matrix(p, r, theta, n, seed),
        SweepMode::Compare => compare(p, r, theta, n, seed, &AdmOptions::default()),
        SweepMode::Landscape => landscape(p, r, theta, seed),
    };
    res.unwrap_or_else(|e| TrialOutcome::failed(e.to_string()))
}

/// First-column recovery on a general instance. `err` is the error of the
/// whitened solution against the normalized columns of the whitened truth.
pub fn single_column(p: usize, r: usize, theta: f64, n: usize, seed: u64) -> l4dec_core::Result<TrialOutcome> {
    let inst = instance(p, r, theta, n, MixingKind::FullColumnRank, seed)?;
    let pd = precondition(&inst.y, r)?;
    let obj = Objective::new(ObjectiveKind::SampleGeneral { theta }, pd.reduced().clone())?;
    let start = init_q0_seeded(obj.data(), seed)?;
    let trace = solve(&obj, &start.q, &SolverOptions::default())?;
    let qbar = pd.preconditioner().basis() * trace.final_q.as_vector();
    let abar = normalize_columns(&(pd.preconditioner().matrix() * inst.a.matrix()));
    let err = err_single(&qbar, &abar)?;
    Ok(TrialOutcome {
        success: err <= RHO_E,
        err,
        iters: trace.steps() as f64,
        baseline_err: None,
        failure: None,
    })
}

/// Full recovery on a general instance; `err` is the normalized Frobenius
/// error after signed-permutation matching.
pub fn full_matrix(p: usize, r: usize, theta: f64, n: usize, seed: u64) -> l4dec_core::Result<TrialOutcome> {
    let inst = instance(p, r, theta, n, MixingKind::FullColumnRank, seed)?;
    let opts = PipelineOptions { theta: Some(theta), seed, ..Default::default() };
    let rec = recover_all(&inst.y, r, &opts)?;
    let report = RecoveryReport::new(rec.a_est.matrix(), inst.a.matrix(), RHO_E)?;
    let iters = rec.columns.iter().map(|c| c.steps as f64).sum::<f64>() / r as f64;
    Ok(TrialOutcome {
        success: report.success,
        err: report.frobenius_err,
        iters,
        baseline_err: None,
        failure: None,
    })
}

/// ℓ4 pipeline against ADM on a semi-orthogonal instance. Success means
/// the pipeline's Frobenius error is strictly smaller.
pub fn compare(p: usize, r: usize, theta: f64, n: usize, seed: u64, adm: &AdmOptions) -> l4dec_core::Result<TrialOutcome> {
    let inst = instance(p, r, theta, n, MixingKind::SemiOrthogonal, seed)?;
    let opts = PipelineOptions {
        theta: Some(theta),
        mixing: MixingAssumption::SemiOrthogonal,
        seed,
        ..Default::default()
    };
    let rec = recover_all(&inst.y, r, &opts)?;
    let (_, l4_err) = match_signed_permutation(rec.a_est.matrix(), inst.a.matrix())?;
    let base = adm_recover_all(&inst.y, r, adm)?;
    let (_, adm_err) = match_signed_permutation(base.a_est.matrix(), inst.a.matrix())?;
    let iters = rec.columns.iter().map(|c| c.steps as f64).sum::<f64>() / r as f64;
    Ok(TrialOutcome {
        success: l4_err < adm_err,
        err: l4_err,
        iters,
        baseline_err: Some(adm_err),
        failure: None,
    })
}

/// Samples used per landscape trial.
pub const LANDSCAPE_SAMPLES: usize = 200;

/// Population landscape on a semi-orthogonal `A` (p × r). `err` is the
/// fraction of `R2` samples without a negative-curvature witness; success
/// means there are none.
pub fn landscape(p: usize, r: usize, theta: f64, seed: u64) -> l4dec_core::Result<TrialOutcome> {
    let a = MixingMatrix::generate(p, r, MixingKind::SemiOrthogonal, seed)?;
    let (c, big_c) = default_thresholds(r);
    let s = survey(a.matrix(), theta, c, big_c, LANDSCAPE_SAMPLES, 0, seed)?;
    let missing = s.r2_negative_witness_fraction.map_or(0.0, |f| 1.0 - f);
    Ok(TrialOutcome {
        success: missing == 0.0,
        err: missing,
        iters: f64::NAN,
        baseline_err: None,
        failure: None,
    })
}
