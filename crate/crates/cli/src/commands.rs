//! Command-line surface.
//!
//! Every command accepts `--config FILE` with a JSON object whose keys are
//! the long flag names in snake case. Flags given on the command line take
//! precedence over the file.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use l4dec_core::baseline_adm::{adm_recover_all, AdmOptions, Lambda, DEFAULT_MEDIAN_FACTOR};
use l4dec_core::landscape::{balanced_point, critical_point_taxonomy, default_thresholds, survey, CriticalCase, LandscapeSurvey};
use l4dec_core::metrics::{RecoveryReport, RHO_E};
use l4dec_core::model::{generate_a, generate_x, synthesize, MixingKind, MixingMatrix, ProblemDims, SparsityModel};
use l4dec_core::pipeline::{recover_all, InitMode, MixingAssumption, PipelineOptions};
use l4dec_core::solver::SolverOptions;

use crate::error::{CliError, CliResult};
use crate::experiment::{compare, SweepMode};
use crate::io::{ensure_dir, read_json, read_matrix, write_bytes, write_json, write_matrix, MatrixFormat};
use crate::stats::mean;
use crate::svg;
use crate::sweep::{heatmap, run_sweep, timings, to_csv, ExperimentGrid};

#[derive(Debug, Parser)]
#[command(name = "l4dec", version, about = "Sparse low-rank decomposition by l4-norm maximization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded (A, X, Y) bundle.
    Synth(SynthArgs),
    /// Recover A from Y.
    Decompose(DecomposeArgs),
    /// Run a seeded parameter sweep.
    Sweep(SweepArgs),
    /// Survey the population landscape.
    Landscape(LandscapeArgs),
    /// Compare the l4 pipeline with the ADM baseline on orthonormal A.
    Compare(CompareArgs),
}

/// Copies every field that is unset on the command line from the config.
macro_rules! merge {
    ($args:ident, $cfg:ident; $($f:ident),* $(,)?) => {
        $( if $args.$f.is_none() { $args.$f = $cfg.$f.clone(); } )*
    };
}

fn load_config<T: Default + for<'de> Deserialize<'de>>(path: &Option<PathBuf>) -> CliResult<T> {
    match path {
        Some(p) => read_json(p),
        None => Ok(T::default()),
    }
}

fn required<T>(v: Option<T>, name: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Args(format!("--{name} is required")))
}

fn timestamp(deterministic: bool) -> Option<String> {
    if deterministic {
        return None;
    }
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    Some(format!("unix {secs}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    General,
    Orthogonal,
}

impl From<KindArg> for MixingKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::General => MixingKind::FullColumnRank,
            KindArg::Orthogonal => MixingKind::SemiOrthogonal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Bin,
    Csv,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Bin => MatrixFormat::Binary,
            FormatArg::Csv => MatrixFormat::Csv,
        }
    }
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthArgs {
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Standard deviation of the nonzero entries of X.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Contents of `manifest.json` in a synth bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub p: usize,
    pub r: usize,
    pub n: usize,
    pub theta: f64,
    pub sigma: f64,
    pub seed: u64,
    pub kind: KindArg,
    pub a: String,
    pub x: String,
    pub y: String,
}

pub fn cmd_synth(mut args: SynthArgs) -> CliResult<Manifest> {
    let cfg: SynthArgs = load_config(&args.config)?;
    merge!(args, cfg; p, r, theta, n, seed, sigma, kind, format, out);
    let dims = ProblemDims::new(required(args.p, "p")?, required(args.r, "r")?, required(args.n, "n")?)?;
    let theta = required(args.theta, "theta")?;
    let sigma = args.sigma.unwrap_or(1.0);
    let seed = args.seed.unwrap_or(0);
    let kind = args.kind.unwrap_or(KindArg::General);
    let format = MatrixFormat::from(args.format.unwrap_or(FormatArg::Bin));
    let out = required(args.out, "out")?;

    let a = generate_a(dims, kind.into(), seed)?;
    let x = generate_x(dims, SparsityModel::new(theta, sigma)?, seed)?;
    let y = synthesize(&a, &x)?;

    ensure_dir(&out)?;
    let name = |stem: &str| format!("{stem}.{}", format.extension());
    let manifest = Manifest {
        p: dims.p,
        r: dims.r,
        n: dims.n,
        theta,
        sigma,
        seed,
        kind,
        a: name("A"),
        x: name("X"),
        y: name("Y"),
    };
    write_matrix(&out.join(&manifest.a), a.matrix())?;
    write_matrix(&out.join(&manifest.x), x.matrix())?;
    write_matrix(&out.join(&manifest.y), &y)?;
    write_json(&out.join("manifest.json"), &manifest)?;
    println!("seed: {seed}");
    Ok(manifest)
}

// ------------------------------------------------------------ decompose

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    L4,
    Adm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitArg {
    Once,
    PerStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixingArg {
    General,
    SemiOrthogonal,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeArgs {
    /// Data matrix Y (`.csv` or binary container).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Synth bundle directory; supplies Y, r, θ and the ground truth.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Ground-truth A for scoring.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[arg(long, value_enum)]
    pub mixing: Option<MixingArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol_grad: Option<f64>,
    /// ADM: fixed ℓ1 weight (overrides the median rule).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// ADM: λ as a multiple of median |Yᵀu₀|.
    #[arg(long)]
    pub lambda_factor: Option<f64>,
    #[arg(long)]
    pub rho_e: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: Option<bool>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Per-column summary shared by both methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub index: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_value: f64,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeParams {
    pub p: usize,
    pub r: usize,
    pub n: usize,
    pub theta: Option<f64>,
    pub init: Option<InitArg>,
    pub mixing: Option<MixingArg>,
    pub lambda: Option<Vec<f64>>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub method: MethodArg,
    pub params: DecomposeParams,
    pub columns: Vec<ColumnSummary>,
    pub recovery: Option<RecoveryReport>,
    pub wall_time_secs: Option<f64>,
}

pub fn cmd_decompose(mut args: DecomposeArgs) -> CliResult<DecomposeReport> {
    let cfg: DecomposeArgs = load_config(&args.config)?;
    merge!(args, cfg; input, bundle, truth, r, theta, method, init, mixing, seed, max_iters, tol_grad,
        lambda, lambda_factor, rho_e, out, deterministic);
    let manifest: Option<Manifest> = match &args.bundle {
        Some(dir) => Some(read_json(&dir.join("manifest.json"))?),
        None => None,
    };
    let (y_path, truth_path) = match (&args.input, &args.bundle, &manifest) {
        (Some(input), _, _) => (input.clone(), args.truth.clone()),
        (None, Some(dir), Some(m)) => (dir.join(&m.y), args.truth.clone().or_else(|| Some(dir.join(&m.a)))),
        _ => return Err(CliError::Args("one of --input or --bundle is required".into())),
    };
    let r = required(args.r.or(manifest.as_ref().map(|m| m.r)), "r")?;
    let theta = args.theta.or(manifest.as_ref().map(|m| m.theta));
    let method = args.method.unwrap_or(MethodArg::L4);
    let seed = args.seed.unwrap_or(0);
    let out = required(args.out.clone(), "out")?;
    let deterministic = args.deterministic.unwrap_or(false);

    let y = read_matrix(&y_path)?;
    let truth = truth_path.map(|p| read_matrix(&p)).transpose()?;
    if let Some(t) = &truth {
        if t.nrows() != y.nrows() || t.ncols() != r {
            return Err(CliError::Args(format!(
                "ground truth is {}×{}, expected {}×{r}",
                t.nrows(),
                t.ncols(),
                y.nrows()
            )));
        }
    }
    ensure_dir(&out)?;
    let ext = MatrixFormat::from_path(&y_path).extension();

    let start = Instant::now();
    let (a_est, columns, params_extra, traces) = match method {
        MethodArg::L4 => {
            let mut solver = SolverOptions::default();
            if let Some(m) = args.max_iters {
                solver.max_iters = m;
            }
            if let Some(t) = args.tol_grad {
                solver.tol_grad = t;
            }
            let init = args.init.unwrap_or(InitArg::PerStep);
            let mixing = args.mixing.unwrap_or(MixingArg::General);
            let opts = PipelineOptions {
                solver,
                theta,
                init: match init {
                    InitArg::Once => InitMode::Once,
                    InitArg::PerStep => InitMode::PerStep,
                },
                mixing: match mixing {
                    MixingArg::General => MixingAssumption::General,
                    MixingArg::SemiOrthogonal => MixingAssumption::SemiOrthogonal,
                },
                seed,
                ..Default::default()
            };
            let rec = recover_all(&y, r, &opts)?;
            let columns = rec
                .columns
                .iter()
                .map(|c| ColumnSummary {
                    index: c.index,
                    converged: c.status == l4dec_core::solver::SolveStatus::Converged && !c.null_region,
                    iterations: c.steps,
                    final_value: c.final_value,
                    message: c.message.clone(),
                })
                .collect();
            let mut csv = String::from("column,iter,value,grad_norm,min_curv,step_kind\n");
            for (j, t) in rec.traces.iter().enumerate() {
                for line in t.to_csv().lines().skip(1) {
                    let _ = writeln!(csv, "{j},{line}");
                }
            }
            (rec.a_est.into_matrix(), columns, (Some(init), Some(mixing), None), Some(csv))
        }
        MethodArg::Adm => {
            let mut opts = AdmOptions::default();
            if let Some(f) = args.lambda_factor {
                opts.lambda = Lambda::MedianScaled(f);
            }
            if let Some(l) = args.lambda {
                opts.lambda = Lambda::Fixed(l);
            }
            if let Some(m) = args.max_iters {
                opts.max_iters = m;
            }
            let rec = adm_recover_all(&y, r, &opts)?;
            let columns = rec
                .columns
                .iter()
                .enumerate()
                .map(|(j, c)| ColumnSummary {
                    index: j,
                    converged: c.converged && !c.vanished,
                    iterations: c.iterations,
                    final_value: c.objective.last().copied().unwrap_or(f64::NAN),
                    message: c.vanished.then(|| "threshold removed every coordinate".to_string()),
                })
                .collect();
            let lambdas = rec.columns.iter().map(|c| c.lambda).collect();
            (rec.a_est.into_matrix(), columns, (None, None, Some(lambdas)), None)
        }
    };
    let elapsed = start.elapsed().as_secs_f64();

    write_matrix(&out.join(format!("A_est.{ext}")), &a_est)?;
    if let Some(csv) = traces {
        write_bytes(&out.join("traces.csv"), csv.as_bytes())?;
    }
    let recovery = truth
        .as_ref()
        .map(|t| RecoveryReport::new(&a_est, t, args.rho_e.unwrap_or(RHO_E)))
        .transpose()?;
    let report = DecomposeReport {
        method,
        params: DecomposeParams {
            p: y.nrows(),
            r,
            n: y.ncols(),
            theta,
            init: params_extra.0,
            mixing: params_extra.1,
            lambda: params_extra.2,
            seed,
        },
        columns,
        recovery,
        wall_time_secs: (!deterministic).then_some(elapsed),
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    SingleColumn,
    FullMatrix,
    Compare,
    Landscape,
}

impl From<ModeArg> for SweepMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SingleColumn => SweepMode::SingleColumn,
            ModeArg::FullMatrix => SweepMode::FullMatrix,
            ModeArg::Compare => SweepMode::Compare,
            ModeArg::Landscape => SweepMode::Landscape,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Comma-separated list.
    #[arg(long = "r", value_delimiter = ',')]
    pub r_values: Option<Vec<usize>>,
    /// Comma-separated list.
    #[arg(long = "theta", value_delimiter = ',')]
    pub theta_values: Option<Vec<f64>>,
    /// Comma-separated list.
    #[arg(long = "n", value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub base_seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Start from the full-scale grid with 200 trials per cell.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub paper_scale: Option<bool>,
    /// Omit wall times and timestamps from the outputs.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn resolve_grid(args: &SweepArgs) -> ExperimentGrid {
    let mode = SweepMode::from(args.mode.unwrap_or(ModeArg::SingleColumn));
    let mut grid = if args.paper_scale.unwrap_or(false) {
        ExperimentGrid::full_scale(mode)
    } else {
        ExperimentGrid::desk(mode)
    };
    if let Some(p) = args.p {
        grid.p = p;
    }
    if let Some(v) = &args.r_values {
        grid.r_values = v.clone();
    }
    if let Some(v) = &args.theta_values {
        grid.theta_values = v.clone();
    }
    if let Some(v) = &args.n_values {
        grid.n_values = v.clone();
    }
    if let Some(t) = args.trials {
        grid.trials = t;
    }
    if let Some(s) = args.base_seed {
        grid.base_seed = s;
    }
    grid
}

pub fn cmd_sweep(mut args: SweepArgs) -> CliResult<String> {
    let cfg: SweepArgs = load_config(&args.config)?;
    merge!(args, cfg; mode, p, r_values, theta_values, n_values, trials, base_seed, jobs, paper_scale, deterministic, out);
    let grid = resolve_grid(&args);
    let out = required(args.out.clone(), "out")?;
    let deterministic = args.deterministic.unwrap_or(false);
    grid.validate()?;
    let results = run_sweep(&grid, args.jobs.unwrap_or(1))?;
    let csv = to_csv(&results);
    ensure_dir(&out)?;
    write_bytes(&out.join("sweep.csv"), csv.as_bytes())?;
    let ts = timestamp(deterministic);
    write_bytes(&out.join("heatmap.svg"), heatmap(&grid, &results, ts.as_deref()).as_bytes())?;
    if !deterministic {
        write_json(&out.join("timings.json"), &timings(&results))?;
    }
    Ok(csv)
}

// ------------------------------------------------------------ landscape

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeArgs {
    /// Use A = I_r (p = r) instead of a random semi-orthogonal A.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub identity: Option<bool>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Lower region threshold c⋆ (default 1/(2r)).
    #[arg(long)]
    pub c_star: Option<f64>,
    /// Upper region threshold C⋆ (default 1/4).
    #[arg(long = "C-star")]
    #[serde(rename = "C_star")]
    pub big_c_star: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Random starts for the critical-point census.
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Taxonomy of an analytic balanced critical point `Σ_{i<k} a_i / √k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPoint {
    pub k: usize,
    pub alpha: f64,
    pub case: CriticalCase,
    pub spikes: Vec<usize>,
    pub alpha_consistent: bool,
    pub curvature_witness: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub p: usize,
    pub r: usize,
    pub seed: u64,
    pub identity: bool,
    pub outside_theory: bool,
    pub survey: LandscapeSurvey,
    pub analytic_points: Vec<AnalyticPoint>,
}

pub fn cmd_landscape(mut args: LandscapeArgs) -> CliResult<LandscapeReport> {
    let cfg: LandscapeArgs = load_config(&args.config)?;
    merge!(args, cfg; identity, p, r, theta, c_star, big_c_star, samples, starts, seed, deterministic, out);
    let identity = args.identity.unwrap_or(false);
    let r = args.r.unwrap_or(3);
    let p = if identity { r } else { args.p.unwrap_or(r) };
    let theta = args.theta.unwrap_or(0.1);
    let (c_default, big_default) = default_thresholds(r);
    let c_star = args.c_star.unwrap_or(c_default);
    let big_c_star = args.big_c_star.unwrap_or(big_default);
    let samples = args.samples.unwrap_or(1000);
    let starts = args.starts.unwrap_or(20);
    let seed = args.seed.unwrap_or(0);
    let out = required(args.out.clone(), "out")?;
    let deterministic = args.deterministic.unwrap_or(false);

    let a = if identity {
        DMatrix::identity(r, r)
    } else {
        MixingMatrix::generate(p, r, MixingKind::SemiOrthogonal, seed)?.into_matrix()
    };
    let s = survey(&a, theta, c_star, big_c_star, samples, starts, seed)?;
    let mut analytic_points = Vec::new();
    for k in 1..=r.min(4) {
        let subset: Vec<usize> = (0..k).collect();
        let q = balanced_point(&a, &subset, &vec![1.0; k])?;
        let rep = critical_point_taxonomy(&a, &q, theta, 1e-8)?;
        analytic_points.push(AnalyticPoint {
            k,
            alpha: rep.alpha,
            case: rep.case,
            spikes: rep.spikes,
            alpha_consistent: rep.alpha_consistent,
            curvature_witness: rep.curvature_witness.map(|(_, v)| v),
        });
    }
    let report = LandscapeReport {
        p,
        r,
        seed,
        identity,
        outside_theory: s.outside_theory,
        survey: s,
        analytic_points,
    };
    ensure_dir(&out)?;
    write_json(&out.join("landscape.json"), &report)?;
    let figure = svg::scatter(
        &format!("min tangent curvature, θ = {theta}"),
        "‖Aᵀq‖∞²",
        "λ_min(Hess f)",
        &report.survey.points,
        &[c_star, big_c_star],
        timestamp(deterministic).as_deref(),
    );
    write_bytes(&out.join("landscape.svg"), figure.as_bytes())?;
    Ok(report)
}

// -------------------------------------------------------------- compare

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareArgs {
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated list.
    #[arg(long = "theta", value_delimiter = ',')]
    pub theta_values: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub base_seed: Option<u64>,
    /// ADM: λ as a multiple of median |Yᵀu₀|.
    #[arg(long)]
    pub lambda_factor: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub theta: f64,
    pub seed: u64,
    pub l4_err: f64,
    pub adm_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub theta: f64,
    pub trials: usize,
    pub failures: usize,
    pub l4_wins: usize,
    pub win_fraction: f64,
    pub mean_l4_err: Option<f64>,
    pub mean_adm_err: Option<f64>,
    /// Largest `max(l4, adm) / min(l4, adm)` over the trials.
    pub max_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub p: usize,
    pub r: usize,
    pub n: usize,
    pub lambda_factor: f64,
    pub rows: Vec<CompareRow>,
    pub summary: Vec<CompareSummary>,
}

pub fn cmd_compare(mut args: CompareArgs) -> CliResult<CompareReport> {
    let cfg: CompareArgs = load_config(&args.config)?;
    merge!(args, cfg; p, r, n, theta_values, trials, base_seed, lambda_factor, jobs, out);
    let (p, r, n) = (args.p.unwrap_or(100), args.r.unwrap_or(10), args.n.unwrap_or(5000));
    let thetas = args.theta_values.clone().unwrap_or_else(|| vec![0.1, 0.5]);
    let trials = args.trials.unwrap_or(20);
    let base_seed = args.base_seed.unwrap_or(0);
    let factor = args.lambda_factor.unwrap_or(DEFAULT_MEDIAN_FACTOR);
    ProblemDims::new(p, r, n)?;
    if thetas.is_empty() || trials == 0 {
        return Err(CliError::Args("need at least one θ and one trial".into()));
    }
    let adm = AdmOptions { lambda: Lambda::MedianScaled(factor), ..Default::default() };
    let tasks: Vec<(f64, u64)> = thetas
        .iter()
        .flat_map(|&t| (0..trials as u64).map(move |k| (t, base_seed.wrapping_add(k))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(1).max(1))
        .build()
        .map_err(|e| CliError::Args(format!("thread pool: {e}")))?;
    let outcomes: Vec<Option<CompareRow>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(theta, seed)| {
                compare(p, r, theta, n, seed, &adm).ok().map(|o| CompareRow {
                    theta,
                    seed,
                    l4_err: o.err,
                    adm_err: o.baseline_err.unwrap_or(f64::NAN),
                })
            })
            .collect()
    });
    let summary = thetas
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let chunk = &outcomes[i * trials..(i + 1) * trials];
            let ok: Vec<&CompareRow> = chunk.iter().flatten().collect();
            let wins = ok.iter().filter(|c| c.l4_err < c.adm_err).count();
            let l4: Vec<f64> = ok.iter().map(|c| c.l4_err).collect();
            let base: Vec<f64> = ok.iter().map(|c| c.adm_err).collect();
            let max_ratio = ok
                .iter()
                .map(|c| c.l4_err.max(c.adm_err) / c.l4_err.min(c.adm_err))
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
            CompareSummary {
                theta,
                trials,
                failures: trials - ok.len(),
                l4_wins: wins,
                win_fraction: wins as f64 / trials as f64,
                mean_l4_err: mean(&l4),
                mean_adm_err: mean(&base),
                max_ratio,
            }
        })
        .collect();
    let report = CompareReport {
        p,
        r,
        n,
        lambda_factor: factor,
        rows: outcomes.into_iter().flatten().collect(),
        summary,
    };
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let mut csv = String::from("theta,seed,l4_err,adm_err,l4_better\n");
        for row in &report.rows {
            let _ = writeln!(csv, "{},{},{},{},{}", row.theta, row.seed, row.l4_err, row.adm_err, row.l4_err < row.adm_err);
        }
        write_bytes(&out.join("compare.csv"), csv.as_bytes())?;
        write_json(&out.join("summary.json"), &report.summary)?;
    }
    Ok(report)
}

/// Dispatches a parsed command line.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(a).map(|_| ()),
        Command::Decompose(a) => {
            let rep = cmd_decompose(a)?;
            if let Some(rec) = &rep.recovery {
                println!("frobenius_err: {}  success: {}", rec.frobenius_err, rec.success);
            }
            Ok(())
        }
        Command::Sweep(a) => cmd_sweep(a).map(|csv| print!("{csv}")),
        Command::Landscape(a) => cmd_landscape(a).map(|rep| {
            println!("outside_theory: {}", rep.outside_theory);
        }),
        Command::Compare(a) => cmd_compare(a).map(|rep| {
            for s in &rep.summary {
                println!(
                    "theta {}: l4 better in {}/{} trials, max ratio {:?}",
                    s.theta, s.l4_wins, s.trials, s.max_ratio
                );
            }
        }),
    }
}

