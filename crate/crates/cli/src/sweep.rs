//! Parameter sweeps.
//!
//! CSV columns, one row per cell in grid order (r, then θ, then n):
//!
//! - `p`, `r`, `theta`, `n`: cell parameters
//! - `trials`: trials run in the cell
//! - `successes`, `success_rate`: mode-specific success count and fraction
//! - `wilson_lo`, `wilson_hi`: 95% Wilson interval for `success_rate`
//!   (harness extension, not part of the original protocol)
//! - `mean_err`: mean headline error over trials that did not fail
//! - `mean_iters`: mean solver steps per column
//! - `failures`: trials that ended in a numerical error
//! - `mean_baseline_err`: mean ADM error (compare mode only)
//!
//! Wall times are written to a separate JSON sidecar so that the CSV is
//! byte-identical across runs.

use std::fmt::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::experiment::{run_trial, SweepMode, TrialOutcome};
use crate::stats::{mean, wilson_interval, Z95};
use crate::svg::Heatmap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub p: usize,
    pub r_values: Vec<usize>,
    pub theta_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub mode: SweepMode,
}

impl ExperimentGrid {
    /// Desk-scale default grid.
    pub fn desk(mode: SweepMode) -> Self {
        ExperimentGrid {
            p: 60,
            r_values: vec![5, 10],
            theta_values: vec![0.05, 0.1, 0.3],
            n_values: vec![4000],
            trials: 20,
            base_seed: 0,
            mode,
        }
    }

    /// Full-scale grid for `mode`: 200 trials per cell.
    pub fn full_scale(mode: SweepMode) -> Self {
        let thetas: Vec<f64> = (0..20).map(|k| (1 + 3 * k) as f64 / 100.0).collect();
        let (r_values, n) = match mode {
            SweepMode::FullMatrix => ((1..=5).map(|k| 10 * k).collect(), 12_000),
            _ => ((0..4).map(|k| 10 + 20 * k).collect(), 5_000),
        };
        ExperimentGrid {
            p: 100,
            r_values,
            theta_values: thetas,
            n_values: vec![n],
            trials: 200,
            base_seed: 0,
            mode,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.r_values.is_empty() || self.theta_values.is_empty() || self.n_values.is_empty() {
            return Err(CliError::Args("grid value lists must be nonempty".into()));
        }
        if self.trials == 0 {
            return Err(CliError::Args("trials must be at least 1".into()));
        }
        if let Some(t) = self.theta_values.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(CliError::Args(format!("theta {t} is outside (0, 1]")));
        }
        for &r in &self.r_values {
            for &n in &self.n_values {
                // Landscape cells use A with r ≤ p and no samples.
                let ok = match self.mode {
                    SweepMode::Landscape => r >= 1 && r <= self.p,
                    _ => r >= 1 && r < self.p.min(n),
                };
                if !ok {
                    return Err(CliError::Args(format!("cell r={r}, n={n} violates r < min(p={}, n)", self.p)));
                }
            }
        }
        Ok(())
    }

    /// Cells in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &r in &self.r_values {
            for &theta in &self.theta_values {
                for &n in &self.n_values {
                    out.push(Cell { p: self.p, r, theta, n });
                }
            }
        }
        out
    }

    /// Seed of trial `t` in cell `c`.
    pub fn seed(&self, cell: usize, trial: usize) -> u64 {
        self.base_seed.wrapping_add((cell * self.trials + trial) as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub p: usize,
    pub r: usize,
    pub theta: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub params: Cell,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub wilson: (f64, f64),
    pub mean_frobenius_err: Option<f64>,
    pub mean_iters: Option<f64>,
    pub failures: usize,
    pub mean_baseline_err: Option<f64>,
    /// Sum of trial wall times (not written to the CSV).
    #[serde(skip)]
    pub wall_time: Duration,
}

fn aggregate(cell: Cell, outcomes: &[(TrialOutcome, Duration)]) -> CellResult {
    let trials = outcomes.len();
    let successes = outcomes.iter().filter(|(o, _)| o.success).count();
    let ok: Vec<&TrialOutcome> = outcomes.iter().map(|(o, _)| o).filter(|o| o.failure.is_none()).collect();
    let errs: Vec<f64> = ok.iter().map(|o| o.err).filter(|e| e.is_finite()).collect();
    let iters: Vec<f64> = ok.iter().map(|o| o.iters).filter(|e| e.is_finite()).collect();
    let base: Vec<f64> = ok.iter().filter_map(|o| o.baseline_err).collect();
    CellResult {
        params: cell,
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        wilson: wilson_interval(successes, trials, Z95),
        mean_frobenius_err: mean(&errs),
        mean_iters: mean(&iters),
        failures: trials - ok.len(),
        mean_baseline_err: mean(&base),
        wall_time: outcomes.iter().map(|(_, d)| *d).sum(),
    }
}

/// Runs every (cell, trial) on a pool of `jobs` threads. Results do not
/// depend on `jobs`.
pub fn run_sweep(grid: &ExperimentGrid, jobs: usize) -> CliResult<Vec<CellResult>> {
    grid.validate()?;
    let cells = grid.cells();
    let tasks: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..grid.trials).map(move |t| (c, t))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Args(format!("thread pool: {e}")))?;
    let outcomes: Vec<(TrialOutcome, Duration)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, t)| {
                let cell = cells[c];
                let start = Instant::now();
                let out = run_trial(grid.mode, cell.p, cell.r, cell.theta, cell.n, grid.seed(c, t));
                (out, start.elapsed())
            })
            .collect()
    });
    Ok(cells
        .iter()
        .zip(outcomes.chunks(grid.trials))
        .map(|(cell, chunk)| aggregate(*cell, chunk))
        .collect())
}

pub const CSV_HEADER: &str =
    "p,r,theta,n,trials,successes,success_rate,wilson_lo,wilson_hi,mean_err,mean_iters,failures,mean_baseline_err";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn to_csv(results: &[CellResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.params.p,
            c.params.r,
            c.params.theta,
            c.params.n,
            c.trials,
            c.successes,
            c.success_rate,
            c.wilson.0,
            c.wilson.1,
            opt(c.mean_frobenius_err),
            opt(c.mean_iters),
            c.failures,
            opt(c.mean_baseline_err)
        );
    }
    out
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub r: usize,
    pub theta: f64,
    pub n: usize,
    pub wall_time_secs: f64,
}

pub fn timings(results: &[CellResult]) -> Vec<Timing> {
    results
        .iter()
        .map(|c| Timing {
            r: c.params.r,
            theta: c.params.theta,
            n: c.params.n,
            wall_time_secs: c.wall_time.as_secs_f64(),
        })
        .collect()
}

/// Heatmap with r on the vertical axis and θ (or n when only n varies) on
/// the horizontal one. Full-matrix sweeps show the mean error, the other
/// modes the success rate. With both θ and n varying, the first n is shown.
pub fn heatmap(grid: &ExperimentGrid, results: &[CellResult], timestamp: Option<&str>) -> String {
    let by_n = grid.theta_values.len() == 1 && grid.n_values.len() > 1;
    let show_err = grid.mode == SweepMode::FullMatrix;
    let pick = |c: &CellResult| if show_err { c.mean_frobenius_err.unwrap_or(f64::NAN) } else { c.success_rate };
    let mut values = Vec::new();
    for &r in &grid.r_values {
        let row: Vec<f64> = results
            .iter()
            .filter(|c| c.params.r == r)
            .filter(|c| if by_n { true } else { c.params.n == grid.n_values[0] })
            .map(pick)
            .collect();
        values.push(row);
    }
    let range = if show_err {
        let finite = values.iter().flatten().copied().filter(|v| v.is_finite());
        let hi = finite.fold(0.0f64, f64::max);
        (0.0, if hi > 0.0 { hi } else { 1.0 })
    } else {
        (0.0, 1.0)
    };
    let x_ticks = if by_n {
        grid.n_values.iter().map(|n| n.to_string()).collect()
    } else {
        grid.theta_values.iter().map(|t| format!("{t}")).collect()
    };
    let title = format!(
        "{} (p = {}, {} trials)",
        if show_err { "mean normalized error" } else { "success rate" },
        grid.p,
        grid.trials
    );
    Heatmap {
        title: &title,
        x_label: if by_n { "n" } else { "θ" },
        y_label: "r",
        x_ticks,
        y_ticks: grid.r_values.iter().map(|r| r.to_string()).collect(),
        values,
        range,
    }
    .render(timestamp)
}
