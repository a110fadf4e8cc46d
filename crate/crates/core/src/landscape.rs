//! Region classification, curvature witnesses and the critical-point
//! taxonomy of the population objective.
//!
//! With `ζ = Aᵀq`, the sphere splits by `‖ζ‖∞²` into a flat region `R0`
//! (`≤ c⋆`), a region `R1` near the columns (`≥ C⋆`) and the band `R2` in
//! between, where the direction of the largest `|ζ_i|` carries negative
//! curvature.

use alloc::vec::Vec;

use libm::sqrt;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, Error, Result};
use crate::linalg::project_tangent;
use crate::model::{seeded_rng, SphereVector};
use crate::objective::{linf_sq, l4_pow4, top_abs_indices, Objective, ObjectiveKind};
use crate::solver::{min_tangent_eigenpair, solve, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    R0,
    R1,
    R2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionLabel {
    pub label: Region,
    pub c_star: f64,
    #[serde(rename = "C_star")]
    pub big_c_star: f64,
    pub zeta_inf_sq: f64,
}

/// `c⋆ = 1/(2r)` and `C⋆ = 1/4`.
pub fn default_thresholds(r: usize) -> (f64, f64) {
    (0.5 / r as f64, 0.25)
}

fn check_thresholds(c_star: f64, big_c_star: f64) -> Result<()> {
    if !(0.0 <= c_star && c_star <= big_c_star && big_c_star < 1.0) {
        return Err(param_err!("need 0 ≤ c⋆ ≤ C⋆ < 1, got c⋆={c_star}, C⋆={big_c_star}"));
    }
    Ok(())
}

fn region_of(zeta_inf_sq: f64, c_star: f64, big_c_star: f64) -> Region {
    if zeta_inf_sq <= c_star {
        Region::R0
    } else if zeta_inf_sq >= big_c_star {
        Region::R1
    } else {
        Region::R2
    }
}

pub fn classify_region(a: &DMatrix<f64>, q: &SphereVector, c_star: f64, big_c_star: f64) -> Result<RegionLabel> {
    check_thresholds(c_star, big_c_star)?;
    let zeta = crate::objective::zeta(a, q.as_vector())?;
    let zeta_inf_sq = linf_sq(&zeta);
    Ok(RegionLabel {
        label: region_of(zeta_inf_sq, c_star, big_c_star),
        c_star,
        big_c_star,
        zeta_inf_sq,
    })
}

/// `√(θ/(1−θ)) < 1 − 3θ`.
pub fn theta_condition_check(theta: f64) -> bool {
    theta > 0.0 && theta < 1.0 && sqrt(theta / (1.0 - theta)) < 1.0 - 3.0 * theta
}

/// `α = ‖ζ‖₄⁴ + (θ/(1−θ))(‖ζ‖₂⁴ − ‖ζ‖₂²)`.
pub fn alpha(zeta: &DVector<f64>, theta: f64) -> f64 {
    let l2 = zeta.norm_squared();
    l4_pow4(zeta) + theta / (1.0 - theta) * (l2 * l2 - l2)
}

/// The bracket `‖ζ‖₄⁴(1 − θ/(4(1−θ)C⋆²)) ≤ α ≤ ‖ζ‖₄⁴`, valid in `R1(C⋆)`
/// when `C⋆² > θ/(4(1−θ))`.
pub fn alpha_bounds(zeta: &DVector<f64>, theta: f64, big_c_star: f64) -> (f64, f64) {
    let l4 = l4_pow4(zeta);
    (l4 * (1.0 - theta / (4.0 * (1.0 - theta) * big_c_star * big_c_star)), l4)
}

/// `vᵀ Hess v` for `v = a_i`, `i = argmax |ζ_i|`, under the given
/// objective (population or sample). Returns `(v, value)`.
pub fn curvature_witness(obj: &Objective, a: &DMatrix<f64>, q: &SphereVector) -> Result<(DVector<f64>, f64)> {
    let zeta = crate::objective::zeta(a, q.as_vector())?;
    if obj.dim() != a.nrows() {
        return Err(dim_err!("objective and A disagree on the ambient dimension"));
    }
    let i = top_abs_indices(&zeta, 1)[0];
    let v = a.column(i).into_owned();
    let value = v.dot(&obj.hess_vec(q, &v));
    Ok((v, value))
}

/// Population witness for semi-orthogonal `A`.
pub fn negative_curvature_witness(a: &DMatrix<f64>, q: &SphereVector, theta: f64) -> Result<(DVector<f64>, f64)> {
    let obj = Objective::new(ObjectiveKind::PopulationOrth { theta }, a.clone())?;
    curvature_witness(&obj, a, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalCase {
    NearZero,
    SingleSpike,
    MultiSpike,
}

#[derive(Debug, Clone)]
pub struct CriticalPointReport {
    pub q: SphereVector,
    pub alpha: f64,
    pub grad_norm: f64,
    pub case: CriticalCase,
    /// Indices with `|ζ_i| ≥ √α / 2`.
    pub spikes: Vec<usize>,
    /// Whether `α` matches its closed form for the case (`1` for one
    /// spike, `1/k` for `k` spikes) within `10·tol`.
    pub alpha_consistent: bool,
    /// For `MultiSpike`: unit tangent `v` in the span of two spike columns
    /// and `vᵀ Hess f v`.
    pub curvature_witness: Option<(DVector<f64>, f64)>,
}

/// Classifies an approximate critical point of the population objective.
pub fn critical_point_taxonomy(a: &DMatrix<f64>, q: &SphereVector, theta: f64, tol: f64) -> Result<CriticalPointReport> {
    if !(theta >= 0.0 && theta < 1.0) {
        return Err(param_err!("theta must lie in [0, 1), got {theta}"));
    }
    let obj = Objective::new(ObjectiveKind::PopulationOrth { theta }, a.clone())?;
    let grad_norm = obj.grad(q).norm();
    if grad_norm > tol {
        return Err(Error::NotCritical { grad_norm, tol });
    }
    let zeta = crate::objective::zeta(a, q.as_vector())?;
    let alpha = alpha(&zeta, theta);
    if alpha <= tol {
        return Ok(CriticalPointReport {
            q: q.clone(),
            alpha,
            grad_norm,
            case: CriticalCase::NearZero,
            spikes: Vec::new(),
            alpha_consistent: true,
            curvature_witness: None,
        });
    }
    let cut = sqrt(alpha) / 2.0;
    let spikes: Vec<usize> = (0..zeta.len()).filter(|&i| zeta[i].abs() >= cut).collect();
    let k = spikes.len();
    let alpha_consistent = (alpha - 1.0 / k as f64).abs() <= 10.0 * tol;
    let (case, curvature_witness) = if k == 1 {
        (CriticalCase::SingleSpike, None)
    } else {
        let (i, j) = (spikes[0], spikes[1]);
        let dir = a.column(i) * zeta[i].signum() - a.column(j) * zeta[j].signum();
        let v = project_tangent(q.as_vector(), &dir);
        let n = v.norm();
        let witness = (n > 0.0).then(|| {
            let v = v / n;
            let value = v.dot(&obj.hess_vec(q, &v));
            (v, value)
        });
        (CriticalCase::MultiSpike, witness)
    };
    Ok(CriticalPointReport {
        q: q.clone(),
        alpha,
        grad_norm,
        case,
        spikes,
        alpha_consistent,
        curvature_witness,
    })
}

/// `(Σ_{j∈S} s_j a_j)/√|S|`: the balanced critical point on a subset of
/// orthonormal columns.
pub fn balanced_point(a: &DMatrix<f64>, subset: &[usize], signs: &[f64]) -> Result<SphereVector> {
    if subset.is_empty() || subset.len() != signs.len() {
        return Err(param_err!("subset and signs must be nonempty and of equal length"));
    }
    let mut v = DVector::zeros(a.nrows());
    for (&j, &s) in subset.iter().zip(signs) {
        v += a.column(j) * s;
    }
    SphereVector::normalize(v)
}

/// Uniform rejection sampler on the sphere restricted to
/// `lo < ‖Aᵀq‖∞² < hi`. Returns `None` after `max_tries` rejections.
pub fn sample_band<R: Rng + ?Sized>(
    a: &DMatrix<f64>,
    lo: f64,
    hi: f64,
    rng: &mut R,
    max_tries: usize,
) -> Option<SphereVector> {
    for _ in 0..max_tries {
        let q = SphereVector::random(a.nrows(), rng);
        let x = linf_sq(&a.tr_mul(q.as_vector()));
        if x > lo && x < hi {
            return Some(q);
        }
    }
    None
}

/// Aggregates of a sampled landscape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandscapeSurvey {
    pub theta: f64,
    pub c_star: f64,
    #[serde(rename = "C_star")]
    pub big_c_star: f64,
    pub samples: usize,
    pub region_counts: RegionCounts,
    /// Quantiles (0, 0.1, 0.5, 0.9, 1) of the smallest tangent eigenvalue
    /// of the population Hessian, per region.
    pub curvature_quantiles: RegionQuantiles,
    /// Fraction of `R2` samples with a negative witness value.
    pub r2_negative_witness_fraction: Option<f64>,
    pub taxonomy: TaxonomyCounts,
    /// `(‖ζ‖∞², min tangent curvature)` per sample.
    pub points: Vec<(f64, f64)>,
    pub outside_theory: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCounts {
    pub r0: usize,
    pub r1: usize,
    pub r2: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RegionQuantiles {
    pub r0: Option<[f64; 5]>,
    pub r1: Option<[f64; 5]>,
    pub r2: Option<[f64; 5]>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyCounts {
    pub near_zero: usize,
    pub single_spike: usize,
    pub multi_spike: usize,
    /// Solver endpoints that were not certified critical.
    pub unresolved: usize,
}

/// Whether `(θ, C⋆)` lies outside the parameter ranges covered by the
/// curvature guarantees (`θ` condition and `C⋆ ≤ 1/4` with
/// `C⋆² > θ/(4(1−θ))`).
pub fn outside_theory(theta: f64, big_c_star: f64) -> bool {
    !theta_condition_check(theta) || big_c_star > 0.25 || big_c_star * big_c_star <= theta / (4.0 * (1.0 - theta))
}

fn quantiles(mut v: Vec<f64>) -> Option<[f64; 5]> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let at = |p: f64| v[((v.len() - 1) as f64 * p + 0.5) as usize];
    Some([at(0.0), at(0.1), at(0.5), at(0.9), at(1.0)])
}

/// Samples `samples` uniform points, classifies them and measures their
/// curvature; then runs the population solver from `starts` random points
/// and tallies the critical-point cases of the endpoints.
pub fn survey(
    a: &DMatrix<f64>,
    theta: f64,
    c_star: f64,
    big_c_star: f64,
    samples: usize,
    starts: usize,
    seed: u64,
) -> Result<LandscapeSurvey> {
    check_thresholds(c_star, big_c_star)?;
    if samples == 0 {
        return Err(Error::Empty("sample budget is zero".into()));
    }
    let obj = Objective::new(ObjectiveKind::PopulationOrth { theta }, a.clone())?;
    let mut rng = seeded_rng(seed, 0x5A);
    let mut counts = RegionCounts::default();
    let mut curv: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut r2_negative = 0usize;
    let mut points = Vec::with_capacity(samples);
    for _ in 0..samples {
        let q = SphereVector::random(a.nrows(), &mut rng);
        let x = linf_sq(&a.tr_mul(q.as_vector()));
        let (lambda, _) = min_tangent_eigenpair(obj.hess_operator(&q), &q);
        points.push((x, lambda));
        let slot = match region_of(x, c_star, big_c_star) {
            Region::R0 => {
                counts.r0 += 1;
                0
            }
            Region::R1 => {
                counts.r1 += 1;
                1
            }
            Region::R2 => {
                counts.r2 += 1;
                if curvature_witness(&obj, a, &q)?.1 < 0.0 {
                    r2_negative += 1;
                }
                2
            }
        };
        curv[slot].push(lambda);
    }
    let [c0, c1, c2] = curv;
    let mut taxonomy = TaxonomyCounts::default();
    let opts = SolverOptions::default();
    for _ in 0..starts {
        let q0 = SphereVector::random(a.nrows(), &mut rng);
        let trace = solve(&obj, &q0, &opts)?;
        match critical_point_taxonomy(a, &trace.final_q, theta, 1e-6) {
            Ok(rep) => match rep.case {
                CriticalCase::NearZero => taxonomy.near_zero += 1,
                CriticalCase::SingleSpike => taxonomy.single_spike += 1,
                CriticalCase::MultiSpike => taxonomy.multi_spike += 1,
            },
            Err(_) => taxonomy.unresolved += 1,
        }
    }
    Ok(LandscapeSurvey {
        theta,
        c_star,
        big_c_star,
        samples,
        region_counts: counts,
        curvature_quantiles: RegionQuantiles {
            r0: quantiles(c0),
            r1: quantiles(c1),
            r2: quantiles(c2),
        },
        r2_negative_witness_fraction: (counts.r2 > 0).then(|| r2_negative as f64 / counts.r2 as f64),
        taxonomy,
        points,
        outside_theory: outside_theory(theta, big_c_star),
    })
}
