//! Problem dimensions, seeded synthetic data and ground-truth bookkeeping.
//!
//! Data follow `Y = A·X` with `A` (p × r) of full column rank and unit
//! operator norm, and `X` (r × n) Bernoulli(θ)–Gaussian(0, σ²).
//!
//! Randomness comes from ChaCha8 seeded with a `u64`; `A` and `X` draw from
//! different ChaCha streams so one seed can drive both. Gaussians use the
//! ziggurat sampler of `rand_distr::StandardNormal`. Output is bitwise
//! reproducible for a given build of this crate.

use alloc::vec::Vec;

use libm::sqrt;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, Error, Result};
use crate::linalg::{self, ThinSvd};

const STREAM_A: u64 = 0xA;
const STREAM_X: u64 = 0xB;

/// Tolerance on `‖A‖_op = 1` and on `AᵀA = I` for semi-orthogonal inputs.
pub const MIXING_TOL: f64 = 1e-10;
/// Tolerance on `‖q‖₂ = 1`.
pub const SPHERE_TOL: f64 = 1e-12;

/// Seeded generator for the given logical stream.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `(p, r, n)` with `r < min(p, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemDims {
    pub p: usize,
    pub r: usize,
    pub n: usize,
}

impl ProblemDims {
    pub fn new(p: usize, r: usize, n: usize) -> Result<Self> {
        if p == 0 || r == 0 || n == 0 {
            return Err(dim_err!("p, r, n must be positive (got p={p}, r={r}, n={n})"));
        }
        if r >= p.min(n) {
            return Err(dim_err!("rank r={r} must be smaller than min(p={p}, n={n})"));
        }
        Ok(ProblemDims { p, r, n })
    }
}

/// Bernoulli rate θ ∈ (0, 1] and Gaussian standard deviation σ > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityModel {
    pub theta: f64,
    pub sigma: f64,
}

impl SparsityModel {
    pub fn new(theta: f64, sigma: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(param_err!("theta must lie in (0, 1], got {theta}"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(param_err!("sigma must be positive, got {sigma}"));
        }
        Ok(SparsityModel { theta, sigma })
    }

    /// σ = 1.
    pub fn with_theta(theta: f64) -> Result<Self> {
        Self::new(theta, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingKind {
    /// `AᵀA = I_r`.
    SemiOrthogonal,
    /// Rank r with unit operator norm.
    FullColumnRank,
}

/// Mixing matrix `A` with unit operator norm and full column rank.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    entries: DMatrix<f64>,
    kind: MixingKind,
}

impl MixingMatrix {
    /// Validates `entries` against the invariants of `kind`.
    pub fn from_matrix(entries: DMatrix<f64>, kind: MixingKind) -> Result<Self> {
        let (p, r) = entries.shape();
        if r == 0 || r > p {
            return Err(dim_err!("mixing matrix must be tall with r ≥ 1, got {p}×{r}"));
        }
        let sv = linalg::singular_values(&entries);
        let top = sv.max();
        if (top - 1.0).abs() > MIXING_TOL {
            return Err(param_err!("operator norm must be 1, got {top}"));
        }
        if sv.min() <= 0.0 {
            return Err(param_err!("mixing matrix is rank deficient"));
        }
        if kind == MixingKind::SemiOrthogonal {
            let defect = linalg::orthonormality_defect(&entries);
            if defect > MIXING_TOL * sqrt(r as f64) {
                return Err(param_err!("AᵀA deviates from the identity by {defect:e}"));
            }
        }
        Ok(MixingMatrix { entries, kind })
    }

    /// Rescales `entries` to unit operator norm; the kind is detected from
    /// `AᵀA`.
    pub fn normalized(entries: DMatrix<f64>) -> Result<Self> {
        let top = linalg::operator_norm(&entries);
        if !(top > 0.0) || !top.is_finite() {
            return Err(Error::Degenerate("mixing matrix is zero or non-finite".into()));
        }
        let entries = entries / top;
        let r = entries.ncols();
        let kind = if linalg::orthonormality_defect(&entries) <= MIXING_TOL * sqrt(r as f64) {
            MixingKind::SemiOrthogonal
        } else {
            MixingKind::FullColumnRank
        };
        Self::from_matrix(entries, kind)
    }

    /// Seeded generator requiring only `1 ≤ r ≤ p`. [`generate_a`] adds
    /// the full problem-dimension check.
    pub fn generate(p: usize, r: usize, kind: MixingKind, seed: u64) -> Result<Self> {
        if r == 0 || r > p {
            return Err(dim_err!("need 1 ≤ r ≤ p, got p={p}, r={r}"));
        }
        let mut rng = seeded_rng(seed, STREAM_A);
        let gaussian = DMatrix::from_fn(p, r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let entries = match kind {
            MixingKind::FullColumnRank => {
                let top = linalg::operator_norm(&gaussian);
                gaussian / top
            }
            MixingKind::SemiOrthogonal => ThinSvd::new(&gaussian).u,
        };
        Self::from_matrix(entries, kind)
    }

    pub fn kind(&self) -> MixingKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.entries.column(j).into_owned()
    }

    /// Thin SVD `A = U_A D_A V_Aᵀ`.
    pub fn svd(&self) -> ThinSvd {
        ThinSvd::new(&self.entries)
    }

    /// The semi-orthogonal factor `Ā = U_A V_Aᵀ` targeted after
    /// preconditioning.
    pub fn orthogonal_factor(&self) -> DMatrix<f64> {
        let svd = self.svd();
        &svd.u * &svd.v_t
    }
}

/// Sparse coefficient matrix `X = B ∘ Z` together with its support `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoefficients {
    entries: DMatrix<f64>,
    support: DMatrix<bool>,
}

impl SparseCoefficients {
    /// Wraps a dense matrix; the support is its nonzero pattern.
    pub fn from_dense(entries: DMatrix<f64>) -> Self {
        let support = entries.map(|x| x != 0.0);
        SparseCoefficients { entries, support }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn support(&self) -> &DMatrix<bool> {
        &self.support
    }

    pub fn nnz(&self) -> usize {
        self.support.iter().filter(|&&b| b).count()
    }
}

/// Seeded `A` for a validated problem.
pub fn generate_a(dims: ProblemDims, kind: MixingKind, seed: u64) -> Result<MixingMatrix> {
    let dims = ProblemDims::new(dims.p, dims.r, dims.n)?;
    MixingMatrix::generate(dims.p, dims.r, kind, seed)
}

/// Seeded Bernoulli–Gaussian `X` (r × n).
pub fn generate_x(dims: ProblemDims, model: SparsityModel, seed: u64) -> Result<SparseCoefficients> {
    let model = SparsityModel::new(model.theta, model.sigma)?;
    let mut rng = seeded_rng(seed, STREAM_X);
    let mut entries = DMatrix::zeros(dims.r, dims.n);
    let mut support = DMatrix::from_element(dims.r, dims.n, false);
    // Column-major fill so that a prefix of columns is stable across n.
    for j in 0..dims.n {
        for i in 0..dims.r {
            let on = rng.random::<f64>() < model.theta;
            let z: f64 = rng.sample(StandardNormal);
            if on {
                entries[(i, j)] = model.sigma * z;
                support[(i, j)] = true;
            }
        }
    }
    Ok(SparseCoefficients { entries, support })
}

/// `Y = A·X`.
pub fn synthesize(a: &MixingMatrix, x: &SparseCoefficients) -> Result<DMatrix<f64>> {
    if a.ncols() != x.matrix().nrows() {
        return Err(dim_err!(
            "inner dimensions disagree: A is {}×{}, X is {}×{}",
            a.nrows(),
            a.ncols(),
            x.matrix().nrows(),
            x.matrix().ncols()
        ));
    }
    Ok(a.matrix() * x.matrix())
}

/// A point on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereVector(DVector<f64>);

impl SphereVector {
    /// Accepts `v` if it already has unit norm within [`SPHERE_TOL`].
    pub fn new(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > SPHERE_TOL || !norm.is_finite() {
            return Err(Error::NotUnitNorm(norm));
        }
        Ok(SphereVector(v))
    }

    /// Normalizes a nonzero vector.
    pub fn normalize(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Degenerate("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(SphereVector(v / norm))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::normalize(DVector::from_column_slice(v))
    }

    /// Uniform sample on `S^{dim−1}`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            if let Ok(q) = Self::normalize(v) {
                return q;
            }
        }
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        SphereVector(v)
    }

    /// Wraps `v` without checking its norm. Evaluators that need a unit
    /// point still verify it.
    pub fn from_unit_unchecked(v: DVector<f64>) -> Self {
        SphereVector(v)
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Signed permutation `P`: column `j` of `M·P` is `signs[j] · M[:, perm[j]]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedPermutation {
    perm: Vec<usize>,
    signs: Vec<i8>,
}

impl SignedPermutation {
    pub fn new(perm: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let r = perm.len();
        if signs.len() != r {
            return Err(dim_err!("perm has {r} entries but signs has {}", signs.len()));
        }
        let mut seen = alloc::vec![false; r];
        for &k in &perm {
            if k >= r || seen[k] {
                return Err(param_err!("{perm:?} is not a permutation of 0..{r}"));
            }
            seen[k] = true;
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(param_err!("signs must be ±1, got {signs:?}"));
        }
        Ok(SignedPermutation { perm, signs })
    }

    pub fn identity(r: usize) -> Self {
        SignedPermutation {
            perm: (0..r).collect(),
            signs: alloc::vec![1; r],
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Dense r × r matrix with `P[perm[j], j] = signs[j]`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let r = self.len();
        let mut m = DMatrix::zeros(r, r);
        for (j, (&k, &s)) in self.perm.iter().zip(&self.signs).enumerate() {
            m[(k, j)] = f64::from(s);
        }
        m
    }

    /// The product `self · next`, i.e. applying `self` first and `next`
    /// second.
    pub fn then(&self, next: &SignedPermutation) -> SignedPermutation {
        let perm = next.perm.iter().map(|&k| self.perm[k]).collect();
        let signs = next
            .perm
            .iter()
            .zip(&next.signs)
            .map(|(&k, &s)| s * self.signs[k])
            .collect();
        SignedPermutation { perm, signs }
    }

    /// `M · P`.
    pub fn apply(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.ncols() != self.len() {
            return Err(dim_err!("matrix has {} columns, permutation has {}", m.ncols(), self.len()));
        }
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for (j, (&k, &s)) in self.perm.iter().zip(&self.signs).enumerate() {
            out.set_column(j, &(m.column(k) * f64::from(s)));
        }
        Ok(out)
    }
}

/// `A · P` as a mixing matrix (operator norm and kind are preserved).
pub fn apply_signed_permutation(a: &MixingMatrix, p: &SignedPermutation) -> Result<MixingMatrix> {
    Ok(MixingMatrix {
        entries: p.apply(a.matrix())?,
        kind: a.kind,
    })
}
