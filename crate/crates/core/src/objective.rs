//! Objectives on the sphere and their Riemannian derivatives.
//!
//! Every objective here is a quartic form in `ζ = Mᵀq` for a data matrix
//! `M` (the samples `Y`, the preconditioned `Ȳ`, or the mixing matrix `A`
//! for the population objective):
//!
//! ```text
//! f(q) = c₄ ‖ζ‖₄⁴ + c₂₂ ‖ζ‖₂⁴
//! ```
//!
//! The Riemannian gradient is `P ∇f` and the Riemannian Hessian is
//! `P (∇²f − ⟨∇f, q⟩ I) P`, with `P = I − qqᵀ`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, Error, Result};
use crate::model::{SphereVector, SPHERE_TOL};

/// Which objective to evaluate, with its calibration constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// `−(12θσ⁴n)⁻¹ ‖Yᵀq‖₄⁴` on samples with semi-orthogonal mixing.
    SampleOrth { theta: f64, sigma: f64 },
    /// `−(θn/12) ‖Ȳᵀq‖₄⁴` on preconditioned samples.
    SampleGeneral { theta: f64 },
    /// `−¼[(1−θ)‖Aᵀq‖₄⁴ + θ‖Aᵀq‖₂⁴]`; the data matrix is `A`.
    PopulationOrth { theta: f64 },
    /// `−‖Yᵀq‖₄⁴`.
    RawL4,
}

impl ObjectiveKind {
    fn validate(&self) -> Result<()> {
        let theta_ok = |t: f64| t > 0.0 && t <= 1.0;
        match *self {
            ObjectiveKind::SampleOrth { theta, sigma } => {
                if !theta_ok(theta) || !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(param_err!("invalid (theta, sigma) = ({theta}, {sigma})"));
                }
            }
            ObjectiveKind::SampleGeneral { theta } => {
                if !theta_ok(theta) {
                    return Err(param_err!("theta must lie in (0, 1], got {theta}"));
                }
            }
            // θ = 0 is a legitimate limit of the population formula.
            ObjectiveKind::PopulationOrth { theta } => {
                if !(0.0..=1.0).contains(&theta) {
                    return Err(param_err!("theta must lie in [0, 1], got {theta}"));
                }
            }
            ObjectiveKind::RawL4 => {}
        }
        Ok(())
    }

    /// `(c₄, c₂₂)` for a data matrix with `n` columns.
    fn coefficients(&self, n: usize) -> (f64, f64) {
        let n = n as f64;
        match *self {
            ObjectiveKind::SampleOrth { theta, sigma } => {
                let s2 = sigma * sigma;
                (-1.0 / (12.0 * theta * s2 * s2 * n), 0.0)
            }
            ObjectiveKind::SampleGeneral { theta } => (-theta * n / 12.0, 0.0),
            ObjectiveKind::PopulationOrth { theta } => (-(1.0 - theta) / 4.0, -theta / 4.0),
            ObjectiveKind::RawL4 => (-1.0, 0.0),
        }
    }

    pub fn is_population(&self) -> bool {
        matches!(self, ObjectiveKind::PopulationOrth { .. })
    }
}

/// Value, Riemannian gradient and tangent Hessian at a point.
#[derive(Debug, Clone)]
pub struct TangentEval {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess_operator: DMatrix<f64>,
    pub base: SphereVector,
}

/// An objective bound to its data matrix (`Y`, `Ȳ` or `A`, one column per
/// sample or per atom).
#[derive(Debug, Clone)]
pub struct Objective {
    kind: ObjectiveKind,
    data: DMatrix<f64>,
    c4: f64,
    c22: f64,
}

/// Cached evaluation used by the solver.
#[derive(Debug, Clone)]
pub(crate) struct Evaluated {
    pub value: f64,
    pub grad: DVector<f64>,
    pub zeta: DVector<f64>,
    pub l2: f64,
}

/// Point-dependent quantities shared by the derivative formulas.
struct Local {
    zeta: DVector<f64>,
    l4: f64,
    l2: f64,
}

impl Objective {
    pub fn new(kind: ObjectiveKind, data: DMatrix<f64>) -> Result<Self> {
        kind.validate()?;
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::Empty("objective data matrix".into()));
        }
        let (c4, c22) = kind.coefficients(data.ncols());
        Ok(Objective { kind, data, c4, c22 })
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Ambient dimension of `q`.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    fn check(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.dim() {
            return Err(dim_err!("q has length {}, data has {} rows", q.len(), self.dim()));
        }
        let norm = q.norm();
        if (norm - 1.0).abs() > SPHERE_TOL {
            return Err(Error::NotUnitNorm(norm));
        }
        Ok(())
    }

    fn local(&self, q: &DVector<f64>) -> Local {
        let zeta = self.data.tr_mul(q);
        let mut l4 = 0.0;
        let mut l2 = 0.0;
        for z in zeta.iter() {
            let z2 = z * z;
            l2 += z2;
            l4 += z2 * z2;
        }
        Local { zeta, l4, l2 }
    }

    fn value_of(&self, loc: &Local) -> f64 {
        self.c4 * loc.l4 + self.c22 * loc.l2 * loc.l2
    }

    /// Euclidean gradient.
    fn egrad(&self, loc: &Local) -> DVector<f64> {
        let w = loc.zeta.map(|z| 4.0 * self.c4 * z * z * z + 4.0 * self.c22 * loc.l2 * z);
        &self.data * w
    }

    /// `⟨∇f, q⟩ = 4f(q)` since `f` is homogeneous of degree four.
    fn radial(&self, loc: &Local) -> f64 {
        4.0 * self.value_of(loc)
    }

    pub fn value(&self, q: &SphereVector) -> f64 {
        self.value_unchecked(q.as_vector())
    }

    /// Value at any vector of the ambient space (no unit-norm check).
    pub fn value_unchecked(&self, q: &DVector<f64>) -> f64 {
        self.value_of(&self.local(q))
    }

    pub fn value_and_grad(&self, q: &SphereVector) -> (f64, DVector<f64>) {
        let q = q.as_vector();
        let loc = self.local(q);
        (self.value_of(&loc), tangent_part(q, self.egrad(&loc)))
    }

    pub fn grad(&self, q: &SphereVector) -> DVector<f64> {
        self.value_and_grad(q).1
    }

    /// Dense tangent Hessian `P (∇²f − ⟨∇f, q⟩ I) P`.
    pub fn hess(&self, q: &SphereVector) -> DMatrix<f64> {
        let q = q.as_vector();
        let loc = self.local(q);
        let p = self.dim();
        let mut scaled = self.data.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            let z = loc.zeta[k];
            col *= 12.0 * self.c4 * z * z;
        }
        let mut e = scaled * self.data.transpose();
        if self.c22 != 0.0 {
            let mg = &self.data * &loc.zeta;
            let gram = &self.data * self.data.transpose();
            e += gram * (4.0 * self.c22 * loc.l2) + (&mg * mg.transpose()) * (8.0 * self.c22);
        }
        let radial = self.radial(&loc);
        for i in 0..p {
            e[(i, i)] -= radial;
        }
        sandwich(&e, q)
    }

    /// Hessian-vector product `Hess·v` in O(pn) without forming the matrix.
    pub fn hess_vec(&self, q: &SphereVector, v: &DVector<f64>) -> DVector<f64> {
        let q = q.as_vector();
        let loc = self.local(q);
        self.hess_vec_local(q, &loc, v)
    }

    fn hess_vec_local(&self, q: &DVector<f64>, loc: &Local, v: &DVector<f64>) -> DVector<f64> {
        let pv = v - q * q.dot(v);
        let mv = self.data.tr_mul(&pv);
        let mut w = mv.zip_map(&loc.zeta, |m, z| 12.0 * self.c4 * z * z * m);
        if self.c22 != 0.0 {
            let zm = loc.zeta.dot(&mv);
            w += &mv * (4.0 * self.c22 * loc.l2) + &loc.zeta * (8.0 * self.c22 * zm);
        }
        let mut out = &self.data * w;
        out.axpy(-self.radial(loc), &pv, 1.0);
        let radial = q.dot(&out);
        out.axpy(-radial, q, 1.0);
        out
    }

    /// Reusable Hessian-vector operator at a fixed point.
    pub fn hess_operator<'a>(&'a self, q: &'a SphereVector) -> impl Fn(&DVector<f64>) -> DVector<f64> + 'a {
        let loc = self.local(q.as_vector());
        move |v| self.hess_vec_local(q.as_vector(), &loc, v)
    }

    /// `f(q + dq) − f(q)` without forming both values, so tiny decrements
    /// are not lost to cancellation. `q + dq` need not be unit.
    pub fn value_difference(&self, q: &SphereVector, dq: &DVector<f64>) -> f64 {
        self.value_delta(&self.evaluate(q), dq).0
    }

    /// Value, Riemannian gradient and cached `ζ` at `q`.
    pub(crate) fn evaluate(&self, q: &SphereVector) -> Evaluated {
        let qv = q.as_vector();
        let loc = self.local(qv);
        Evaluated {
            value: self.value_of(&loc),
            grad: tangent_part(qv, self.egrad(&loc)),
            zeta: loc.zeta,
            l2: loc.l2,
        }
    }

    /// `f(q + dq) − f(q)` computed from `δ = Mᵀdq` so that small decrements
    /// keep their relative accuracy. Returns the difference and the new `ζ`.
    pub(crate) fn value_delta(&self, at: &Evaluated, dq: &DVector<f64>) -> (f64, DVector<f64>) {
        let delta = self.data.tr_mul(dq);
        let mut d4 = 0.0;
        let mut d2 = 0.0;
        for (&z, &d) in at.zeta.iter().zip(delta.iter()) {
            let zn = z + d;
            let sq_diff = d * (2.0 * z + d);
            d2 += sq_diff;
            d4 += sq_diff * (zn * zn + z * z);
        }
        let mut diff = self.c4 * d4;
        if self.c22 != 0.0 {
            diff += self.c22 * d2 * (2.0 * at.l2 + d2);
        }
        (diff, at.zeta.clone() + delta)
    }

    /// Full tangent evaluation.
    pub fn eval(&self, q: &SphereVector) -> TangentEval {
        let (value, grad) = self.value_and_grad(q);
        TangentEval {
            value,
            grad,
            hess_operator: self.hess(q),
            base: q.clone(),
        }
    }
}

/// `P g`, projected twice: the radial part of `∇f` is `4f`, so a single
/// pass leaves a residual of order `ε·|f|` that swamps small gradients.
fn tangent_part(q: &DVector<f64>, mut g: DVector<f64>) -> DVector<f64> {
    for _ in 0..2 {
        let radial = q.dot(&g);
        g.axpy(-radial, q, 1.0);
    }
    g
}

/// `P M P` with `P = I − qqᵀ`, symmetrized.
fn sandwich(m: &DMatrix<f64>, q: &DVector<f64>) -> DMatrix<f64> {
    let mq = m * q;
    let qmq = q.dot(&mq);
    // P M P = M − q(Mq)ᵀ − (Mq)qᵀ + (qᵀMq) qqᵀ for symmetric M.
    let mut out = m.clone();
    out -= q * mq.transpose() + &mq * q.transpose();
    out += (q * q.transpose()) * qmq;
    let sym = (&out + out.transpose()) * 0.5;
    sym
}

pub fn eval_value(kind: ObjectiveKind, data: &DMatrix<f64>, q: &SphereVector) -> Result<f64> {
    let obj = Objective::new(kind, data.clone())?;
    obj.check(q.as_vector())?;
    Ok(obj.value(q))
}

pub fn eval_grad(kind: ObjectiveKind, data: &DMatrix<f64>, q: &SphereVector) -> Result<DVector<f64>> {
    let obj = Objective::new(kind, data.clone())?;
    obj.check(q.as_vector())?;
    Ok(obj.grad(q))
}

pub fn eval_hess(kind: ObjectiveKind, data: &DMatrix<f64>, q: &SphereVector) -> Result<DMatrix<f64>> {
    let obj = Objective::new(kind, data.clone())?;
    obj.check(q.as_vector())?;
    Ok(obj.hess(q))
}

/// `ζ = Aᵀq`.
pub fn zeta(a: &DMatrix<f64>, q: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != q.len() {
        return Err(dim_err!("A has {} rows, q has length {}", a.nrows(), q.len()));
    }
    Ok(a.tr_mul(q))
}

/// `‖v‖₄⁴`.
pub fn l4_pow4(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| {
        let x2 = x * x;
        x2 * x2
    }).sum()
}

/// `‖v‖∞²`.
pub fn linf_sq(v: &DVector<f64>) -> f64 {
    let m = v.amax();
    m * m
}

/// Indices of the `k` largest entries of `|v|`, in descending order.
pub fn top_abs_indices(v: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}
