//! Non-additive penalty catalog.
//!
//! Every penalty `E` here is a scaled norm or a Huber function of the
//! residual, optionally applied to its positive part only. Their conjugates
//! `E*` are indicators of compact dual domains `Λ`, plus a quadratic for the
//! Huber family, which makes `E*` strongly convex with modulus `1/L`:
//!
//! | `E(z)`                 | `E*(λ)`                    | `Λ`                 |
//! |------------------------|----------------------------|---------------------|
//! | `R‖z‖₂`                | `I_Λ(λ)`                   | `{‖λ‖₂ ≤ R}`        |
//! | `R‖z‖₁`                | `I_Λ(λ)`                   | `{‖λ‖_∞ ≤ R}`       |
//! | `R‖z‖_∞`               | `I_Λ(λ)`                   | `{‖λ‖₁ ≤ R}`        |
//! | `H_{R,L}(‖z‖₂)`        | `I_Λ(λ) + ‖λ‖₂²/(2L)`      | `{‖λ‖₂ ≤ R}`        |
//!
//! The asymmetric variants replace `z` by `[z]_+` and intersect `Λ` with the
//! nonnegative orthant.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm1, norm2, norm_inf, project_capped_simplex};

/// Relative slack allowed when testing membership in a dual domain.
pub const DOMAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyKind {
    ScaledNorm(NormKind),
    /// Huber function of the Euclidean norm with gradient-Lipschitz constant `smoothness`.
    HuberL2 { smoothness: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    kind: PenaltyKind,
    asymmetric: bool,
    r_lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallKind {
    L2,
    Linf,
    L1,
}

/// Dual domain `Λ`: a ball of the dual norm, optionally intersected with `ℝ^m_+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualDomain {
    pub ball: BallKind,
    pub radius: f64,
    pub nonneg: bool,
}

/// Dual variable `λ ∈ ℝ^m`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DualVector(Vec<f64>);

impl DualVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for DualVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for DualVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// `H_{r,s}(t) = ½·min{s t², r²/s} + r·[|t| − r/s]_+`
///
/// Quadratic with curvature `s` on `|t| ≤ r/s`, affine with slope `r` beyond.
pub fn huber(r: f64, s: f64, t: f64) -> f64 {
    let a = libm::fabs(t);
    0.5 * f64::min(s * a * a, r * r / s) + r * f64::max(a - r / s, 0.0)
}

/// `H'_{r,s}(t)` for `t ≥ 0`, i.e. `min{s t, r}`.
pub fn huber_derivative(r: f64, s: f64, t: f64) -> f64 {
    f64::min(s * t, r)
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind, r_lambda: f64, asymmetric: bool) -> Result<Self> {
        if !(r_lambda.is_finite() && r_lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "r_lambda must be positive and finite, got {r_lambda}"
            )));
        }
        if let PenaltyKind::HuberL2 { smoothness } = kind {
            if !(smoothness.is_finite() && smoothness > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "huber smoothness must be positive and finite, got {smoothness}"
                )));
            }
        }
        Ok(Self {
            kind,
            asymmetric,
            r_lambda,
        })
    }

    /// `R‖z‖_q`, symmetric.
    pub fn norm(q: NormKind, r_lambda: f64) -> Result<Self> {
        Self::new(PenaltyKind::ScaledNorm(q), r_lambda, false)
    }

    /// `H_{R,L}(‖z‖₂)`, symmetric.
    pub fn huber(r_lambda: f64, smoothness: f64) -> Result<Self> {
        Self::new(PenaltyKind::HuberL2 { smoothness }, r_lambda, false)
    }

    /// Same penalty restricted to the positive part of its argument.
    pub fn positive_part(self) -> Self {
        Self {
            asymmetric: true,
            ..self
        }
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn is_asymmetric(&self) -> bool {
        self.asymmetric
    }

    pub fn r_lambda(&self) -> f64 {
        self.r_lambda
    }

    pub fn smoothness(&self) -> Option<f64> {
        match self.kind {
            PenaltyKind::HuberL2 { smoothness } => Some(smoothness),
            PenaltyKind::ScaledNorm(_) => None,
        }
    }

    pub fn dual_domain(&self) -> DualDomain {
        let ball = match self.kind {
            PenaltyKind::ScaledNorm(NormKind::L1) => BallKind::Linf,
            PenaltyKind::ScaledNorm(NormKind::Linf) => BallKind::L1,
            PenaltyKind::ScaledNorm(NormKind::L2) | PenaltyKind::HuberL2 { .. } => BallKind::L2,
        };
        DualDomain {
            ball,
            radius: self.r_lambda,
            nonneg: self.asymmetric,
        }
    }

    /// `max_{λ∈Λ} ‖λ‖₂` in dimension `m`.
    pub fn dual_radius(&self, m: usize) -> f64 {
        self.dual_domain().euclidean_radius(m)
    }

    fn effective<'a>(&self, z: &'a [f64], buf: &'a mut Vec<f64>) -> &'a [f64] {
        if self.asymmetric {
            buf.clear();
            buf.extend(z.iter().map(|v| f64::max(*v, 0.0)));
            buf
        } else {
            z
        }
    }

    /// `E(z)`.
    pub fn eval(&self, z: &[f64]) -> f64 {
        let mut buf = Vec::new();
        let w = self.effective(z, &mut buf);
        match self.kind {
            PenaltyKind::ScaledNorm(NormKind::L1) => self.r_lambda * norm1(w),
            PenaltyKind::ScaledNorm(NormKind::L2) => self.r_lambda * norm2(w),
            PenaltyKind::ScaledNorm(NormKind::Linf) => self.r_lambda * norm_inf(w),
            PenaltyKind::HuberL2 { smoothness } => huber(self.r_lambda, smoothness, norm2(w)),
        }
    }

    /// `E*(λ)`; `+∞` outside the dual domain.
    pub fn conjugate(&self, lambda: &[f64]) -> f64 {
        if !self.dual_domain().contains(lambda) {
            return f64::INFINITY;
        }
        match self.kind {
            PenaltyKind::ScaledNorm(_) => 0.0,
            PenaltyKind::HuberL2 { smoothness } => dot(lambda, lambda) / (2.0 * smoothness),
        }
    }

    /// `∇E*(λ)` on the dual domain: zero for the norm family, `λ/L` for Huber.
    pub fn conjugate_gradient(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        if !self.dual_domain().contains(lambda) {
            return Err(Error::OutsideDomain("dual variable"));
        }
        Ok(self.conjugate_gradient_unchecked(lambda))
    }

    pub(crate) fn conjugate_gradient_unchecked(&self, lambda: &[f64]) -> Vec<f64> {
        match self.kind {
            PenaltyKind::ScaledNorm(_) => vec![0.0; lambda.len()],
            PenaltyKind::HuberL2 { smoothness } => {
                lambda.iter().map(|v| v / smoothness).collect()
            }
        }
    }

    /// An element of `∂E(z)`.
    ///
    /// The zero vector is returned at `z = 0`; `ℓ∞` ties go to the lowest index.
    /// Asymmetric variants are evaluated on `[z]_+` and vanish where `z_j ≤ 0`.
    pub fn subgradient(&self, z: &[f64]) -> Vec<f64> {
        let mut buf = Vec::new();
        let w = self.effective(z, &mut buf);
        let r = self.r_lambda;
        let mut g = vec![0.0; w.len()];
        match self.kind {
            PenaltyKind::ScaledNorm(NormKind::L1) => {
                for (gi, wi) in g.iter_mut().zip(w) {
                    *gi = if *wi > 0.0 {
                        r
                    } else if *wi < 0.0 {
                        -r
                    } else {
                        0.0
                    };
                }
            }
            PenaltyKind::ScaledNorm(NormKind::L2) => {
                let n = norm2(w);
                if n > 0.0 {
                    for (gi, wi) in g.iter_mut().zip(w) {
                        *gi = r * wi / n;
                    }
                }
            }
            PenaltyKind::ScaledNorm(NormKind::Linf) => {
                let n = norm_inf(w);
                if n > 0.0 {
                    let j = w.iter().position(|v| libm::fabs(*v) == n).unwrap_or(0);
                    g[j] = if w[j] > 0.0 { r } else { -r };
                }
            }
            PenaltyKind::HuberL2 { smoothness } => {
                let n = norm2(w);
                if n > 0.0 {
                    let scale = huber_derivative(r, smoothness, n) / n;
                    for (gi, wi) in g.iter_mut().zip(w) {
                        *gi = scale * wi;
                    }
                }
            }
        }
        g
    }

    /// Strong-convexity modulus of `E*` (and so of `L_t(x, ·)`): `1/L` for Huber, else 0.
    pub fn strong_convexity(&self) -> f64 {
        match self.kind {
            PenaltyKind::HuberL2 { smoothness } => 1.0 / smoothness,
            PenaltyKind::ScaledNorm(_) => 0.0,
        }
    }

    /// Lipschitz constant of `E` with respect to `‖·‖₂`.
    pub fn lipschitz(&self, m: usize) -> f64 {
        self.dual_radius(m)
    }
}

impl DualDomain {
    pub fn euclidean_radius(&self, m: usize) -> f64 {
        match self.ball {
            BallKind::L2 | BallKind::L1 => self.radius,
            BallKind::Linf => self.radius * libm::sqrt(m as f64),
        }
    }

    pub fn contains(&self, lambda: &[f64]) -> bool {
        let slack = DOMAIN_TOL * f64::max(1.0, self.radius);
        if self.nonneg && lambda.iter().any(|v| *v < -slack) {
            return false;
        }
        let size = match self.ball {
            BallKind::L2 => norm2(lambda),
            BallKind::Linf => norm_inf(lambda),
            BallKind::L1 => norm1(lambda),
        };
        size <= self.radius + slack
    }

    /// Euclidean projection onto the domain.
    pub fn project(&self, lambda: &[f64]) -> DualVector {
        let mut v = lambda.to_vec();
        if self.nonneg {
            for x in v.iter_mut() {
                *x = f64::max(*x, 0.0);
            }
        }
        let r = self.radius;
        match self.ball {
            BallKind::L2 => {
                let n = norm2(&v);
                if n > r {
                    let s = r / n;
                    v.iter_mut().for_each(|x| *x *= s);
                }
            }
            BallKind::Linf => {
                for x in v.iter_mut() {
                    *x = x.clamp(-r, r);
                }
            }
            BallKind::L1 => {
                if norm1(&v) > r {
                    let mut mag: Vec<f64> = v.iter().map(|x| libm::fabs(*x)).collect();
                    project_capped_simplex(&mut mag, r);
                    for (x, a) in v.iter_mut().zip(mag) {
                        *x = if *x < 0.0 { -a } else { a };
                    }
                }
            }
        }
        DualVector(v)
    }
}

/// Grid approximation of `E*(λ) = sup_z λᵀz − E(z)` over
/// `z ∈ [−grid_radius, grid_radius]^m` with `grid_points` nodes per axis.
///
/// Exhaustive, so only `m ≤ 3` is accepted. The result is a lower estimate
/// of `E*(λ)`; outside `Λ` it grows with `grid_radius`.
pub fn conjugate_bruteforce(
    spec: &PenaltySpec,
    lambda: &[f64],
    grid_radius: f64,
    grid_points: usize,
) -> Result<f64> {
    let m = lambda.len();
    if m == 0 || m > 3 {
        return Err(Error::InvalidParameter(format!(
            "grid conjugate supports 1 ≤ m ≤ 3, got {m}"
        )));
    }
    if grid_points < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    let h = 2.0 * grid_radius / (grid_points - 1) as f64;
    let node = |k: usize| -grid_radius + h * k as f64;
    let mut idx = vec![0usize; m];
    let mut z = vec![0.0; m];
    let mut best = f64::NEG_INFINITY;
    loop {
        for (zi, k) in z.iter_mut().zip(&idx) {
            *zi = node(*k);
        }
        best = f64::max(best, dot(lambda, &z) - spec.eval(&z));
        let mut axis = 0;
        loop {
            if axis == m {
                return Ok(best);
            }
            idx[axis] += 1;
            if idx[axis] < grid_points {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}
