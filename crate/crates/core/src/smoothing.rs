//! The ℓ_p norm, its smoothed companion, and their gradients.
//!
//! Everything here is built to stay finite for exponents up to ~10^4: p-th
//! powers are evaluated as `exp(p * ln(x))` after pulling out the largest
//! entry, so intermediate sums live in `[1, m]` instead of overflowing.
//!
//! The smoothed norm replaces `u -> ||u||_p` by
//!
//! ```text
//! psi(u) = (p/eps) * ||1 + eps*u/p||_p - p/eps
//! ```
//!
//! which upper-bounds the norm by at most `R = p*(m^{1/p}-1)/eps` and whose
//! gradient moves by at most a factor `e^{+-eps}` under unit-cube shifts.
//! Those two facts are what the online algorithms in this crate rely on.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The norm exponent: a finite `p >= 2` or the max norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PNorm {
    Finite(f64),
    Inf,
}

impl PNorm {
    pub fn is_finite(&self) -> bool {
        matches!(self, PNorm::Finite(_))
    }
}

impl std::fmt::Display for PNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PNorm::Finite(p) => write!(f, "{p}"),
            PNorm::Inf => write!(f, "inf"),
        }
    }
}

/// Norm exponent plus dimension (machine count).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PNormParams {
    p: PNorm,
    m: usize,
}

impl PNormParams {
    /// Finite exponent; requires `p >= 2` and `m >= 1`.
    pub fn finite(p: f64, m: usize) -> Result<Self> {
        if !p.is_finite() || p < 2.0 {
            return Err(Error::InvalidParameter(format!(
                "p must be finite and >= 2, got {p}"
            )));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("m must be >= 1".into()));
        }
        Ok(Self {
            p: PNorm::Finite(p),
            m,
        })
    }

    /// The max norm.
    pub fn inf(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be >= 1".into()));
        }
        Ok(Self { p: PNorm::Inf, m })
    }

    pub fn p(&self) -> PNorm {
        self.p
    }

    /// The finite exponent, if there is one.
    pub fn finite_p(&self) -> Option<f64> {
        match self.p {
            PNorm::Finite(p) => Some(p),
            PNorm::Inf => None,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Conjugate exponent `q = p/(p-1)`; `None` for the max norm.
    pub fn q(&self) -> Option<f64> {
        self.finite_p().map(|p| p / (p - 1.0))
    }
}

/// Smoothing configuration: a finite-p norm, `eps in (0,1]`, and the derived
/// additive radius `R = p*(m^{1/p}-1)/eps` (always recomputed, never stored).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    base: PNormParams,
    eps: f64,
}

impl SmoothingParams {
    pub fn new(p: f64, m: usize, eps: f64) -> Result<Self> {
        Self::from_params(PNormParams::finite(p, m)?, eps)
    }

    pub fn from_params(base: PNormParams, eps: f64) -> Result<Self> {
        if base.finite_p().is_none() {
            return Err(Error::InvalidParameter(
                "smoothing requires a finite exponent; convert via effective_p first".into(),
            ));
        }
        if eps.is_nan() || eps <= 0.0 || eps > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0,1], got {eps}"
            )));
        }
        Ok(Self { base, eps })
    }

    pub fn base(&self) -> PNormParams {
        self.base
    }

    pub fn p(&self) -> f64 {
        self.base.finite_p().expect("base is finite by construction")
    }

    pub fn m(&self) -> usize {
        self.base.m()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Additive radius `R = p*(m^{1/p}-1)/eps`.
    pub fn radius(&self) -> f64 {
        let p = self.p();
        (p / self.eps) * (root_p(self.m() as f64, p) - 1.0)
    }
}

/// Nonnegative machine-load vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadVector(Vec<f64>);

impl LoadVector {
    pub fn zeros(m: usize) -> Self {
        LoadVector(vec![0.0; m])
    }

    /// Validates that every entry is finite and nonnegative.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        for (i, &x) in entries.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "load entry {x} at index {i} must be finite and nonnegative"
                )));
            }
        }
        Ok(LoadVector(entries))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Componentwise `self += rhs`.
    pub fn add_assign(&mut self, rhs: &[f64]) {
        debug_assert_eq!(self.0.len(), rhs.len());
        for (a, b) in self.0.iter_mut().zip(rhs) {
            *a += b;
        }
    }
}

impl Deref for LoadVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Nonnegative vector with ℓ_q norm at most 1 (the feasible actions of the
/// online linear optimization game). Produced by the gradient operations,
/// which yield unit q-norm by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector(Vec<f64>);

impl DualVector {
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        DualVector(entries)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for DualVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `x^p` for `x >= 0` via `exp(p ln x)`, with `0^p = 0`.
#[inline]
pub(crate) fn pow_pos(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (p * x.ln()).exp()
    }
}

/// `x^{1/p}` for `x > 0`.
#[inline]
pub(crate) fn root_p(x: f64, p: f64) -> f64 {
    (x.ln() / p).exp()
}

/// Plain inner product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ℓ_p norm of a nonnegative vector, max-scaled so it stays finite for any
/// exponent up to ~10^4. The max norm returns the largest entry.
pub fn lp_norm(u: &[f64], params: &PNormParams) -> f64 {
    debug_assert_eq!(u.len(), params.m());
    match params.p() {
        PNorm::Inf => u.iter().fold(0.0_f64, |a, &b| a.max(b)),
        PNorm::Finite(p) => lp_norm_finite(u, p),
    }
}

pub(crate) fn lp_norm_finite(u: &[f64], p: f64) -> f64 {
    let max = u.iter().fold(0.0_f64, |a, &b| a.max(b));
    if max <= 0.0 {
        return 0.0;
    }
    // sum of (u_i/max)^p lies in [1, m]
    let sum: f64 = u.iter().map(|&x| pow_pos(x / max, p)).sum();
    max * root_p(sum, p)
}

/// The smoothed norm `psi(u) = (p/eps) * ||1 + eps*u/p||_p - p/eps`.
///
/// Satisfies `||u||_p <= psi(u) <= ||u||_p + R` for nonnegative `u`.
pub fn smoothed_norm(u: &[f64], sp: &SmoothingParams) -> f64 {
    debug_assert_eq!(u.len(), sp.m());
    let scale = sp.p() / sp.eps();
    let shifted: Vec<f64> = u.iter().map(|&x| 1.0 + x / scale).collect();
    scale * (lp_norm_finite(&shifted, sp.p()) - 1.0)
}

/// Gradient of the smoothed norm:
///
/// ```text
/// d psi / d u_i = (1 + eps*u_i/p)^{p-1} / (sum_j (1 + eps*u_j/p)^p)^{1-1/p}
/// ```
///
/// Componentwise positive, with ℓ_q norm exactly 1.
pub fn smoothed_norm_gradient(u: &[f64], sp: &SmoothingParams) -> DualVector {
    debug_assert_eq!(u.len(), sp.m());
    let p = sp.p();
    let scale = p / sp.eps();
    let shifted: Vec<f64> = u.iter().map(|&x| 1.0 + x / scale).collect();
    let max = shifted.iter().fold(1.0_f64, |a, &b| a.max(b));
    // ratios in (0,1]; the shared max^{p-1} factor cancels between
    // numerator and denominator.
    let sum: f64 = shifted.iter().map(|&a| pow_pos(a / max, p)).sum();
    let denom = (sum.ln() * (1.0 - 1.0 / p)).exp();
    let grad = shifted
        .iter()
        .map(|&a| pow_pos(a / max, p - 1.0) / denom)
        .collect();
    DualVector::from_raw(grad)
}

/// The norm's linearization vector `g(u)_i = (u_i/||u||_p)^{p-1}`.
///
/// For nonnegative `u != 0` this is the gradient of `||.||_p` at `u` extended
/// to the boundary; it has ℓ_q norm exactly 1 and certifies
/// `<g(u), v> <= ||v||_p` for all nonnegative `v`.
pub fn lp_norm_gradient(u: &[f64], params: &PNormParams) -> Result<DualVector> {
    let p = params
        .finite_p()
        .ok_or_else(|| Error::InvalidParameter("gradient requires finite p".into()))?;
    let nrm = lp_norm_finite(u, p);
    if nrm <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let grad = u.iter().map(|&x| pow_pos(x / nrm, p - 1.0)).collect();
    Ok(DualVector::from_raw(grad))
}

/// Second-order upper estimate on the perturbed norm:
///
/// ```text
/// ||u + v||_p <= ||u||_p + <g(u), v> + (p-1) ||v||_p^2 / (2 ||u||_p)
/// ```
///
/// Returns the right-hand side. Requires `u != 0`.
pub fn lp_norm_perturbation_bound(u: &[f64], v: &[f64], params: &PNormParams) -> Result<f64> {
    let p = params
        .finite_p()
        .ok_or_else(|| Error::InvalidParameter("perturbation bound requires finite p".into()))?;
    let g = lp_norm_gradient(u, params)?;
    let un = lp_norm_finite(u, p);
    let vn = lp_norm_finite(v, p);
    Ok(un + dot(&g, v) + (p - 1.0) * vn * vn / (2.0 * un))
}

/// Finite surrogate exponent for max-norm runs: `max(2, ln(m)/eps)`.
pub fn effective_p(m: usize, eps: f64) -> f64 {
    assert!(m >= 1, "effective_p needs m >= 1");
    assert!(eps > 0.0, "effective_p needs eps > 0");
    ((m as f64).ln() / eps).max(2.0)
}
