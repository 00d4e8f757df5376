//! Offline optimum oracles.
//!
//! `brute_force_opt` enumerates every assignment (capped) and is exact;
//! `fractional_lower_bound` relaxes the per-job choice to a probability
//! simplex and runs conditional gradient, whose per-iterate duality gap turns
//! the fractional value into a rigorous lower bound on the integral optimum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balancing::{Assignment, Instance};
use crate::error::{Error, Result};
use crate::smoothing::{dot, effective_p, lp_norm, lp_norm_finite, pow_pos, PNorm, PNormParams};

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptKind {
    Exact,
    LowerBound,
    Analytic,
}

impl OptKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptKind::Exact => "exact",
            OptKind::LowerBound => "lower_bound",
            OptKind::Analytic => "analytic",
        }
    }
}

impl std::fmt::Display for OptKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum OptCertificate {
    /// Witnessing assignment of an exact optimum.
    Assignment(Assignment),
    /// Final conditional-gradient duality gap.
    DualityGap(f64),
    /// Where an analytic value came from.
    Provenance(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct OptResult {
    pub value: f64,
    pub kind: OptKind,
    pub certificate: OptCertificate,
}

/// Exact optimum by exhaustive enumeration.
///
/// Assignments are ranked lexicographically (job 0 most significant); ties on
/// the objective go to the lexicographically smallest one. Fails with
/// `EnumerationTooLarge` when `prod_t k_t > cap`.
pub fn brute_force_opt(inst: &Instance, params: &PNormParams, cap: u64) -> Result<OptResult> {
    let total = inst.assignment_count();
    if total > cap as u128 {
        return Err(Error::EnumerationTooLarge {
            required: total,
            cap,
        });
    }
    let total = total as u64;
    let n = inst.n();
    let m = inst.m();

    // mixed-radix strides, job 0 most significant
    let mut strides = vec![1u64; n];
    for t in (0..n.saturating_sub(1)).rev() {
        strides[t] = strides[t + 1] * inst.job(t + 1).k() as u64;
    }

    let eval = |buf: &mut Vec<f64>, idx: u64| -> f64 {
        buf.iter_mut().for_each(|x| *x = 0.0);
        for (job, &stride) in inst.jobs().iter().zip(&strides) {
            let j = ((idx / stride) % job.k() as u64) as usize;
            for (a, b) in buf.iter_mut().zip(job.column(j)) {
                *a += b;
            }
        }
        lp_norm(buf, params)
    };

    let (best_val, best_idx) = (0..total)
        .into_par_iter()
        .map_init(
            || vec![0.0f64; m],
            |buf, idx| (eval(buf, idx), idx),
        )
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );

    let choices = (0..n)
        .map(|t| ((best_idx / strides[t]) % inst.job(t).k() as u64) as usize)
        .collect();
    Ok(OptResult {
        value: best_val,
        kind: OptKind::Exact,
        certificate: OptCertificate::Assignment(Assignment::new(choices)),
    })
}

/// Certified lower bound on the optimum via conditional gradient over the
/// product of per-job simplices.
///
/// The objective `F(x) = ||sum_t A^t x^t||_p` is positively homogeneous, so
/// at any iterate the linear-minimization value `sum_t min_j <g, col_j>`
/// equals `F - gap` and lower-bounds every feasible assignment's load. The
/// best such value seen is returned. Iteration stops once the gap drops
/// below `tol * F` or after `max_iters` steps. Degenerate inputs yield the
/// trivially valid bound 0.
pub fn fractional_lower_bound(
    inst: &Instance,
    params: &PNormParams,
    max_iters: usize,
    tol: f64,
) -> OptResult {
    let p = params
        .finite_p()
        .expect("fractional lower bound requires finite p");
    let m = inst.m();
    let n = inst.n();
    let zero = OptResult {
        value: 0.0,
        kind: OptKind::LowerBound,
        certificate: OptCertificate::DualityGap(0.0),
    };
    if n == 0 {
        return zero;
    }

    // start at the uniform fractional assignment; never evaluates the
    // gradient at the zero load vector unless the whole instance is zero
    let mut x: Vec<Vec<f64>> = inst
        .jobs()
        .iter()
        .map(|job| vec![1.0 / job.k() as f64; job.k()])
        .collect();

    let mix = |x: &[Vec<f64>]| -> Vec<f64> {
        let mut u = vec![0.0; m];
        for (job, xt) in inst.jobs().iter().zip(x) {
            for (j, &w) in xt.iter().enumerate() {
                if w > 0.0 {
                    for (a, b) in u.iter_mut().zip(job.column(j)) {
                        *a += w * b;
                    }
                }
            }
        }
        u
    };

    let mut best_lb = 0.0f64;
    let mut last_gap = f64::INFINITY;
    for _ in 0..max_iters {
        let u = mix(&x);
        let value = lp_norm_finite(&u, p);
        if value <= f64::MIN_POSITIVE {
            return zero;
        }
        let g: Vec<f64> = u.iter().map(|&ui| pow_pos(ui / value, p - 1.0)).collect();

        // linear minimization oracle: per-job best column against g
        let mut lb = 0.0;
        let mut target = vec![0.0; m];
        let mut verts = Vec::with_capacity(n);
        for job in inst.jobs() {
            let mut best_j = 0;
            let mut best_s = f64::INFINITY;
            for j in 0..job.k() {
                let s = dot(&g, job.column(j));
                if s < best_s {
                    best_s = s;
                    best_j = j;
                }
            }
            lb += best_s;
            verts.push(best_j);
            for (a, b) in target.iter_mut().zip(job.column(best_j)) {
                *a += b;
            }
        }
        best_lb = best_lb.max(lb);
        last_gap = value - lb;
        if last_gap <= tol * value {
            break;
        }

        // exact line search on gamma -> ||(1-gamma) u + gamma target||_p,
        // convex in gamma; golden-section is plenty here
        let phi = |gamma: f64| -> f64 {
            let cand: Vec<f64> = u
                .iter()
                .zip(&target)
                .map(|(a, b)| (1.0 - gamma) * a + gamma * b)
                .collect();
            lp_norm_finite(&cand, p)
        };
        let gamma = golden_section_min(phi, 0.0, 1.0, 80);

        for (xt, &best_j) in x.iter_mut().zip(&verts) {
            for (j, w) in xt.iter_mut().enumerate() {
                *w *= 1.0 - gamma;
                if j == best_j {
                    *w += gamma;
                }
            }
        }
    }

    OptResult {
        value: best_lb.max(0.0),
        kind: OptKind::LowerBound,
        certificate: OptCertificate::DualityGap(last_gap),
    }
}

fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

pub const DEFAULT_FRACTIONAL_ITERS: usize = 5000;
pub const DEFAULT_FRACTIONAL_TOL: f64 = 1e-4;

/// Which oracle `opt_bound_with` should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptMode {
    Auto,
    Analytic,
    Brute,
    Fractional,
}

/// Dispatch: analytic value if recorded, else exact brute force when it fits
/// under the default cap, else the fractional lower bound.
pub fn opt_bound(inst: &Instance, params: &PNormParams) -> OptResult {
    opt_bound_with(inst, params, OptMode::Auto, DEFAULT_ENUMERATION_CAP)
        .expect("auto dispatch is total")
}

pub fn opt_bound_with(
    inst: &Instance,
    params: &PNormParams,
    mode: OptMode,
    cap: u64,
) -> Result<OptResult> {
    match mode {
        OptMode::Analytic => analytic_opt(inst).ok_or_else(|| {
            Error::InvalidParameter("instance carries no analytic optimum".into())
        }),
        OptMode::Brute => brute_force_opt(inst, params, cap),
        OptMode::Fractional => Ok(fractional_fallback(inst, params)),
        OptMode::Auto => {
            if let Some(res) = analytic_opt(inst) {
                return Ok(res);
            }
            if inst.assignment_count() <= cap as u128 {
                return brute_force_opt(inst, params, cap);
            }
            Ok(fractional_fallback(inst, params))
        }
    }
}

fn analytic_opt(inst: &Instance) -> Option<OptResult> {
    inst.analytic_opt().map(|a| OptResult {
        value: a.value,
        kind: OptKind::Analytic,
        certificate: OptCertificate::Provenance(a.provenance.clone()),
    })
}

/// Fractional bound, with the max norm handled through a finite surrogate:
/// `||x||_inf >= m^{-1/p'} ||x||_{p'}`, so a lower bound at `p'` scaled by
/// `m^{-1/p'}` lower-bounds the max-norm optimum.
fn fractional_fallback(inst: &Instance, params: &PNormParams) -> OptResult {
    match params.p() {
        PNorm::Finite(_) => {
            fractional_lower_bound(inst, params, DEFAULT_FRACTIONAL_ITERS, DEFAULT_FRACTIONAL_TOL)
        }
        PNorm::Inf => {
            let m = inst.m();
            let p_eff = effective_p(m, 1.0);
            let surrogate = PNormParams::finite(p_eff, m).expect("valid surrogate");
            let mut res = fractional_lower_bound(
                inst,
                &surrogate,
                DEFAULT_FRACTIONAL_ITERS,
                DEFAULT_FRACTIONAL_TOL,
            );
            res.value *= (m as f64).powf(-1.0 / p_eff);
            res
        }
    }
}
