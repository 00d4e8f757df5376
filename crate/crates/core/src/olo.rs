//! Online linear optimization over the nonnegative ℓ_q ball.
//!
//! Each round the player picks `v^t` with `v^t >= 0`, `||v^t||_q <= 1`, then
//! the adversary reveals `w^t in [0,1]^m` and the player collects
//! `<w^t, v^t>`. The player here follows the gradient of the smoothed norm
//! at the running sum of adversary vectors, which earns
//!
//! ```text
//! sum_t <w^t, v^t> >= e^{-eps} * (||sum_t w^t||_p - R),   R = p(m^{1/p}-1)/eps
//! ```
//!
//! on every sequence, no randomness involved.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::smoothing::{
    dot, lp_norm, smoothed_norm, smoothed_norm_gradient, DualVector, LoadVector, PNormParams,
    SmoothingParams,
};

/// Player state: smoothing parameters plus the running sum of observed
/// adversary vectors. Values are immutable; `observe` returns a new state so
/// games can be forked and prefixes replayed.
#[derive(Debug, Clone)]
pub struct OloPlayerState {
    sp: SmoothingParams,
    accumulated: LoadVector,
    round: usize,
}

impl OloPlayerState {
    pub fn new(sp: SmoothingParams) -> Self {
        let m = sp.m();
        OloPlayerState {
            sp,
            accumulated: LoadVector::zeros(m),
            round: 0,
        }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn accumulated(&self) -> &[f64] {
        &self.accumulated
    }

    /// The action for the current round: the smoothed-norm gradient at the
    /// accumulated sum. Always a feasible dual vector.
    pub fn next_action(&self) -> DualVector {
        smoothed_norm_gradient(&self.accumulated, &self.sp)
    }

    /// Absorb one adversary vector; entries must lie in `[0,1]`.
    pub fn observe(&self, w: &[f64]) -> Result<OloPlayerState> {
        check_cube(w)?;
        if w.len() != self.sp.m() {
            return Err(Error::InvalidParameter(format!(
                "adversary vector has length {}, expected {}",
                w.len(),
                self.sp.m()
            )));
        }
        let mut next = self.clone();
        next.accumulated.add_assign(w);
        next.round += 1;
        Ok(next)
    }
}

fn check_cube(w: &[f64]) -> Result<()> {
    for (i, &x) in w.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) || !x.is_finite() {
            return Err(Error::OutOfRange { index: i, value: x });
        }
    }
    Ok(())
}

/// Outcome of one full game.
#[derive(Debug, Clone, Serialize)]
pub struct RegretRecord {
    /// Total reward `sum_t <w^t, v^t>`.
    pub reward: f64,
    /// Best fixed action's reward in hindsight, `||sum_t w^t||_p`.
    pub hindsight_opt: f64,
    /// Additive radius `R` of the smoothing.
    pub radius: f64,
    pub eps: f64,
    /// `reward >= e^{-eps} * (hindsight_opt - radius)` up to 1e-9.
    pub bound_satisfied: bool,
    /// `e^{eps} * reward >= psi(s^n) - psi(0)` up to 1e-9; this is the
    /// potential-difference inequality the regret bound is extracted from.
    pub telescoping_satisfied: bool,
}

/// Play the gradient player against a fixed sequence.
pub fn run_olo_game(ws: &[Vec<f64>], sp: &SmoothingParams) -> Result<RegretRecord> {
    let mut state = OloPlayerState::new(*sp);
    let mut reward = 0.0;
    for w in ws {
        let v = state.next_action();
        state = state.observe(w)?;
        reward += dot(w, &v);
    }
    let hindsight = lp_norm(state.accumulated(), &sp.base());
    let radius = sp.radius();
    let psi_final = smoothed_norm(state.accumulated(), sp);
    let psi_zero = sp.radius(); // psi(0) = R
    let tol = 1e-9 * hindsight.abs().max(1.0);
    let bound_satisfied = reward >= (-sp.eps()).exp() * (hindsight - radius) - tol;
    let telescoping_satisfied = sp.eps().exp() * reward >= psi_final - psi_zero - tol;
    Ok(RegretRecord {
        reward,
        hindsight_opt: hindsight,
        radius,
        eps: sp.eps(),
        bound_satisfied,
        telescoping_satisfied,
    })
}

/// Reward of the best fixed feasible action: `||sum_t w^t||_p` by norm
/// duality.
pub fn hindsight_opt(ws: &[Vec<f64>], params: &PNormParams) -> f64 {
    let mut total = vec![0.0; params.m()];
    for w in ws {
        for (a, b) in total.iter_mut().zip(w) {
            *a += b;
        }
    }
    lp_norm(&total, params)
}
