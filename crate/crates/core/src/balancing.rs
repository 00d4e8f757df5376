//! The online load-balancing problem and its four algorithms.
//!
//! A job is an `m x k` matrix of load options; the algorithm commits to one
//! column per job. All four algorithms are deterministic functions of the
//! (ordered) instance and the parameters:
//!
//! - `greedy`: pick the column that least increases the ℓ_p load.
//! - `greedy_wr`: greedy, but the internal load state is reset after job
//!   `ceil(n/2)`; the second half ignores the first.
//! - `smooth_greedy`: greedy on the smoothed norm instead of the norm, with
//!   the same midpoint reset.
//! - `ultimate`: plain greedy until the accumulated load first exceeds the
//!   smoothing radius `R`, then `smooth_greedy` on the remaining jobs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offline::{brute_force_opt, OptKind, OptResult};
use crate::smoothing::{lp_norm, smoothed_norm, PNormParams, SmoothingParams};

/// One job's `m x k` load-option matrix, entries in `[0,1]`. Stored
/// column-major since the algorithms only ever look at whole columns.
#[derive(Debug, Clone, PartialEq)]
pub struct JobMatrix {
    m: usize,
    k: usize,
    cols: Vec<f64>,
}

impl JobMatrix {
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidParameter("job needs at least one option".into()));
        }
        let m = columns[0].len();
        if m == 0 {
            return Err(Error::InvalidParameter("job columns must be nonempty".into()));
        }
        let k = columns.len();
        let mut cols = Vec::with_capacity(m * k);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != m {
                return Err(Error::InvalidParameter(format!(
                    "column {j} has length {}, expected {m}",
                    col.len()
                )));
            }
            for (i, &x) in col.iter().enumerate() {
                if !(0.0..=1.0).contains(&x) || !x.is_finite() {
                    return Err(Error::Range {
                        job: 0,
                        position: j * m + i,
                        value: x,
                    });
                }
            }
            cols.extend_from_slice(col);
        }
        Ok(JobMatrix { m, k, cols })
    }

    /// Build from a flat row-major entry list (`entries[i*k + j]` = load on
    /// machine `i` under option `j`), the layout used in instance files.
    pub fn from_row_major(m: usize, entries: &[f64]) -> Result<Self> {
        if m == 0 || entries.is_empty() || !entries.len().is_multiple_of(m) {
            return Err(Error::InvalidParameter(format!(
                "entry list of length {} is not a positive multiple of m={m}",
                entries.len()
            )));
        }
        let k = entries.len() / m;
        let mut cols = vec![0.0; m * k];
        for i in 0..m {
            for j in 0..k {
                cols[j * m + i] = entries[i * k + j];
            }
        }
        for (pos, &x) in cols.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) || !x.is_finite() {
                return Err(Error::Range {
                    job: 0,
                    position: pos,
                    value: x,
                });
            }
        }
        Ok(JobMatrix { m, k, cols })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.k).map(move |j| self.column(j))
    }

    /// Flat row-major entries, the serialization layout.
    pub fn row_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m * self.k];
        for i in 0..self.m {
            for j in 0..self.k {
                out[i * self.k + j] = self.cols[j * self.m + i];
            }
        }
        out
    }
}

/// Optional a-priori optimum recorded by a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticOpt {
    pub value: f64,
    pub provenance: String,
}

/// An ordered job sequence over `m` machines.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    m: usize,
    jobs: Vec<JobMatrix>,
    analytic_opt: Option<AnalyticOpt>,
}

impl Instance {
    pub fn new(m: usize, jobs: Vec<JobMatrix>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be >= 1".into()));
        }
        for (t, job) in jobs.iter().enumerate() {
            if job.m() != m {
                return Err(Error::InvalidParameter(format!(
                    "job {t} has {} machines, instance has {m}",
                    job.m()
                )));
            }
        }
        Ok(Instance {
            m,
            jobs,
            analytic_opt: None,
        })
    }

    pub fn with_analytic_opt(mut self, value: f64, provenance: impl Into<String>) -> Self {
        self.analytic_opt = Some(AnalyticOpt {
            value,
            provenance: provenance.into(),
        });
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    pub fn jobs(&self) -> &[JobMatrix] {
        &self.jobs
    }

    pub fn job(&self, t: usize) -> &JobMatrix {
        &self.jobs[t]
    }

    pub fn analytic_opt(&self) -> Option<&AnalyticOpt> {
        self.analytic_opt.as_ref()
    }

    /// Number of full assignments, `prod_t k_t` (1 for the empty instance),
    /// saturating at `u128::MAX`.
    pub fn assignment_count(&self) -> u128 {
        self.jobs
            .iter()
            .fold(1u128, |acc, j| acc.saturating_mul(j.k() as u128))
    }

    /// A new instance with the jobs reordered as `jobs[order[0]], ...`.
    /// The analytic optimum is order-invariant and carried over.
    pub fn permuted(&self, order: &[usize]) -> Instance {
        debug_assert_eq!(order.len(), self.jobs.len());
        Instance {
            m: self.m,
            jobs: order.iter().map(|&t| self.jobs[t].clone()).collect(),
            analytic_opt: self.analytic_opt.clone(),
        }
    }

    /// The sub-instance consisting of jobs `from..` (0-based).
    pub fn suffix(&self, from: usize) -> Instance {
        Instance {
            m: self.m,
            jobs: self.jobs[from..].to_vec(),
            analytic_opt: None,
        }
    }

    /// Total load vector of an assignment.
    pub fn load_of(&self, assignment: &Assignment) -> Vec<f64> {
        let mut load = vec![0.0; self.m];
        for (job, &j) in self.jobs.iter().zip(assignment.choices()) {
            for (a, b) in load.iter_mut().zip(job.column(j)) {
                *a += b;
            }
        }
        load
    }
}

/// One column index per job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment(Vec<usize>);

impl Assignment {
    pub fn new(choices: Vec<usize>) -> Self {
        Assignment(choices)
    }

    pub fn choices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Greedy,
    GreedyWr,
    SmoothGreedy,
    Ultimate,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 4] = [
        AlgorithmKind::Greedy,
        AlgorithmKind::GreedyWr,
        AlgorithmKind::SmoothGreedy,
        AlgorithmKind::Ultimate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmKind::Greedy => "greedy",
            AlgorithmKind::GreedyWr => "greedy_wr",
            AlgorithmKind::SmoothGreedy => "smooth_greedy",
            AlgorithmKind::Ultimate => "ultimate",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(AlgorithmKind::Greedy),
            "greedy_wr" => Ok(AlgorithmKind::GreedyWr),
            "smooth_greedy" => Ok(AlgorithmKind::SmoothGreedy),
            "ultimate" => Ok(AlgorithmKind::Ultimate),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm '{other}' (expected greedy, greedy_wr, smooth_greedy, ultimate)"
            ))),
        }
    }
}

/// How the job order was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderMode {
    Given,
    Random,
}

impl fmt::Display for OrderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderMode::Given => "given",
            OrderMode::Random => "random",
        })
    }
}

/// One algorithm execution.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub algorithm: AlgorithmKind,
    pub order: OrderMode,
    pub trial: Option<u64>,
    pub seed: Option<u64>,
    /// Final load in the norm the algorithm ran under.
    pub final_load: f64,
    /// Final load in the max norm, reported alongside for ℓ_inf use.
    pub linf_load: f64,
    pub opt_bound: Option<f64>,
    pub opt_kind: Option<OptKind>,
    pub ratio: Option<f64>,
    /// Only present for `ultimate`: the job index (1-based) after which the
    /// greedy phase ended; `n` if the threshold was never crossed.
    pub switch_time: Option<usize>,
    pub assignment: Assignment,
}

impl RunRecord {
    /// Attach an optimum bound and derive the ratio.
    pub fn with_opt(mut self, opt: &OptResult) -> Self {
        self.opt_bound = Some(opt.value);
        self.opt_kind = Some(opt.kind);
        self.ratio = if opt.value > 0.0 {
            Some(self.final_load / opt.value)
        } else {
            None
        };
        self
    }

    /// Ratio against the max-norm load instead of the running norm.
    pub fn with_opt_linf(mut self, opt: &OptResult) -> Self {
        self.opt_bound = Some(opt.value);
        self.opt_kind = Some(opt.kind);
        self.ratio = if opt.value > 0.0 {
            Some(self.linf_load / opt.value)
        } else {
            None
        };
        self
    }
}

/// A deterministic online assignment rule, consumed one job at a time.
/// Implementations that know the horizon receive it at construction.
pub trait OnlinePolicy {
    fn kind(&self) -> AlgorithmKind;

    /// Commit to a column of `job` and update internal state.
    fn choose(&mut self, job: &JobMatrix) -> usize;

    /// Randomized policies must return false; the adaptive adversary and the
    /// reproducibility guarantees only cover deterministic ones.
    fn is_deterministic(&self) -> bool {
        true
    }

    /// For `ultimate`: the 1-based time of the phase switch, if it happened.
    fn switch_time(&self) -> Option<usize> {
        None
    }
}

/// Argmin over columns of `objective(load + column)`, strict `<`, lowest
/// index on ties.
fn argmin_column<F: FnMut(&[f64]) -> f64>(
    load: &[f64],
    job: &JobMatrix,
    scratch: &mut Vec<f64>,
    mut objective: F,
) -> usize {
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for j in 0..job.k() {
        scratch.clear();
        scratch.extend(load.iter().zip(job.column(j)).map(|(a, b)| a + b));
        let val = objective(scratch);
        if val < best_val {
            best_val = val;
            best = j;
        }
    }
    best
}

/// The column that least increases the ℓ_p load from `current`; ties go to
/// the lowest index.
pub fn greedy_step(current: &[f64], job: &JobMatrix, params: &PNormParams) -> usize {
    let mut scratch = Vec::with_capacity(current.len());
    argmin_column(current, job, &mut scratch, |cand| lp_norm(cand, params))
}

pub struct GreedyPolicy {
    params: PNormParams,
    load: Vec<f64>,
    scratch: Vec<f64>,
}

impl GreedyPolicy {
    pub fn new(params: PNormParams) -> Self {
        let m = params.m();
        GreedyPolicy {
            params,
            load: vec![0.0; m],
            scratch: Vec::with_capacity(m),
        }
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }
}

impl OnlinePolicy for GreedyPolicy {
    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::Greedy
    }

    fn choose(&mut self, job: &JobMatrix) -> usize {
        let params = self.params;
        let j = argmin_column(&self.load, job, &mut self.scratch, |cand| {
            lp_norm(cand, &params)
        });
        for (a, b) in self.load.iter_mut().zip(job.column(j)) {
            *a += b;
        }
        j
    }
}

pub struct GreedyWrPolicy {
    params: PNormParams,
    n: usize,
    t: usize,
    load: Vec<f64>,
    scratch: Vec<f64>,
}

impl GreedyWrPolicy {
    /// `n` is the horizon; the load state resets after job `ceil(n/2)`.
    pub fn new(params: PNormParams, n: usize) -> Self {
        let m = params.m();
        GreedyWrPolicy {
            params,
            n,
            t: 0,
            load: vec![0.0; m],
            scratch: Vec::with_capacity(m),
        }
    }
}

impl OnlinePolicy for GreedyWrPolicy {
    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::GreedyWr
    }

    fn choose(&mut self, job: &JobMatrix) -> usize {
        self.t += 1;
        if self.t == self.n.div_ceil(2) + 1 {
            self.load.iter_mut().for_each(|x| *x = 0.0);
        }
        let params = self.params;
        let j = argmin_column(&self.load, job, &mut self.scratch, |cand| {
            lp_norm(cand, &params)
        });
        for (a, b) in self.load.iter_mut().zip(job.column(j)) {
            *a += b;
        }
        j
    }
}

pub struct SmoothGreedyPolicy {
    sp: SmoothingParams,
    n: usize,
    t: usize,
    load: Vec<f64>,
    scratch: Vec<f64>,
}

impl SmoothGreedyPolicy {
    pub fn new(sp: SmoothingParams, n: usize) -> Self {
        let m = sp.m();
        SmoothGreedyPolicy {
            sp,
            n,
            t: 0,
            load: vec![0.0; m],
            scratch: Vec::with_capacity(m),
        }
    }

    /// Load accumulated since the last reset (used by per-step replay checks).
    pub fn internal_load(&self) -> &[f64] {
        &self.load
    }
}

impl OnlinePolicy for SmoothGreedyPolicy {
    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::SmoothGreedy
    }

    fn choose(&mut self, job: &JobMatrix) -> usize {
        self.t += 1;
        if self.t == self.n.div_ceil(2) + 1 {
            self.load.iter_mut().for_each(|x| *x = 0.0);
        }
        let sp = self.sp;
        let j = argmin_column(&self.load, job, &mut self.scratch, |cand| {
            smoothed_norm(cand, &sp)
        });
        for (a, b) in self.load.iter_mut().zip(job.column(j)) {
            *a += b;
        }
        j
    }
}

enum UltimatePhase {
    Greedy,
    Smooth(SmoothGreedyPolicy),
}

pub struct UltimatePolicy {
    sp: SmoothingParams,
    n: usize,
    t: usize,
    load: Vec<f64>,
    scratch: Vec<f64>,
    phase: UltimatePhase,
    switch: Option<usize>,
}

impl UltimatePolicy {
    pub fn new(sp: SmoothingParams, n: usize) -> Self {
        let m = sp.m();
        UltimatePolicy {
            sp,
            n,
            t: 0,
            load: vec![0.0; m],
            scratch: Vec::with_capacity(m),
            phase: UltimatePhase::Greedy,
            switch: None,
        }
    }
}

impl OnlinePolicy for UltimatePolicy {
    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::Ultimate
    }

    fn choose(&mut self, job: &JobMatrix) -> usize {
        self.t += 1;
        match &mut self.phase {
            UltimatePhase::Greedy => {
                let params = self.sp.base();
                let j = argmin_column(&self.load, job, &mut self.scratch, |cand| {
                    lp_norm(cand, &params)
                });
                for (a, b) in self.load.iter_mut().zip(job.column(j)) {
                    *a += b;
                }
                // strictly larger than R ends the greedy phase; the job that
                // crossed stays with greedy
                if lp_norm(&self.load, &params) > self.sp.radius() {
                    self.switch = Some(self.t);
                    let remaining = self.n - self.t;
                    self.phase = UltimatePhase::Smooth(SmoothGreedyPolicy::new(self.sp, remaining));
                }
                j
            }
            UltimatePhase::Smooth(inner) => inner.choose(job),
        }
    }

    fn switch_time(&self) -> Option<usize> {
        self.switch
    }
}

/// Drive a policy over an instance; returns the assignment and total load.
pub fn drive(policy: &mut dyn OnlinePolicy, inst: &Instance) -> (Assignment, Vec<f64>) {
    let mut choices = Vec::with_capacity(inst.n());
    let mut total = vec![0.0; inst.m()];
    for job in inst.jobs() {
        let j = policy.choose(job);
        debug_assert!(j < job.k());
        for (a, b) in total.iter_mut().zip(job.column(j)) {
            *a += b;
        }
        choices.push(j);
    }
    (Assignment::new(choices), total)
}

fn record_from(
    kind: AlgorithmKind,
    params: &PNormParams,
    assignment: Assignment,
    total: Vec<f64>,
    switch_time: Option<usize>,
) -> RunRecord {
    let final_load = lp_norm(&total, params);
    let linf_load = total.iter().fold(0.0_f64, |a, &b| a.max(b));
    RunRecord {
        algorithm: kind,
        order: OrderMode::Given,
        trial: None,
        seed: None,
        final_load,
        linf_load,
        opt_bound: None,
        opt_kind: None,
        ratio: None,
        switch_time,
        assignment,
    }
}

/// Plain greedy, no restart.
pub fn run_greedy(inst: &Instance, params: &PNormParams) -> RunRecord {
    let mut policy = GreedyPolicy::new(*params);
    let (assignment, total) = drive(&mut policy, inst);
    record_from(AlgorithmKind::Greedy, params, assignment, total, None)
}

/// Greedy with the load state reset after job `ceil(n/2)`. The final load is
/// still measured on the full combined load vector.
pub fn run_greedy_wr(inst: &Instance, params: &PNormParams) -> RunRecord {
    let mut policy = GreedyWrPolicy::new(*params, inst.n());
    let (assignment, total) = drive(&mut policy, inst);
    record_from(AlgorithmKind::GreedyWr, params, assignment, total, None)
}

/// Greedy on the smoothed norm, reset after job `ceil(n/2)`.
pub fn run_smooth_greedy(inst: &Instance, sp: &SmoothingParams) -> RunRecord {
    let mut policy = SmoothGreedyPolicy::new(*sp, inst.n());
    let (assignment, total) = drive(&mut policy, inst);
    record_from(AlgorithmKind::SmoothGreedy, &sp.base(), assignment, total, None)
}

/// Greedy until the accumulated load strictly exceeds `R`, then smooth
/// greedy over the remaining jobs from a fresh load vector.
pub fn run_ultimate(inst: &Instance, sp: &SmoothingParams) -> RunRecord {
    let mut policy = UltimatePolicy::new(*sp, inst.n());
    let (assignment, total) = drive(&mut policy, inst);
    let switch = Some(policy.switch_time().unwrap_or(inst.n()));
    record_from(AlgorithmKind::Ultimate, &sp.base(), assignment, total, switch)
}

/// Run any of the four algorithms; the smoothing parameters must share the
/// norm parameters' exponent.
pub fn run_algorithm(
    kind: AlgorithmKind,
    inst: &Instance,
    params: &PNormParams,
    sp: &SmoothingParams,
) -> RunRecord {
    match kind {
        AlgorithmKind::Greedy => run_greedy(inst, params),
        AlgorithmKind::GreedyWr => run_greedy_wr(inst, params),
        AlgorithmKind::SmoothGreedy => run_smooth_greedy(inst, sp),
        AlgorithmKind::Ultimate => run_ultimate(inst, sp),
    }
}

/// Build a fresh policy of the given kind for an `n`-job horizon.
pub fn make_policy(
    kind: AlgorithmKind,
    params: &PNormParams,
    sp: &SmoothingParams,
    n: usize,
) -> Box<dyn OnlinePolicy> {
    match kind {
        AlgorithmKind::Greedy => Box::new(GreedyPolicy::new(*params)),
        AlgorithmKind::GreedyWr => Box::new(GreedyWrPolicy::new(*params, n)),
        AlgorithmKind::SmoothGreedy => Box::new(SmoothGreedyPolicy::new(*sp, n)),
        AlgorithmKind::Ultimate => Box::new(UltimatePolicy::new(*sp, n)),
    }
}

/// Check greedy's prefix-suffix guarantee at a cut point `tau` (1-based):
///
/// ```text
/// ||S^n||_p - 2^{1/p} ||S^{tau-1}||_p <= (p / ln(3/2)) * OPT(suffix)
/// ```
///
/// where `S^t` is greedy's load after `t` jobs and the right-hand side is
/// the exact optimum of the sub-instance `tau..n`. The inequality holds
/// outright when `||S^n||_p^p <= 2 ||S^{tau-1}||_p^p`, and that early exit
/// is taken before consulting the oracle.
pub fn check_greedy_suffix_guarantee(
    inst: &Instance,
    tau: usize,
    params: &PNormParams,
    cap: u64,
) -> Result<bool> {
    let n = inst.n();
    if tau == 0 || tau > n {
        return Err(Error::InvalidParameter(format!(
            "tau must lie in 1..={n}, got {tau}"
        )));
    }
    let p = params
        .finite_p()
        .ok_or_else(|| Error::InvalidParameter("guarantee check requires finite p".into()))?;

    let mut policy = GreedyPolicy::new(*params);
    let mut prefix_norm = 0.0;
    for (t, job) in inst.jobs().iter().enumerate() {
        policy.choose(job);
        if t + 1 == tau - 1 {
            prefix_norm = lp_norm(policy.load(), params);
        }
    }
    let full_norm = lp_norm(policy.load(), params);

    // case ||S^n||^p <= 2 ||S^{tau-1}||^p: the inequality holds outright
    // (compared in log space so large p cannot overflow)
    let prefix_dominates = if full_norm == 0.0 {
        true
    } else if prefix_norm == 0.0 {
        false
    } else {
        p * (full_norm.ln() - prefix_norm.ln()) <= 2.0_f64.ln()
    };
    if prefix_dominates {
        return Ok(true);
    }

    let suffix = inst.suffix(tau - 1);
    let suffix_opt = brute_force_opt(&suffix, params, cap).map_err(|e| match e {
        Error::EnumerationTooLarge { required, cap } => Error::OracleTooLarge { required, cap },
        other => other,
    })?;

    let lhs = full_norm - 2.0_f64.powf(1.0 / p) * prefix_norm;
    let rhs = (p / 1.5_f64.ln()) * suffix_opt.value;
    Ok(lhs <= rhs + 1e-9)
}
