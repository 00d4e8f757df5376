//! Experiment engine: seeded worst-case and random-order evaluation,
//! Monte-Carlo validators for the sampling-without-replacement inequalities,
//! and CSV/JSON/plot report output.
//!
//! Reproducibility contract: a config plus master seed pins every byte of
//! the report. Trial `i` draws its permutation from a ChaCha stream seeded
//! with `master_seed + i`; trials may run in parallel but are reduced in
//! trial order.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::balancing::{
    run_algorithm, AlgorithmKind, Instance, OrderMode, RunRecord,
};
use crate::error::{Error, Result};
use crate::instances::{gen_walsh_instance, read_instance_from_path};
use crate::offline::{opt_bound_with, OptKind, OptMode};
use crate::smoothing::{
    dot, effective_p, lp_norm, smoothed_norm_gradient, PNorm, PNormParams, SmoothingParams,
};

pub use crate::offline::DEFAULT_ENUMERATION_CAP;

pub const REPORT_SCHEMA: u32 = 1;

/// Salt so the Walsh coin stream never overlaps the permutation stream.
const WALSH_COIN_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone)]
pub enum InstanceSource {
    Memory(Instance),
    File(PathBuf),
    /// Regenerate the Walsh instance with fresh coins every trial; the
    /// family's optimum is the same for every coin outcome.
    WalshResampled { p: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSpec {
    Given,
    Random { trials: u64, master_seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidParameter(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: InstanceSource,
    pub algorithms: Vec<AlgorithmKind>,
    pub p: PNorm,
    pub eps: f64,
    pub order: OrderSpec,
    pub opt_mode: OptMode,
    pub cap: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderSummary {
    pub mode: OrderMode,
    pub trials: u64,
    pub master_seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmAggregate {
    pub algorithm: AlgorithmKind,
    pub runs: u64,
    pub mean_load: f64,
    pub std_load: f64,
    pub max_load: f64,
    pub mean_ratio: Option<f64>,
}

/// One inequality with explicit constants, checked against the report.
/// Deterministic bounds must hold per run (tolerance 1e-9); expectation
/// bounds compare the empirical mean at three standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub algorithm: AlgorithmKind,
    pub name: String,
    pub observed: f64,
    pub threshold: f64,
    pub std_err: Option<f64>,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub m: usize,
    pub n: usize,
    pub requested_p: PNorm,
    /// Finite exponent the algorithms actually ran under.
    pub run_p: f64,
    pub eps: f64,
    pub order: OrderSummary,
    pub opt_value: f64,
    pub opt_kind: OptKind,
    pub records: Vec<RunRecord>,
    pub aggregates: Vec<AlgorithmAggregate>,
    pub bounds: Vec<BoundCheck>,
}

impl ExperimentReport {
    pub fn all_bounds_satisfied(&self) -> bool {
        self.bounds.iter().all(|b| b.satisfied)
    }
}

fn deterministic_ok(observed: f64, threshold: f64) -> bool {
    observed <= threshold + 1e-9 * threshold.abs().max(1.0)
}

struct LoadStats {
    mean: f64,
    std: f64,
    max: f64,
    n: u64,
}

fn load_stats(xs: impl Iterator<Item = f64>) -> LoadStats {
    let xs: Vec<f64> = xs.collect();
    let n = xs.len() as u64;
    if n == 0 {
        return LoadStats {
            mean: 0.0,
            std: 0.0,
            max: 0.0,
            n,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0)
    } else {
        0.0
    };
    LoadStats {
        mean,
        std: var.sqrt(),
        max: xs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
        n,
    }
}

/// Uniform permutation of `0..n` by Fisher-Yates on the given stream.
pub fn sample_permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Run the configured experiment. Fixed order runs each algorithm once;
/// random order runs every algorithm on `trials` independently permuted
/// copies of the instance. Explicit-constant guarantees are attached as
/// bound checks where they apply; max-norm requests run at a finite
/// surrogate exponent and report no bound flags.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let base_instance = match &cfg.source {
        InstanceSource::Memory(inst) => Some(inst.clone()),
        InstanceSource::File(path) => Some(read_instance_from_path(path)?),
        InstanceSource::WalshResampled { .. } => None,
    };

    let (m, n) = match (&cfg.source, &base_instance) {
        (InstanceSource::WalshResampled { p }, _) => {
            if cfg.p == PNorm::Inf {
                return Err(Error::InvalidParameter(
                    "the resampled Walsh source records a finite-p optimum; run it at its own p"
                        .into(),
                ));
            }
            (1usize << *p, *p as usize)
        }
        (_, Some(inst)) => (inst.m(), inst.n()),
        _ => unreachable!(),
    };

    let run_p = match cfg.p {
        PNorm::Finite(p) => p,
        PNorm::Inf => effective_p(m, cfg.eps),
    };
    let params = PNormParams::finite(run_p, m)?;
    let sp = SmoothingParams::from_params(params, cfg.eps)?;
    // optimum in the norm the user asked about
    let opt_params = match cfg.p {
        PNorm::Finite(_) => params,
        PNorm::Inf => PNormParams::inf(m)?,
    };

    let opt = match (&cfg.source, &base_instance) {
        (InstanceSource::WalshResampled { p }, _) => {
            // same analytic optimum for every coin outcome
            let probe = gen_walsh_instance(*p, 0)?;
            opt_bound_with(&probe, &opt_params, OptMode::Analytic, cfg.cap)?
        }
        (_, Some(inst)) => opt_bound_with(inst, &opt_params, cfg.opt_mode, cfg.cap)?,
        _ => unreachable!(),
    };

    let decorate = |rec: RunRecord| -> RunRecord {
        match cfg.p {
            PNorm::Finite(_) => rec.with_opt(&opt),
            PNorm::Inf => rec.with_opt_linf(&opt),
        }
    };

    let (records, order_summary) = match cfg.order {
        OrderSpec::Given => {
            let inst = base_instance.as_ref().ok_or_else(|| {
                Error::InvalidParameter(
                    "resampled instance sources need random order".into(),
                )
            })?;
            let records = cfg
                .algorithms
                .iter()
                .map(|&alg| decorate(run_algorithm(alg, inst, &params, &sp)))
                .collect();
            (
                records,
                OrderSummary {
                    mode: OrderMode::Given,
                    trials: 1,
                    master_seed: None,
                },
            )
        }
        OrderSpec::Random {
            trials,
            master_seed,
        } => {
            let per_trial: Vec<Vec<RunRecord>> = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let trial_seed = master_seed.wrapping_add(trial);
                    let inst = match &cfg.source {
                        InstanceSource::WalshResampled { p } => {
                            gen_walsh_instance(*p, trial_seed ^ WALSH_COIN_SALT)
                                .expect("validated above")
                        }
                        _ => base_instance.clone().expect("present"),
                    };
                    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
                    let order = sample_permutation(inst.n(), &mut rng);
                    let shuffled = inst.permuted(&order);
                    cfg.algorithms
                        .iter()
                        .map(|&alg| {
                            let mut rec =
                                decorate(run_algorithm(alg, &shuffled, &params, &sp));
                            rec.order = OrderMode::Random;
                            rec.trial = Some(trial);
                            rec.seed = Some(trial_seed);
                            rec
                        })
                        .collect()
                })
                .collect();
            (
                per_trial.into_iter().flatten().collect::<Vec<_>>(),
                OrderSummary {
                    mode: OrderMode::Random,
                    trials,
                    master_seed: Some(master_seed),
                },
            )
        }
    };

    let aggregates: Vec<AlgorithmAggregate> = cfg
        .algorithms
        .iter()
        .map(|&alg| {
            let loads = records
                .iter()
                .filter(|r| r.algorithm == alg)
                .map(|r| match cfg.p {
                    PNorm::Finite(_) => r.final_load,
                    PNorm::Inf => r.linf_load,
                });
            let stats = load_stats(loads);
            let ratios: Vec<f64> = records
                .iter()
                .filter(|r| r.algorithm == alg)
                .filter_map(|r| r.ratio)
                .collect();
            AlgorithmAggregate {
                algorithm: alg,
                runs: stats.n,
                mean_load: stats.mean,
                std_load: stats.std,
                max_load: if stats.n == 0 { 0.0 } else { stats.max },
                mean_ratio: if ratios.len() == stats.n as usize && stats.n > 0 {
                    Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
                } else {
                    None
                },
            }
        })
        .collect();

    let bounds = match cfg.p {
        PNorm::Inf => Vec::new(),
        PNorm::Finite(_) => collect_bounds(cfg, &aggregates, run_p, m, sp.radius(), opt.value),
    };

    Ok(ExperimentReport {
        schema: REPORT_SCHEMA,
        m,
        n,
        requested_p: cfg.p,
        run_p,
        eps: cfg.eps,
        order: order_summary,
        opt_value: opt.value,
        opt_kind: opt.kind,
        records,
        aggregates,
        bounds,
    })
}

/// Explicit-constant guarantees:
///
/// - greedy, any order:      load <= (p / ln(3/2)) * OPT
/// - smooth_greedy, any:     load <= (2p / ln(3/2)) * OPT + 4R
/// - greedy_wr, random:      E load <= (1 + 4 eps) * OPT + (3p+1) m^{1-1/p} / eps
/// - smooth_greedy, random:  E load <= e^{2 eps} * (OPT + 4R)
/// - ultimate, random:       E load <= (1 + 4 eps) * (OPT + 6R)
fn collect_bounds(
    cfg: &ExperimentConfig,
    aggregates: &[AlgorithmAggregate],
    p: f64,
    m: usize,
    radius: f64,
    opt: f64,
) -> Vec<BoundCheck> {
    let eps = cfg.eps;
    let ln32 = 1.5_f64.ln();
    let random = matches!(cfg.order, OrderSpec::Random { .. });
    let mut bounds = Vec::new();

    for agg in aggregates {
        if agg.runs == 0 {
            continue;
        }
        let se = agg.std_load / (agg.runs as f64).sqrt();
        match agg.algorithm {
            AlgorithmKind::Greedy => {
                let threshold = (p / ln32) * opt;
                bounds.push(BoundCheck {
                    algorithm: agg.algorithm,
                    name: "greedy_worst_case".into(),
                    observed: agg.max_load,
                    threshold,
                    std_err: None,
                    satisfied: deterministic_ok(agg.max_load, threshold),
                });
            }
            AlgorithmKind::GreedyWr => {
                if random {
                    let threshold = (1.0 + 4.0 * eps) * opt
                        + (3.0 * p + 1.0) * (m as f64).powf(1.0 - 1.0 / p) / eps;
                    bounds.push(BoundCheck {
                        algorithm: agg.algorithm,
                        name: "greedy_wr_random_order".into(),
                        observed: agg.mean_load,
                        threshold,
                        std_err: Some(se),
                        satisfied: agg.mean_load <= threshold + 3.0 * se,
                    });
                }
            }
            AlgorithmKind::SmoothGreedy => {
                let threshold = (2.0 * p / ln32) * opt + 4.0 * radius;
                bounds.push(BoundCheck {
                    algorithm: agg.algorithm,
                    name: "smooth_greedy_worst_case".into(),
                    observed: agg.max_load,
                    threshold,
                    std_err: None,
                    satisfied: deterministic_ok(agg.max_load, threshold),
                });
                if random {
                    let threshold = (2.0 * eps).exp() * (opt + 4.0 * radius);
                    bounds.push(BoundCheck {
                        algorithm: agg.algorithm,
                        name: "smooth_greedy_random_order".into(),
                        observed: agg.mean_load,
                        threshold,
                        std_err: Some(se),
                        satisfied: agg.mean_load <= threshold + 3.0 * se,
                    });
                }
            }
            AlgorithmKind::Ultimate => {
                if random {
                    let threshold = (1.0 + 4.0 * eps) * (opt + 6.0 * radius);
                    bounds.push(BoundCheck {
                        algorithm: agg.algorithm,
                        name: "ultimate_random_order".into(),
                        observed: agg.mean_load,
                        threshold,
                        std_err: Some(se),
                        satisfied: agg.mean_load <= threshold + 3.0 * se,
                    });
                }
            }
        }
    }
    bounds
}

// ---------------------------------------------------------------------------
// Monte-Carlo validators for the without-replacement inequalities
// ---------------------------------------------------------------------------

/// Outcome of one Monte-Carlo validation.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationRecord {
    pub name: String,
    /// The sample-size parameter (kappa for the sum bound, t for the
    /// adaptive inner-product bound).
    pub param: usize,
    pub lhs_mean: f64,
    pub std_err: f64,
    pub rhs: f64,
    pub trials: u64,
    pub satisfied: bool,
}

fn set_mean(vectors: &[Vec<f64>], m: usize) -> Vec<f64> {
    let mut mean = vec![0.0; m];
    for v in vectors {
        for (a, b) in mean.iter_mut().zip(v) {
            *a += b;
        }
    }
    let n = vectors.len() as f64;
    mean.iter_mut().for_each(|x| *x /= n);
    mean
}

fn monte_carlo(samples: &[f64]) -> (f64, f64) {
    let stats = load_stats(samples.iter().copied());
    (stats.mean, stats.std / (stats.n as f64).sqrt())
}

/// Uniformly ordered sample of `t` distinct indices from `0..n` (partial
/// Fisher-Yates). The order matters: the adaptive validator treats the last
/// draw as the distinguished one.
fn sample_ordered(rng: &mut impl Rng, n: usize, t: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..t {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(t);
    pool
}

/// Estimate `E || Y^1 + ... + Y^kappa ||_p` for `kappa` vectors sampled
/// without replacement and compare against
/// `e^eps * ||sum of expectations||_p + R`. Passes when the empirical mean
/// stays within three standard errors of the bound.
pub fn validate_sample_sum_norm(
    vectors: &[Vec<f64>],
    kappa: usize,
    eps: f64,
    params: &PNormParams,
    trials: u64,
    seed: u64,
) -> ValidationRecord {
    let n = vectors.len();
    let m = params.m();
    assert!(kappa >= 1 && kappa <= n, "kappa must lie in 1..=n");
    assert!(trials >= 1000, "need at least 1000 trials");
    let sp = SmoothingParams::from_params(*params, eps).expect("finite p");

    let mean = set_mean(vectors, m);
    let scaled: Vec<f64> = mean.iter().map(|&x| x * kappa as f64).collect();
    let rhs = eps.exp() * lp_norm(&scaled, params) + sp.radius();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..trials)
        .map(|_| {
            let chosen = sample_ordered(&mut rng, n, kappa);
            let mut sum = vec![0.0; m];
            for idx in chosen {
                for (a, b) in sum.iter_mut().zip(&vectors[idx]) {
                    *a += b;
                }
            }
            lp_norm(&sum, params)
        })
        .collect();
    let (lhs_mean, std_err) = monte_carlo(&samples);

    ValidationRecord {
        name: "sample_sum_norm".into(),
        param: kappa,
        lhs_mean,
        std_err,
        rhs,
        trials,
        satisfied: lhs_mean <= rhs + 3.0 * std_err,
    }
}

/// Estimate `E <Y^t, Z>` where `Z` is the smoothed-norm gradient of the
/// first `t-1` samples (a feasible dual vector that depends only on the
/// prefix) and compare against
/// `e^eps * ||E Y^t||_p + R / (n - (t-1))`.
pub fn validate_adaptive_inner_product(
    vectors: &[Vec<f64>],
    t: usize,
    eps: f64,
    params: &PNormParams,
    trials: u64,
    seed: u64,
) -> ValidationRecord {
    let n = vectors.len();
    let m = params.m();
    assert!(t >= 1 && t <= n, "t must lie in 1..=n");
    assert!(trials >= 1000, "need at least 1000 trials");
    let sp = SmoothingParams::from_params(*params, eps).expect("finite p");

    let mean = set_mean(vectors, m);
    let rhs = eps.exp() * lp_norm(&mean, params) + sp.radius() / (n - (t - 1)) as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..trials)
        .map(|_| {
            let idx = sample_ordered(&mut rng, n, t);
            let mut prefix = vec![0.0; m];
            for &i in &idx[..t - 1] {
                for (a, b) in prefix.iter_mut().zip(&vectors[i]) {
                    *a += b;
                }
            }
            let z = smoothed_norm_gradient(&prefix, &sp);
            dot(&vectors[idx[t - 1]], &z)
        })
        .collect();
    let (lhs_mean, std_err) = monte_carlo(&samples);

    ValidationRecord {
        name: "adaptive_inner_product".into(),
        param: t,
        lhs_mean,
        std_err,
        rhs,
        trials,
        satisfied: lhs_mean <= rhs + 3.0 * std_err,
    }
}

/// Seeded 0/1 vector sets for validator fixtures.
pub fn random_binary_vector_sets(
    num_sets: usize,
    n: usize,
    m: usize,
    seed: u64,
) -> Vec<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_sets)
        .map(|_| {
            (0..n)
                .map(|_| {
                    (0..m)
                        .map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// OLO benchmark sequences
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OloSequence {
    /// Entries uniform in [0,1).
    Uniform,
    /// The first unit vector every round.
    SpikeFirst,
    /// The all-ones vector every round.
    AllOnes,
    /// A unit spike rotating through the coordinates.
    RotatingSpikes,
}

impl std::str::FromStr for OloSequence {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(OloSequence::Uniform),
            "spike-first" => Ok(OloSequence::SpikeFirst),
            "all-ones" => Ok(OloSequence::AllOnes),
            "rotating-spikes" => Ok(OloSequence::RotatingSpikes),
            other => Err(Error::InvalidParameter(format!(
                "unknown sequence '{other}' (expected uniform, spike-first, all-ones, rotating-spikes)"
            ))),
        }
    }
}

pub fn gen_olo_sequence(
    family: OloSequence,
    n: usize,
    m: usize,
    rng: &mut impl Rng,
) -> Vec<Vec<f64>> {
    (0..n)
        .map(|t| match family {
            OloSequence::Uniform => (0..m).map(|_| rng.gen::<f64>()).collect(),
            OloSequence::SpikeFirst => {
                let mut w = vec![0.0; m];
                w[0] = 1.0;
                w
            }
            OloSequence::AllOnes => vec![1.0; m],
            OloSequence::RotatingSpikes => {
                let mut w = vec![0.0; m];
                w[t % m] = 1.0;
                w
            }
        })
        .collect()
}

/// One OLO game per trial, each on a fresh sequence from the family drawn
/// with seed `master_seed + trial`.
#[derive(Debug, Clone, Serialize)]
pub struct OloBenchReport {
    pub schema: u32,
    pub m: usize,
    pub p: f64,
    pub eps: f64,
    pub n: usize,
    pub trials: u64,
    pub master_seed: u64,
    pub runs: Vec<crate::olo::RegretRecord>,
    pub all_bounds_satisfied: bool,
}

pub fn run_olo_bench(
    family: OloSequence,
    n: usize,
    m: usize,
    p: f64,
    eps: f64,
    trials: u64,
    master_seed: u64,
) -> Result<OloBenchReport> {
    let sp = SmoothingParams::new(p, m, eps)?;
    let runs: Vec<crate::olo::RegretRecord> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed.wrapping_add(trial));
            let ws = gen_olo_sequence(family, n, m, &mut rng);
            crate::olo::run_olo_game(&ws, &sp)
        })
        .collect::<Result<Vec<_>>>()?;
    let all = runs
        .iter()
        .all(|r| r.bound_satisfied && r.telescoping_satisfied);
    Ok(OloBenchReport {
        schema: REPORT_SCHEMA,
        m,
        p,
        eps,
        n,
        trials,
        master_seed,
        runs,
        all_bounds_satisfied: all,
    })
}

/// Run one OLO game over vectors taken from an instance file; every job must
/// have a single option (k = 1).
pub fn run_olo_from_instance(inst: &Instance, p: f64, eps: f64) -> Result<OloBenchReport> {
    let m = inst.m();
    let ws: Vec<Vec<f64>> = inst
        .jobs()
        .iter()
        .map(|job| {
            if job.k() != 1 {
                return Err(Error::InvalidParameter(
                    "OLO sequences need k = 1 jobs (one adversary vector per round)".into(),
                ));
            }
            Ok(job.column(0).to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    let sp = SmoothingParams::new(p, m, eps)?;
    let rec = crate::olo::run_olo_game(&ws, &sp)?;
    let all = rec.bound_satisfied && rec.telescoping_satisfied;
    Ok(OloBenchReport {
        schema: REPORT_SCHEMA,
        m,
        p,
        eps,
        n: ws.len(),
        trials: 1,
        master_seed: 0,
        runs: vec![rec],
        all_bounds_satisfied: all,
    })
}

/// Validator sweep over seeded 0/1 fixture sets: the sum bound at
/// `kappa in {2, ceil(n/2), n}` and the adaptive bound at `t in {1, ceil(n/2)}`
/// per set.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub schema: u32,
    pub m: usize,
    pub p: f64,
    pub eps: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub records: Vec<(usize, ValidationRecord)>,
    pub all_satisfied: bool,
}

pub fn run_validation_suite(
    num_sets: usize,
    vectors_per_set: usize,
    m: usize,
    p: f64,
    eps: f64,
    trials: u64,
    master_seed: u64,
) -> Result<ValidationReport> {
    let params = PNormParams::finite(p, m)?;
    let n = vectors_per_set;
    if n < 2 {
        return Err(Error::InvalidParameter("need at least 2 vectors per set".into()));
    }
    let sets = random_binary_vector_sets(num_sets, n, m, master_seed);
    let kappas = {
        let mut ks = vec![2, n.div_ceil(2), n];
        ks.sort_unstable();
        ks.dedup();
        ks
    };
    let ts = {
        let mut ts = vec![1, n.div_ceil(2)];
        ts.sort_unstable();
        ts.dedup();
        ts
    };
    let records: Vec<(usize, ValidationRecord)> = sets
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, set)| {
            let seed = master_seed.wrapping_add(i as u64);
            let mut recs = Vec::new();
            for &kappa in &kappas {
                recs.push((i, validate_sample_sum_norm(set, kappa, eps, &params, trials, seed)));
            }
            for &t in &ts {
                recs.push((
                    i,
                    validate_adaptive_inner_product(set, t, eps, &params, trials, seed),
                ));
            }
            recs
        })
        .collect();
    let all = records.iter().all(|(_, r)| r.satisfied);
    Ok(ValidationReport {
        schema: REPORT_SCHEMA,
        m,
        p,
        eps,
        trials,
        master_seed,
        records,
        all_satisfied: all,
    })
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

fn csv_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// CSV: one row per run, aggregate and bound footer rows prefixed `#agg`.
pub fn write_csv<W: Write>(report: &ExperimentReport, mut w: W) -> Result<()> {
    writeln!(
        w,
        "trial,algorithm,order,seed,load,linf_load,opt_bound,opt_kind,ratio,switch_time"
    )?;
    for r in &report.records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_opt(&r.trial),
            r.algorithm,
            r.order,
            csv_opt(&r.seed),
            r.final_load,
            r.linf_load,
            csv_opt(&r.opt_bound),
            r.opt_kind.map(|k| k.as_str()).unwrap_or(""),
            csv_opt(&r.ratio),
            csv_opt(&r.switch_time),
        )?;
    }
    for a in &report.aggregates {
        writeln!(
            w,
            "#agg,stats,{},{},{},{},{},{}",
            a.algorithm,
            a.runs,
            a.mean_load,
            a.std_load,
            a.max_load,
            csv_opt(&a.mean_ratio),
        )?;
    }
    for b in &report.bounds {
        writeln!(
            w,
            "#agg,bound,{},{},{},{},{},{}",
            b.algorithm,
            b.name,
            b.observed,
            b.threshold,
            csv_opt(&b.std_err),
            if b.satisfied { "pass" } else { "fail" },
        )?;
    }
    Ok(())
}

pub fn write_json<W: Write>(report: &ExperimentReport, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, report).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Serialize the whole report, then write it in one shot (partial reports
/// are never emitted). `None` writes to stdout.
pub fn emit_report(
    report: &ExperimentReport,
    format: ReportFormat,
    out: Option<&Path>,
) -> Result<()> {
    let mut buf = Vec::new();
    match format {
        ReportFormat::Csv => write_csv(report, &mut buf)?,
        ReportFormat::Json => {
            write_json(report, &mut buf)?;
            buf.push(b'\n');
        }
    }
    match out {
        Some(path) => std::fs::write(path, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

/// Two-column series per algorithm (`<trial> <load>`), one file each, for
/// external plotters.
pub fn write_plot_series(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for agg in &report.aggregates {
        let mut buf = String::new();
        for (i, r) in report
            .records
            .iter()
            .filter(|r| r.algorithm == agg.algorithm)
            .enumerate()
        {
            let x = r.trial.unwrap_or(i as u64);
            buf.push_str(&format!("{} {}\n", x, r.final_load));
        }
        std::fs::write(dir.join(format!("{}.dat", agg.algorithm)), buf)?;
    }
    Ok(())
}

/// Parameter-sweep series: one `<alg>_sweep.dat` per algorithm with rows
/// `<sweep value> <mean load>`, taken from a report per sweep point.
pub fn write_sweep_series(points: &[(f64, ExperimentReport)], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut algs: Vec<AlgorithmKind> = Vec::new();
    for (_, report) in points {
        for agg in &report.aggregates {
            if !algs.contains(&agg.algorithm) {
                algs.push(agg.algorithm);
            }
        }
    }
    for alg in algs {
        let mut buf = String::new();
        for (x, report) in points {
            if let Some(agg) = report.aggregates.iter().find(|a| a.algorithm == alg) {
                buf.push_str(&format!("{} {}\n", x, agg.mean_load));
            }
        }
        std::fs::write(dir.join(format!("{alg}_sweep.dat")), buf)?;
    }
    Ok(())
}
