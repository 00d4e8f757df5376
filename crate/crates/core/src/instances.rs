//! Constructive instance families and the instance file format.
//!
//! Three named families exercise the algorithms where it hurts:
//!
//! - `uniform_vs_single`: every job chooses between a little load everywhere
//!   and a unit spike on its own machine; norm-greedy algorithms take the
//!   spread option every time and end with an `m(1-eps)` makespan against an
//!   optimum of 1.
//! - the Walsh family: jobs built from complementary 0/1 column pairs of the
//!   all-bit-strings matrix; the total ℓ1 load is fixed, so the optimum is
//!   pinned while online algorithms provably regret mismatched pairings even
//!   in random order.
//! - the adaptive pairing adversary: feeds unit jobs on machine pairs,
//!   watches where the algorithm puts them, and keeps only the heavier
//!   machine of each pair active for the next round.
//!
//! Instance files are JSON with fields `m`, `jobs` (row-major entry arrays,
//! `k` inferred as `len/m`), and optional `analytic_opt`/`provenance`.
//! Floats are written with 17 significant digits so files round-trip
//! bit-exactly.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::balancing::{Assignment, Instance, JobMatrix, OnlinePolicy};
use crate::error::{Error, Result};
use crate::smoothing::root_p;

/// Columns of the `m x d` matrix whose rows enumerate all `d`-bit strings in
/// increasing binary order. Column `i` (0-based) flips every `2^(d-1-i)`
/// rows, has exactly `m/2` ones, and any sub-collection (complemented or
/// not) intersects in exactly `m / 2^{|I|}` coordinates.
#[derive(Debug, Clone)]
pub struct WalshSystem {
    d: u32,
    m: usize,
    vectors: Vec<Vec<u8>>,
}

impl WalshSystem {
    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// The `i`-th column (0-based), entries 0/1.
    pub fn vector(&self, i: usize) -> &[u8] {
        &self.vectors[i]
    }

    pub fn complement(&self, i: usize) -> Vec<u8> {
        self.vectors[i].iter().map(|&b| 1 - b).collect()
    }
}

/// Build the Walsh system of dimension `d` (so `m = 2^d`). The intersection
/// property is verified exhaustively on construction for `d <= 6`.
pub fn walsh_vectors(d: u32) -> Result<WalshSystem> {
    if !(1..=20).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "walsh dimension must lie in 1..=20, got {d}"
        )));
    }
    let m = 1usize << d;
    let vectors: Vec<Vec<u8>> = (0..d)
        .map(|i| {
            (0..m)
                .map(|r| ((r >> (d - 1 - i)) & 1) as u8)
                .collect()
        })
        .collect();
    let sys = WalshSystem { d, m, vectors };

    if d <= 6 {
        for mask in 1u32..(1 << d) {
            let idxs: Vec<usize> = (0..d as usize).filter(|&i| mask >> i & 1 == 1).collect();
            for pattern in 0u32..(1 << idxs.len()) {
                let count = (0..m)
                    .filter(|&r| {
                        idxs.iter().enumerate().all(|(pos, &i)| {
                            let bit = sys.vectors[i][r];
                            let want = if pattern >> pos & 1 == 1 { 0 } else { 1 };
                            bit == want
                        })
                    })
                    .count();
                assert_eq!(
                    count,
                    m >> idxs.len(),
                    "walsh intersection broken at mask {mask:#b}, pattern {pattern:#b}"
                );
            }
        }
    }
    Ok(sys)
}

/// `m` jobs; job `i` chooses between `(1-eps, ..., 1-eps)` and the unit
/// spike `e^i`. The recorded optimum 1 is in the max-norm sense (take every
/// spike; each machine ends at exactly 1).
pub fn gen_uniform_vs_single(m: usize, eps: f64) -> Result<Instance> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    if eps.is_nan() || eps <= 0.0 || eps >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0,1), got {eps}"
        )));
    }
    let spread = vec![1.0 - eps; m];
    let jobs = (0..m)
        .map(|i| {
            let mut spike = vec![0.0; m];
            spike[i] = 1.0;
            JobMatrix::from_columns(vec![spread.clone(), spike])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance::new(m, jobs)?.with_analytic_opt(
        1.0,
        format!("uniform_vs_single(m={m}, eps={eps}); max-norm optimum"),
    ))
}

/// The Walsh random-order family for even `p >= 2`: `m = 2^p` machines and
/// `p` jobs. For each `i < p/2` there is one forced job whose only option is
/// a coin flip between column `i` and its complement, and one choice job
/// offering both. Matching every choice job against its forced partner gives
/// the constant load vector `(p/2, ..., p/2)`; since every column carries
/// exactly `m/2` ones, the total ℓ1 load is `m*p/2` for any assignment and
/// the optimum is exactly `p * m^{1/p} / 2`.
pub fn gen_walsh_instance(p: u32, coin_seed: u64) -> Result<Instance> {
    if p < 2 || !p.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "walsh family needs even p >= 2, got {p}"
        )));
    }
    if p > 20 {
        return Err(Error::InvalidParameter(format!(
            "walsh family caps at p = 20 (m = 2^20), got {p}"
        )));
    }
    let sys = walsh_vectors(p)?;
    let m = sys.m();
    let mut rng = ChaCha8Rng::seed_from_u64(coin_seed);
    let mut jobs = Vec::with_capacity(p as usize);
    for i in 0..(p / 2) as usize {
        let v: Vec<f64> = sys.vector(i).iter().map(|&b| b as f64).collect();
        let vc: Vec<f64> = sys.complement(i).iter().map(|&b| b as f64).collect();
        let forced = if rng.gen::<bool>() { v.clone() } else { vc.clone() };
        jobs.push(JobMatrix::from_columns(vec![forced])?);
        jobs.push(JobMatrix::from_columns(vec![v, vc])?);
    }
    let opt = (p as f64 / 2.0) * root_p(m as f64, p as f64);
    Ok(Instance::new(m, jobs)?
        .with_analytic_opt(opt, format!("walsh(p={p}); optimum p*m^(1/p)/2")))
}

/// One round of the adaptive adversary: the machines that were active going
/// in, how they were paired, and which machine of each pair was dropped.
#[derive(Debug, Clone, Serialize)]
pub struct AdversaryRound {
    pub active: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
    pub deactivated: Vec<usize>,
}

/// Full interaction of the adaptive adversary with one algorithm.
#[derive(Debug, Clone)]
pub struct AdversaryTranscript {
    pub m: usize,
    pub p: u32,
    pub copies: u64,
    pub rounds: Vec<AdversaryRound>,
    pub instance: Instance,
    /// What the algorithm under attack actually chose.
    pub algorithm_assignment: Assignment,
    /// Round-spreading schedule: each pair's jobs all land on the machine
    /// that was deactivated, so its load vector is `copies` on every
    /// deactivated machine and 0 on the lone survivor.
    pub witness_assignment: Assignment,
    /// `copies * m^{1/p}`, an upper bound on the offline optimum.
    pub opt_upper: f64,
}

/// Drive the pairing adversary against a deterministic online algorithm.
///
/// With `m = 2^{p+1}` machines and `log2(m)` rounds: each round pairs the
/// active machines in ascending index order and sends `copies` jobs per pair
/// `{a, b}`, each with the two options `e^a`, `e^b`. After a round, the pair
/// member that received the smaller share (ties: the lower index) is
/// deactivated. Survivors therefore carry at least `copies/2` load from
/// every round they lived through, while the witness spreads each pair's
/// jobs on the machine about to be dropped.
pub fn gen_adaptive_adversary(
    policy: &mut dyn OnlinePolicy,
    copies: u64,
    p: u32,
) -> Result<AdversaryTranscript> {
    if !policy.is_deterministic() {
        return Err(Error::NondeterministicAlgorithm);
    }
    if !(2..=15).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "adversary needs 2 <= p <= 15 (m = 2^{{p+1}} <= 2^16), got {p}"
        )));
    }
    if copies == 0 {
        return Err(Error::InvalidParameter("copies must be >= 1".into()));
    }
    let m = 1usize << (p + 1);
    let log_m = p + 1;

    let mut active: Vec<usize> = (0..m).collect();
    let mut rounds = Vec::with_capacity(log_m as usize);
    let mut jobs = Vec::new();
    let mut alg_choices = Vec::new();
    let mut job_origin = Vec::new(); // (round index, pair index)

    for round_idx in 0..log_m as usize {
        let pairs: Vec<(usize, usize)> = active.chunks(2).map(|c| (c[0], c[1])).collect();
        let mut round_load = vec![0u64; m];
        for (pair_idx, &(a, b)) in pairs.iter().enumerate() {
            let mut ea = vec![0.0; m];
            let mut eb = vec![0.0; m];
            ea[a] = 1.0;
            eb[b] = 1.0;
            let job = JobMatrix::from_columns(vec![ea, eb])?;
            for _ in 0..copies {
                let choice = policy.choose(&job);
                let machine = if choice == 0 { a } else { b };
                round_load[machine] += 1;
                jobs.push(job.clone());
                alg_choices.push(choice);
                job_origin.push((round_idx, pair_idx));
            }
        }
        let mut deactivated = Vec::with_capacity(pairs.len());
        let mut next_active = Vec::with_capacity(pairs.len());
        for &(a, b) in &pairs {
            // drop the lighter machine; ties drop the lower index
            let drop = if round_load[a] <= round_load[b] { a } else { b };
            deactivated.push(drop);
            next_active.push(if drop == a { b } else { a });
        }
        rounds.push(AdversaryRound {
            active: active.clone(),
            pairs,
            deactivated,
        });
        active = next_active;
    }

    let witness_choices: Vec<usize> = job_origin
        .iter()
        .map(|&(ri, pi)| {
            let (a, _) = rounds[ri].pairs[pi];
            let drop = rounds[ri].deactivated[pi];
            if drop == a {
                0
            } else {
                1
            }
        })
        .collect();

    let opt_upper = copies as f64 * root_p(m as f64, p as f64);
    let instance = Instance::new(m, jobs)?;
    Ok(AdversaryTranscript {
        m,
        p,
        copies,
        rounds,
        instance,
        algorithm_assignment: Assignment::new(alg_choices),
        witness_assignment: Assignment::new(witness_choices),
        opt_upper,
    })
}

/// Entry distribution for random instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntryDistribution {
    /// Every entry uniform in `[0,1)`.
    Uniform,
    /// Every entry 1 with the given probability, else 0.
    Bernoulli(f64),
    /// Per column, this many machines get a uniform `(0,1]` load, the rest 0.
    Sparse(usize),
}

/// Seeded random instance; the same seed always reproduces the same bytes.
pub fn gen_random(
    m: usize,
    k: usize,
    n: usize,
    seed: u64,
    dist: EntryDistribution,
) -> Result<Instance> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidParameter("m and k must be >= 1".into()));
    }
    if let EntryDistribution::Bernoulli(rho) = dist {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!(
                "bernoulli probability must lie in [0,1], got {rho}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs = (0..n)
        .map(|_| {
            let cols: Vec<Vec<f64>> = (0..k)
                .map(|_| match dist {
                    EntryDistribution::Uniform => (0..m).map(|_| rng.gen::<f64>()).collect(),
                    EntryDistribution::Bernoulli(rho) => (0..m)
                        .map(|_| if rng.gen::<f64>() < rho { 1.0 } else { 0.0 })
                        .collect(),
                    EntryDistribution::Sparse(s) => {
                        let mut col = vec![0.0; m];
                        let mut idx: Vec<usize> = (0..m).collect();
                        idx.partial_shuffle(&mut rng, s.min(m));
                        for &i in idx.iter().take(s.min(m)) {
                            col[i] = 1.0 - rng.gen::<f64>();
                        }
                        col
                    }
                })
                .collect();
            JobMatrix::from_columns(cols)
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(m, jobs)
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    m: usize,
    jobs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    analytic_opt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
}

/// JSON formatter writing every float with 17 significant digits, enough to
/// reconstruct the exact f64 on read.
struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn write_instance<W: Write>(inst: &Instance, writer: W) -> Result<()> {
    let file = InstanceFile {
        m: inst.m(),
        jobs: inst.jobs().iter().map(|j| j.row_major()).collect(),
        analytic_opt: inst.analytic_opt().map(|a| a.value),
        provenance: inst.analytic_opt().map(|a| a.provenance.clone()),
    };
    let mut ser = serde_json::Serializer::with_formatter(writer, SigDigitFormatter);
    file.serialize(&mut ser).map_err(json_err)
}

pub fn write_instance_to_path<P: AsRef<Path>>(inst: &Instance, path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_instance(inst, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_instance<R: Read>(reader: R) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_reader(reader).map_err(json_err)?;
    if file.m == 0 {
        return Err(Error::Parse {
            line: 0,
            column: 0,
            message: "field m must be >= 1".into(),
        });
    }
    let jobs = file
        .jobs
        .iter()
        .enumerate()
        .map(|(t, entries)| {
            JobMatrix::from_row_major(file.m, entries).map_err(|e| match e {
                Error::Range {
                    position, value, ..
                } => Error::Range {
                    job: t,
                    position,
                    value,
                },
                Error::InvalidParameter(msg) => Error::Parse {
                    line: 0,
                    column: 0,
                    message: format!("job {t}: {msg}"),
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut inst = Instance::new(file.m, jobs)?;
    if let Some(value) = file.analytic_opt {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Parse {
                line: 0,
                column: 0,
                message: format!("analytic_opt must be finite and nonnegative, got {value}"),
            });
        }
        inst = inst.with_analytic_opt(value, file.provenance.unwrap_or_default());
    }
    Ok(inst)
}

pub fn read_instance_from_path<P: AsRef<Path>>(path: P) -> Result<Instance> {
    read_instance(BufReader::new(File::open(path)?))
}
