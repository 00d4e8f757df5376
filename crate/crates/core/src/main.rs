//! Command-line front end.
//!
//! Exit codes: 0 when every checked bound held, 2 when any bound was
//! violated, 1 on usage or IO errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use lpbal::balancing::{AlgorithmKind, GreedyPolicy, Instance};
use lpbal::harness::{
    emit_report, run_experiment, run_olo_bench, run_olo_from_instance, run_validation_suite,
    write_plot_series, ExperimentConfig, InstanceSource, OloSequence, OrderSpec, ReportFormat,
    DEFAULT_ENUMERATION_CAP,
};
use lpbal::instances::{
    gen_adaptive_adversary, gen_random, gen_uniform_vs_single, gen_walsh_instance,
    read_instance_from_path, write_instance_to_path, EntryDistribution,
};
use lpbal::offline::{opt_bound_with, OptCertificate, OptMode};
use lpbal::smoothing::{lp_norm, PNorm, PNormParams};
use lpbal::{Error, Result};

#[derive(Parser)]
#[command(name = "lpbal", version, about = "Online lp-norm load balancing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run load-balancing algorithms over an instance.
    Run(RunArgs),
    /// Benchmark the online linear optimization player.
    OloBench(OloArgs),
    /// Monte-Carlo validation of the sampling inequalities.
    Validate(ValidateArgs),
    /// Compute an offline optimum bound for an instance.
    Opt(OptArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Family: uniform-vs-single | walsh | random | adversary
    family: String,
    /// Machines (uniform-vs-single, random)
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// Options per job (random)
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Jobs (random)
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Spread-option load is 1-eps (uniform-vs-single)
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Norm exponent (walsh: even, sets m = 2^p; adversary: sets m = 2^(p+1))
    #[arg(long, default_value_t = 2)]
    p: u32,
    /// RNG / coin seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Entry distribution (random): uniform | bernoulli:<rho> | sparse:<s>
    #[arg(long, default_value = "uniform")]
    dist: String,
    /// Jobs per machine pair (adversary)
    #[arg(long, default_value_t = 1)]
    copies: u64,
    /// Output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Instance file to run on
    #[arg(long, conflicts_with = "walsh")]
    instance: Option<PathBuf>,
    /// Resample the Walsh family (given p) with fresh coins every trial
    #[arg(long)]
    walsh: Option<u32>,
    /// Comma-separated algorithms (greedy, greedy_wr, smooth_greedy, ultimate)
    #[arg(long, value_delimiter = ',', default_values_t = ["greedy".to_string(), "greedy_wr".to_string(), "smooth_greedy".to_string(), "ultimate".to_string()])]
    alg: Vec<String>,
    /// Norm exponent (>= 2) or "inf"
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// given | random
    #[arg(long, default_value = "given")]
    order: String,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// auto | analytic | brute | fractional
    #[arg(long, default_value = "auto")]
    opt_mode: String,
    /// Enumeration cap for the brute-force oracle
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
    /// csv | json
    #[arg(long, default_value = "csv")]
    format: String,
    /// Report path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-algorithm plot series into this directory
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct OloArgs {
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Rounds per game
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// uniform | spike-first | all-ones | rotating-spikes
    #[arg(long, default_value = "uniform")]
    seq: String,
    #[arg(long, default_value_t = 10)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Play the adversary vectors from an instance file (k = 1 jobs)
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Number of fixture vector sets
    #[arg(long, default_value_t = 50)]
    sets: usize,
    /// Vectors per set
    #[arg(long, default_value_t = 10)]
    vectors: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long, default_value = "auto")]
    opt_mode: String,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
}

fn parse_p(s: &str) -> Result<PNorm> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(PNorm::Inf);
    }
    let p: f64 = s
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse p '{s}'")))?;
    Ok(PNorm::Finite(p))
}

fn parse_opt_mode(s: &str) -> Result<OptMode> {
    match s {
        "auto" => Ok(OptMode::Auto),
        "analytic" => Ok(OptMode::Analytic),
        "brute" => Ok(OptMode::Brute),
        "fractional" => Ok(OptMode::Fractional),
        other => Err(Error::InvalidParameter(format!(
            "unknown opt mode '{other}' (expected auto, analytic, brute, fractional)"
        ))),
    }
}

fn parse_dist(s: &str) -> Result<EntryDistribution> {
    if s == "uniform" {
        return Ok(EntryDistribution::Uniform);
    }
    if let Some(rho) = s.strip_prefix("bernoulli:") {
        let rho: f64 = rho
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad bernoulli probability in '{s}'")))?;
        return Ok(EntryDistribution::Bernoulli(rho));
    }
    if let Some(sp) = s.strip_prefix("sparse:") {
        let sp: usize = sp
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad sparse count in '{s}'")))?;
        return Ok(EntryDistribution::Sparse(sp));
    }
    Err(Error::InvalidParameter(format!(
        "unknown distribution '{s}' (expected uniform, bernoulli:<rho>, sparse:<s>)"
    )))
}

fn cmd_gen(args: &GenArgs) -> Result<bool> {
    let inst: Instance = match args.family.as_str() {
        "uniform-vs-single" => gen_uniform_vs_single(args.m, args.eps)?,
        "walsh" => gen_walsh_instance(args.p, args.seed)?,
        "random" => gen_random(args.m, args.k, args.n, args.seed, parse_dist(&args.dist)?)?,
        "adversary" => {
            let m = 1usize << (args.p + 1);
            let params = PNormParams::finite(args.p as f64, m)?;
            let mut policy = GreedyPolicy::new(params);
            let tr = gen_adaptive_adversary(&mut policy, args.copies, args.p)?;
            let alg_load = tr.instance.load_of(&tr.algorithm_assignment);
            eprintln!(
                "adversary vs greedy: algorithm load {}, optimum upper bound {}",
                lp_norm(&alg_load, &params),
                tr.opt_upper
            );
            tr.instance
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown family '{other}' (expected uniform-vs-single, walsh, random, adversary)"
            )))
        }
    };
    write_instance_to_path(&inst, &args.out)?;
    eprintln!(
        "wrote {} jobs on {} machines to {}",
        inst.n(),
        inst.m(),
        args.out.display()
    );
    Ok(true)
}

fn cmd_run(args: &RunArgs) -> Result<bool> {
    let source = match (&args.instance, args.walsh) {
        (Some(path), None) => InstanceSource::File(path.clone()),
        (None, Some(p)) => InstanceSource::WalshResampled { p },
        _ => {
            return Err(Error::InvalidParameter(
                "exactly one of --instance and --walsh is required".into(),
            ))
        }
    };
    let algorithms = args
        .alg
        .iter()
        .map(|s| AlgorithmKind::from_str(s))
        .collect::<Result<Vec<_>>>()?;
    let order = match args.order.as_str() {
        "given" => OrderSpec::Given,
        "random" => OrderSpec::Random {
            trials: args.trials,
            master_seed: args.seed,
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown order '{other}' (expected given or random)"
            )))
        }
    };
    let cfg = ExperimentConfig {
        source,
        algorithms,
        p: parse_p(&args.p)?,
        eps: args.eps,
        order,
        opt_mode: parse_opt_mode(&args.opt_mode)?,
        cap: args.cap,
    };
    let report = run_experiment(&cfg)?;
    emit_report(&report, ReportFormat::from_str(&args.format)?, args.out.as_deref())?;
    if let Some(dir) = &args.plot {
        write_plot_series(&report, dir)?;
    }
    Ok(report.all_bounds_satisfied())
}

fn cmd_olo(args: &OloArgs) -> Result<bool> {
    let report = match &args.instance {
        Some(path) => {
            let inst = read_instance_from_path(path)?;
            run_olo_from_instance(&inst, args.p, args.eps)?
        }
        None => run_olo_bench(
            args.seq.parse::<OloSequence>()?,
            args.n,
            args.m,
            args.p,
            args.eps,
            args.trials,
            args.seed,
        )?,
    };
    emit_json(&report, &args.format, args.out.as_deref())?;
    Ok(report.all_bounds_satisfied)
}

fn cmd_validate(args: &ValidateArgs) -> Result<bool> {
    let report = run_validation_suite(
        args.sets,
        args.vectors,
        args.m,
        args.p,
        args.eps,
        args.trials,
        args.seed,
    )?;
    emit_json(&report, &args.format, args.out.as_deref())?;
    Ok(report.all_satisfied)
}

fn cmd_opt(args: &OptArgs) -> Result<bool> {
    let inst = read_instance_from_path(&args.instance)?;
    let p = parse_p(&args.p)?;
    let params = match p {
        PNorm::Finite(p) => PNormParams::finite(p, inst.m())?,
        PNorm::Inf => PNormParams::inf(inst.m())?,
    };
    let res = opt_bound_with(&inst, &params, parse_opt_mode(&args.opt_mode)?, args.cap)?;
    println!("value: {}", res.value);
    println!("kind: {}", res.kind);
    match &res.certificate {
        OptCertificate::Assignment(a) => println!("witness: {:?}", a.choices()),
        OptCertificate::DualityGap(g) => println!("duality_gap: {g}"),
        OptCertificate::Provenance(s) => println!("provenance: {s}"),
    }
    Ok(true)
}

fn emit_json<T: serde::Serialize>(
    value: &T,
    format: &str,
    out: Option<&std::path::Path>,
) -> Result<()> {
    if format != "json" {
        return Err(Error::InvalidParameter(
            "this subcommand only supports --format json".into(),
        ));
    }
    let mut buf = serde_json::to_vec_pretty(value).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    buf.push(b'\n');
    match out {
        Some(path) => std::fs::write(path, &buf)?,
        None => std::io::Write::write_all(&mut std::io::stdout(), &buf)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::OloBench(args) => cmd_olo(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Opt(args) => cmd_opt(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
