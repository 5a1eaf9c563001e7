use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chebspline::harness::config::{OUT_DIR_ENV, ORDER_CEILING};
use chebspline::harness::dump::write_dump;
use chebspline::harness::refine::write_refinement;
use chebspline::harness::sweep::{trial_seed, write_sweep};
use chebspline::harness::verify::{write_verify, Status};
use chebspline::harness::{
    basis_dump, generate_mesh, run_norm_sweep, run_refinement_experiment, run_verify_suite, ExperimentConfig,
    MeshFamily, MeshSpec, WeightSpec,
};
use clap::{Args, Parser, Subcommand};

/// Experiments on L2 orthoprojectors onto Chebyshev spline spaces.
#[derive(Parser, Debug)]
#[command(name = "chebspline", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Operator norms over the n-ladder, with per-cell trend summaries.
    Sweep(Common),
    /// Midpoint insertion down to |Δ| <= epsilon, tracking ‖P̃f - Pf‖∞.
    Refine(Common),
    /// Every invariant on the configured grid; exits 1 if any check fails.
    Verify(Common),
    /// Sampled basis functions, kernel, φ and σ for plotting.
    BasisDump(DumpArgs),
    /// Prints the effective configuration as TOML.
    Config(Common),
}

/// Flags override the configuration file.
#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory (beats the environment variable and the file).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated orders, e.g. `2,3,4`.
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<usize>>,
    #[arg(long)]
    max_order: Option<usize>,
    /// Comma-separated presets: constant, exponential, polynomial.
    #[arg(long, value_delimiter = ',', value_parser = parse_weight)]
    weights: Option<Vec<WeightSpec>>,
    /// Semicolon-separated families: uniform, random-uniform, geometric:R, graded:P, two-scale:BIG,SMALL.
    #[arg(long, value_delimiter = ';', value_parser = parse_family)]
    families: Option<Vec<MeshFamily>>,
    /// Comma-separated interval counts.
    #[arg(long, value_delimiter = ',')]
    n_ladder: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    verify_n: Option<usize>,
    #[arg(long)]
    prefix: Option<String>,
    /// Record wall time per row.
    #[arg(long)]
    timing: bool,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct DumpArgs {
    #[command(flatten)]
    common: Common,
    /// Order of the spline space.
    #[arg(long, short, default_value_t = 2)]
    k: usize,
    #[arg(long, value_parser = parse_weight, default_value = "constant")]
    weight: WeightSpec,
    #[arg(long, value_parser = parse_family, default_value = "uniform")]
    family: MeshFamily,
    /// Grid intervals.
    #[arg(long, short, default_value_t = 8)]
    n: usize,
    /// Samples per interval.
    #[arg(long, default_value_t = 32)]
    samples: usize,
    /// Kernel argument; defaults to the left endpoint.
    #[arg(long)]
    tau: Option<f64>,
}

fn parse_weight(s: &str) -> Result<WeightSpec, String> {
    match s.trim() {
        "constant" => Ok(WeightSpec::Constant),
        "exponential" => Ok(WeightSpec::Exponential { rates: None }),
        "polynomial" => Ok(WeightSpec::Polynomial { amplitudes: None }),
        other => Err(format!("unknown weight preset `{other}`")),
    }
}

fn parse_family(s: &str) -> Result<MeshFamily, String> {
    let s = s.trim();
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    let nums: Vec<f64> = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
            .collect::<Result<_, _>>()?
    };
    let family = match (name, nums.as_slice()) {
        ("uniform", []) => MeshFamily::Uniform,
        ("random-uniform", []) => MeshFamily::RandomUniform,
        ("geometric", [ratio]) => MeshFamily::Geometric { ratio: *ratio },
        ("graded", [power]) => MeshFamily::Graded { power: *power },
        ("two-scale", [big, small]) => MeshFamily::TwoScale { big: *big, small: *small },
        _ => return Err(format!("cannot read mesh family `{s}`")),
    };
    family.validate().map_err(|e| e.to_string())?;
    Ok(family)
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    let c = common.clone();
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.max_order {
        cfg.max_order = v;
    }
    if let Some(v) = c.orders {
        if let Some(&top) = v.iter().max() {
            if top > cfg.max_order && top <= ORDER_CEILING && c.max_order.is_none() {
                cfg.max_order = top;
            }
        }
        cfg.orders = v;
    }
    if let Some(v) = c.weights {
        cfg.weights = v;
    }
    if let Some(v) = c.families {
        cfg.families = v;
    }
    if let Some(v) = c.n_ladder {
        cfg.n_ladder = v;
    }
    if let Some(v) = c.trials {
        cfg.trials = v;
    }
    if c.epsilon.is_some() {
        cfg.epsilon = c.epsilon;
    }
    if let Some(v) = c.verify_n {
        cfg.verify_n = v;
    }
    if let Some(v) = c.prefix {
        cfg.output.prefix = v;
    }
    cfg.output.timing |= c.timing;
    cfg.parallel &= !c.sequential;
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig, common: &Common) -> PathBuf {
    cfg.output_dir(common.out_dir.as_deref())
}

fn wrote(paths: &[&Path]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sweep(common) => {
            let cfg = load(&common)?;
            let dir = out_dir(&cfg, &common);
            let outcome = run_norm_sweep(&cfg)?;
            let (csv, json) = write_sweep(&outcome, &dir, &cfg.output.prefix)?;
            println!("seed {}", cfg.seed);
            for cell in &outcome.summary.cells {
                let top = cell.max_norm.iter().next_back();
                let failed: Vec<&str> = cell.passed.iter().filter(|(_, v)| !**v).map(|(k, _)| k.as_str()).collect();
                println!(
                    "k={} {:<12} max norm {} failures {} {}",
                    cell.k,
                    cell.weight,
                    top.map(|(n, v)| format!("{v:.6} (n={n})")).unwrap_or_else(|| "-".into()),
                    cell.failures,
                    if failed.is_empty() { "ok".to_string() } else { format!("failed: {}", failed.join(",")) }
                );
            }
            wrote(&[&csv, &json]);
            Ok(ExitCode::SUCCESS)
        }
        Command::Refine(common) => {
            let cfg = load(&common)?;
            let dir = out_dir(&cfg, &common);
            let outcome = run_refinement_experiment(&cfg)?;
            let (csv, json) = write_refinement(&outcome, &dir, &cfg.output.prefix)?;
            println!("seed {}", cfg.seed);
            for c in &outcome.summary.cells {
                println!(
                    "k={} {:<12} steps {} schedule {} max change {:.6} drift {} {}",
                    c.k,
                    c.weight,
                    c.schedule.len(),
                    if c.schedule_matches { "matches" } else { "differs" },
                    c.max_change,
                    c.drift.map(|d| format!("{d:.3}")).unwrap_or_else(|| "-".into()),
                    c.error.as_deref().unwrap_or(if c.bounded { "bounded" } else { "unbounded" })
                );
            }
            wrote(&[&csv, &json]);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(common) => {
            let cfg = load(&common)?;
            let dir = out_dir(&cfg, &common);
            let summary = run_verify_suite(&cfg)?;
            let paths = write_verify(&summary, &dir, &cfg.output.prefix)?;
            println!("seed {}", cfg.seed);
            for c in summary.checks.iter().filter(|c| c.status != Status::Pass) {
                let tag = if c.status == Status::Fail { "FAIL" } else { "skip" };
                println!("{tag} {} k={} {} {} {}", c.name, c.k, c.weight, c.mesh, c.note);
            }
            println!("{} passed, {} failed, {} skipped", summary.passed, summary.failed, summary.skipped);
            wrote(&paths.iter().map(PathBuf::as_path).collect::<Vec<_>>());
            Ok(if summary.ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::BasisDump(args) => {
            let cfg = load(&args.common)?;
            if args.k == 0 || args.k > cfg.max_order.max(ORDER_CEILING) {
                bail!("order {} outside 1..={ORDER_CEILING}", args.k);
            }
            let [a, b] = cfg.interval;
            let spec = MeshSpec {
                family: args.family,
                n: args.n,
                seed: trial_seed(cfg.seed, args.n, 0),
                a,
                b,
            };
            let part = generate_mesh(&spec, args.k)?;
            let ws = args.weight.system(args.k, a, b)?;
            let dump = basis_dump(&ws, &part, args.samples, args.tau)?;
            let path = write_dump(&dump, &out_dir(&cfg, &args.common), &cfg.output.prefix)?;
            println!("seed {}", cfg.seed);
            wrote(&[&path]);
            Ok(ExitCode::SUCCESS)
        }
        Command::Config(common) => {
            let cfg = load(&common)?;
            print!("{}", cfg.to_toml());
            if std::env::var_os(OUT_DIR_ENV).is_some() {
                println!("# output directory overridden by {OUT_DIR_ENV}: {}", out_dir(&cfg, &common).display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()).context("chebspline") {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
