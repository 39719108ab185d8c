mod artifacts;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use stocheq::{
    build_hostility_game, ex_post_epsilon, generate_default_spec, parse_spec, run, serialize_spec, Algorithm, Config,
    Game, HostilityGameSpec, OuterStop, SizeProfile, StoppingCondition,
};

use artifacts::{ResolvedConfig, RunManifest};

#[derive(Parser)]
#[command(name = "stocheq", version, about = "Approximate equilibria of multiplayer stochastic games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded hostility game spec.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ProfileArg::Small)]
        profile: ProfileArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a spec and write trace.csv, strategies.json, values.json and manifest.json.
    Solve(SolveArgs),
    /// Report per-player best-response gains of a strategies file.
    Check {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        strategies: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Small,
    #[value(name = "paper_scale")]
    PaperScale,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    #[value(name = "vi-fp")]
    ViFp,
    #[value(name = "pi-fp")]
    PiFp,
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::PiFp)]
    algorithm: AlgorithmArg,
    /// Fictitious-play iterations per stage game.
    #[arg(long, default_value_t = stocheq::orchestrator::DEFAULT_FP_ITERATIONS)]
    fp_iters: usize,
    /// Keep the lowest-regret average seen instead of the last one.
    #[arg(long)]
    fp_min_regret: bool,
    #[arg(long, default_value_t = stocheq::orchestrator::DEFAULT_OUTER_ITERATIONS)]
    outer_iters: usize,
    /// Halt once no value changes by more than this.
    #[arg(long, default_value_t = stocheq::orchestrator::DEFAULT_VALUE_DELTA)]
    delta: f64,
    #[arg(long, env = "STOCHEQ_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Skip the per-iteration ex-post check.
    #[arg(long)]
    no_epsilon_trace: bool,
}

fn read_spec(path: &Path) -> Result<HostilityGameSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_spec(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

fn generate(seed: u64, profile: ProfileArg, out: &Path) -> Result<()> {
    let size = match profile {
        ProfileArg::Small => SizeProfile::Small,
        ProfileArg::PaperScale => SizeProfile::PaperScale,
    };
    write(out, &serialize_spec(&generate_default_spec(seed, size)))
}

fn solve(args: &SolveArgs) -> Result<()> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let spec = read_spec(&args.spec)?;
    let game: Game = build_hostility_game(&spec)?;
    let config = Config {
        algorithm: match args.algorithm {
            AlgorithmArg::ViFp => Algorithm::ViFp,
            AlgorithmArg::PiFp => Algorithm::PiFp,
        },
        stage_stop: if args.fp_min_regret {
            StoppingCondition::FixedIterationsMinRegret(args.fp_iters)
        } else {
            StoppingCondition::FixedIterations(args.fp_iters)
        },
        outer_stop: OuterStop {
            max_iterations: args.outer_iters,
            value_delta: Some(args.delta),
        },
        workers: args.workers,
        seed: args.seed,
        record_epsilon: !args.no_epsilon_trace,
        ..Config::default()
    };
    let report = run(&game, &config)?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write(&args.out.join("trace.csv"), &artifacts::trace_csv(&report))?;
    write(
        &args.out.join("strategies.json"),
        &json(&artifacts::strategy_file(&game, &report.profile)),
    )?;
    write(&args.out.join("values.json"), &json(&artifacts::value_file(&game, &report.values)))?;
    let manifest = RunManifest {
        tool: "stocheq".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        started_at,
        spec_path: args.spec.display().to_string(),
        spec_sha256: artifacts::spec_hash(&serialize_spec(&spec)),
        config: ResolvedConfig {
            algorithm: match args.algorithm {
                AlgorithmArg::ViFp => "vi-fp".into(),
                AlgorithmArg::PiFp => "pi-fp".into(),
            },
            fp_iters: args.fp_iters,
            fp_min_regret: args.fp_min_regret,
            outer_iters: args.outer_iters,
            delta: args.delta,
            workers: args.workers,
            seed: args.seed,
            epsilon_trace: !args.no_epsilon_trace,
        },
        outer_iterations_run: report.records.len(),
        converged: report.converged,
        final_epsilon: report.final_epsilon(),
    };
    write(&args.out.join("manifest.json"), &json(&manifest))?;

    let eps = report
        .final_epsilon()
        .map_or_else(|| "not recorded".to_string(), |e| e.to_string());
    println!(
        "{} outer iterations, converged: {}, final epsilon: {eps}",
        report.records.len(),
        report.converged
    );
    Ok(())
}

fn check(spec: &Path, strategies: &Path) -> Result<()> {
    let game: Game = build_hostility_game(&read_spec(spec)?)?;
    let text = fs::read_to_string(strategies).with_context(|| format!("reading {}", strategies.display()))?;
    let file: artifacts::StrategyFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", strategies.display()))?;
    let profile = artifacts::profile_from_file(&game, &file)?;
    let report = ex_post_epsilon(&game, &profile)?;
    for (name, gain) in game.player_names().iter().zip(&report.gains) {
        println!("gain {name} {gain}");
    }
    println!("epsilon {}", report.epsilon);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { seed, profile, out } => generate(seed, profile, &out),
        Command::Solve(args) => solve(&args),
        Command::Check { spec, strategies } => check(&spec, &strategies),
    }
}
