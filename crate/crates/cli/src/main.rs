use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use symsynth::pipeline::{compare_strategies, failures, run_scenario, Prepared, PipelineError, RunOptions};
use symsynth::scenario::{parse_resolution, Scenario};
use symsynth::synthesis::{Metrics, Strategy};

#[derive(Parser)]
#[command(name = "symsynth", version, about = "Reach-avoid controller synthesis for the planar ship")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a controller for one strategy and write its artifacts.
    Run(RunArgs),
    /// Run several strategies on a shared reach dictionary and compare them.
    Compare(CompareArgs),
    /// Print a built-in scenario file.
    DefaultConfig {
        #[arg(long, default_value = "ship")]
        scene: String,
    },
}

#[derive(Args)]
struct SceneArgs {
    /// Scenario file; defaults to the built-in scene.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scene used when no file is given: ship, toy or corridor.
    #[arg(long, default_value = "ship")]
    scene: String,
    /// State grid counts, `N` or `NxNxN`.
    #[arg(long)]
    resolution: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Reach dictionary to load if its header matches, written there otherwise.
    #[arg(long)]
    reuse_reachdict: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Run closed-loop rollouts and the tube sampling check; fail on any violation.
    #[arg(long)]
    validate: bool,
    /// Closed-loop rollouts to run and export.
    #[arg(long)]
    rollouts: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    tube_samples: usize,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Comma-separated strategy ids.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2,3,4,5,6")]
    strategies: Vec<Strategy>,
}

fn load_scene(a: &SceneArgs) -> Result<Scenario, PipelineError> {
    let mut s = match &a.config {
        Some(p) => Scenario::load(p)?,
        None => Scenario::builtin(&a.scene)?,
    };
    if let Some(r) = &a.resolution {
        s = s.with_resolution(parse_resolution(r)?);
        s.grid()?;
    }
    Ok(s)
}

fn print_rows(rows: &[Metrics]) {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for r in rows {
        w.serialize(r).expect("stdout");
    }
    w.flush().expect("stdout");
}

fn run(args: RunArgs) -> Result<ExitCode, PipelineError> {
    let mut scene = load_scene(&args.scene)?;
    if let Some(s) = args.strategy {
        scene.strategy = s;
    }
    let rollouts = args.rollouts.unwrap_or(if args.validate { 200 } else { 0 });
    let opts = RunOptions {
        out_dir: args.scene.out_dir.clone(),
        reuse_reachdict: args.scene.reuse_reachdict.clone(),
        validate: args.validate,
        rollouts,
        containment_samples: args.tube_samples,
        seed: args.scene.seed,
    };
    let summary = run_scenario(scene, &opts)?;
    print_rows(std::slice::from_ref(&summary.metrics));
    if let Some(v) = &summary.validation {
        eprintln!(
            "rollouts: {} {:?}; tube samples: {} with {} violations",
            v.rollouts, v.verdicts, v.containment_samples, v.containment_violations
        );
        if args.validate && (failures(v) > 0 || v.containment_violations > 0) {
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn compare(args: CompareArgs) -> Result<ExitCode, PipelineError> {
    let scene = load_scene(&args.scene)?;
    std::fs::create_dir_all(&args.scene.out_dir)
        .map_err(|source| PipelineError::Io { path: args.scene.out_dir.clone(), source })?;
    let rd_path = args.scene.reuse_reachdict.clone().unwrap_or_else(|| args.scene.out_dir.join("reachdict.json"));
    let prep = Prepared::new(scene, Some(&rd_path))?;
    let (runs, report) = compare_strategies(&prep, &args.strategies, args.scene.seed);
    let rows: Vec<Metrics> = runs.into_iter().map(|r| r.metrics).collect();
    Metrics::write_csv(&rows, &args.scene.out_dir.join("metrics.csv"))?;
    print_rows(&rows);
    for (s, x) in &report.speedups {
        eprintln!("speedup of strategy {s} over 0: {x:.2}x");
    }
    eprintln!("exhaustive strategies agree: {}; budget strategies inside: {}", report.exhaustive_equal, report.budget_subset);
    Ok(if report.ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::DefaultConfig { scene } => Scenario::builtin_text(&scene).map(|t| {
            print!("{t}");
            ExitCode::SUCCESS
        }).map_err(Into::into),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
