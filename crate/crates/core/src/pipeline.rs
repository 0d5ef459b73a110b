//! End-to-end runs: reach dictionary, symmetry layer, synthesis, metrics and optional
//! closed-loop validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::abstraction::{build_rel_states, build_sym_abstraction, classify_grid, Classification, SymAbstraction};
use crate::artifact::ArtifactError;
use crate::grid::{CellSet, GridError, GridSpec};
use crate::reach::{build_reach_dict, ReachDict, ReachError};
use crate::scenario::{Scenario, ScenarioError};
use crate::synthesis::{
    path_lengths, synth_baseline, synth_symmetry, Metrics, Neighborhood, Problem, Strategy, SynthesisOutput, TransitionTable,
};
use crate::validation::{check_tube_containment, Simulator, ValidationError, Verdict};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("bad state grid: {0}")]
    Grid(#[from] GridError),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("cannot write metrics: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot create {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// State grid, classification and reach dictionary shared by every strategy.
pub struct Prepared {
    pub scenario: Scenario,
    pub grid: GridSpec<f64, 3>,
    pub classes: Vec<Classification>,
    pub rd: ReachDict<f64>,
    pub reach_s: f64,
}

impl Prepared {
    /// Builds the reach dictionary, or loads it from `cache` when the header matches.
    /// A freshly built dictionary is written to `cache` if given.
    pub fn new(scenario: Scenario, cache: Option<&Path>) -> Result<Self, PipelineError> {
        let grid = scenario.grid()?;
        let classes = classify_grid(&grid, &scenario.reach_box, &scenario.avoid_boxes);
        let header = scenario.reach_header();
        let t0 = Instant::now();
        let rd = match cache {
            Some(p) if p.exists() => ReachDict::load_matching(p, &header)?,
            _ => {
                let rd = build_reach_dict(header)?;
                if let Some(p) = cache {
                    rd.save(p)?;
                }
                rd
            }
        };
        Ok(Self { scenario, grid, classes, rd, reach_s: t0.elapsed().as_secs_f64() })
    }

    pub fn num_normal(&self) -> usize {
        self.classes.iter().filter(|&&c| c == Classification::Normal).count()
    }
}

pub struct StrategyRun {
    pub strategy: Strategy,
    pub metrics: Metrics,
    pub output: SynthesisOutput,
    pub abstraction: Option<SymAbstraction>,
}

/// One strategy on prepared data. Abstraction time covers the relative tuples and the
/// symmetry layer; synthesis time covers the transition table and the fixed point.
pub fn run_strategy(prep: &Prepared, strategy: Strategy, seed: u64) -> StrategyRun {
    let cfg = strategy.config();
    let sc = &prep.scenario;
    let n_controls = prep.rd.num_controls();

    let t0 = Instant::now();
    let layer = cfg.abstraction_params(n_controls).map(|mut params| {
        if let Some(m) = sc.m {
            params.m = m;
        }
        let rels = build_rel_states(&prep.grid, &sc.reach_box, &sc.avoid_boxes, &prep.rd);
        let sym = build_sym_abstraction(&rels, &prep.rd, params);
        (rels, sym)
    });
    let abstraction_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let table = TransitionTable::new(&prep.grid, &prep.rd);
    let problem = Problem {
        grid: &prep.grid,
        classes: &prep.classes,
        table: &table,
        neighborhood: Neighborhood::from_reach_dict(&prep.grid, &prep.rd),
    };
    let output = match &layer {
        Some((rels, sym)) => synth_symmetry(&problem, sym, rels, &prep.rd, &cfg, seed),
        None => synth_baseline(&problem, &prep.rd, &cfg, seed),
    };
    let synthesis_s = t1.elapsed().as_secs_f64();

    let paths = path_lengths(&prep.grid, &table, &output);
    let stats = output.cache.as_ref().and_then(|c| c.length_stats());
    let sym = layer.map(|(_, s)| s);
    let metrics = Metrics {
        strategy: strategy.to_string(),
        qx_counts: sc.counts_label(),
        n_grid_star: prep.num_normal(),
        n_sym: sym.as_ref().map(|s| s.num_states()),
        n_cao: sym.as_ref().map(|s| s.num_cao()),
        n_ctr: output.added.len(),
        cache_min: stats.map(|s| s.0),
        cache_avg: stats.map(|s| s.1),
        cache_median: stats.map(|s| s.2),
        cache_max: stats.map(|s| s.3),
        explored_frac: output.explored_frac(),
        path_avg: if paths.is_empty() { 0.0 } else { paths.iter().sum::<usize>() as f64 / paths.len() as f64 },
        path_max: paths.iter().copied().max().unwrap_or(0),
        abstraction_s,
        synthesis_s,
        total_s: abstraction_s + synthesis_s,
    };
    StrategyRun { strategy, metrics, output, abstraction: sym }
}

/// Exhaustive strategies must agree on the winning set; budget ones must stay inside it.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub exhaustive_equal: bool,
    pub budget_subset: bool,
    /// Total time of each strategy over that of strategy 0, when it ran.
    pub speedups: BTreeMap<String, f64>,
}

impl EquivalenceReport {
    pub fn ok(&self) -> bool {
        self.exhaustive_equal && self.budget_subset
    }
}

pub fn is_exhaustive(s: Strategy) -> bool {
    s.config().budget.is_none()
}

pub fn check_equivalence(runs: &[StrategyRun]) -> EquivalenceReport {
    let exhaustive: Vec<&CellSet> = runs.iter().filter(|r| is_exhaustive(r.strategy)).map(|r| &r.output.winning).collect();
    let exhaustive_equal = exhaustive.windows(2).all(|w| w[0] == w[1]);
    let budget_subset = match exhaustive.first() {
        Some(full) => runs.iter().filter(|r| !is_exhaustive(r.strategy)).all(|r| r.output.winning.is_subset(full)),
        None => true,
    };
    let base = runs.iter().find(|r| r.strategy == Strategy::S0).map(|r| r.metrics.total_s);
    let speedups = match base {
        Some(b) => runs.iter().map(|r| (r.strategy.to_string(), b / r.metrics.total_s.max(1e-12))).collect(),
        None => BTreeMap::new(),
    };
    EquivalenceReport { exhaustive_equal, budget_subset, speedups }
}

pub fn compare_strategies(prep: &Prepared, strategies: &[Strategy], seed: u64) -> (Vec<StrategyRun>, EquivalenceReport) {
    let runs: Vec<StrategyRun> = strategies.iter().map(|&s| run_strategy(prep, s, seed)).collect();
    let report = check_equivalence(&runs);
    (runs, report)
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub reuse_reachdict: Option<PathBuf>,
    pub validate: bool,
    pub rollouts: usize,
    pub containment_samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub rollouts: usize,
    pub verdicts: BTreeMap<String, usize>,
    pub containment_samples: usize,
    pub containment_violations: usize,
}

impl ValidationSummary {
    pub fn ok(&self) -> bool {
        self.verdicts.keys().all(|k| k == "Reached") && self.containment_violations == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub strategy: String,
    pub seed: u64,
    pub reach_s: f64,
    pub metrics: Metrics,
    pub validation: Option<ValidationSummary>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Runs the scenario's strategy and writes the reach dictionary, abstraction,
/// controller, metrics row, run summary and any rollout traces into `out_dir`.
pub fn run_scenario(scenario: Scenario, opts: &RunOptions) -> Result<RunSummary, PipelineError> {
    std::fs::create_dir_all(&opts.out_dir).map_err(io_err(&opts.out_dir))?;
    let rd_path = opts.reuse_reachdict.clone().unwrap_or_else(|| opts.out_dir.join("reachdict.json"));
    let prep = Prepared::new(scenario, Some(&rd_path))?;
    let default_rd = opts.out_dir.join("reachdict.json");
    if rd_path != default_rd {
        prep.rd.save(&default_rd)?;
    }
    let strategy = prep.scenario.strategy;
    let run = run_strategy(&prep, strategy, opts.seed);
    let grid_hash = prep.grid.hash_hex();
    if let Some(sym) = &run.abstraction {
        sym.save(&opts.out_dir.join("abstraction.json"), &grid_hash)?;
    }
    run.output.controller.save(&opts.out_dir.join("controller.json"))?;
    Metrics::write_csv(std::slice::from_ref(&run.metrics), &opts.out_dir.join("metrics.csv"))?;

    let validation = if opts.validate || opts.rollouts > 0 {
        let sim = Simulator::new(&prep.scenario, &prep.grid, &prep.classes, &run.output.controller);
        let rollouts = if run.output.controller.num_controlled() == 0 {
            Vec::new()
        } else {
            sim.rollouts(opts.rollouts, opts.seed, sim.default_max_periods())?
        };
        if opts.rollouts > 0 {
            let dir = opts.out_dir.join("rollouts");
            std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            for (i, r) in rollouts.iter().enumerate() {
                r.write_csv(&dir.join(format!("rollout_{i:04}.csv")))?;
            }
        }
        let mut verdicts = BTreeMap::new();
        for r in &rollouts {
            *verdicts.entry(format!("{:?}", r.verdict)).or_insert(0) += 1;
        }
        let containment = if opts.validate {
            check_tube_containment(&prep.grid, &prep.rd, &prep.scenario.disturbance_box, opts.containment_samples, opts.seed)
        } else {
            Default::default()
        };
        Some(ValidationSummary {
            rollouts: rollouts.len(),
            verdicts,
            containment_samples: containment.samples,
            containment_violations: containment.violations.len(),
        })
    } else {
        None
    };

    let summary = RunSummary {
        scenario: prep.scenario.name.clone(),
        strategy: strategy.to_string(),
        seed: opts.seed,
        reach_s: prep.reach_s,
        metrics: run.metrics,
        validation,
    };
    let path = opts.out_dir.join("run.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(summary)
}

/// Rollout verdicts other than reaching the target.
pub fn failures(summary: &ValidationSummary) -> usize {
    summary.verdicts.iter().filter(|(k, _)| k.as_str() != format!("{:?}", Verdict::Reached)).map(|(_, v)| v).sum()
}
