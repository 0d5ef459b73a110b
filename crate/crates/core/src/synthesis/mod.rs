//! Fixed-point reach-avoid synthesis over the grid, plain or guided by the symmetry layer.

mod cache;
mod controller;
mod engine;
mod metrics;
mod transition;

pub use cache::Cache;
pub use controller::Controller;
pub use engine::{synth_baseline, synth_symmetry, SynthesisOutput};
pub use metrics::{path_lengths, Metrics};
pub use transition::{max_travel, Neighborhood, TransitionTable};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{AbstractionParams, Classification, ControlOrdering};
use crate::grid::GridSpec;

#[derive(Debug, Error, PartialEq)]
#[error("unknown strategy `{0}`, expected one of 0, 0.5, 1, 2, 3, 4, 5, 6")]
pub struct UnknownStrategy(pub String);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    S0,
    S0p5,
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::S0,
        Strategy::S0p5,
        Strategy::S1,
        Strategy::S2,
        Strategy::S3,
        Strategy::S4,
        Strategy::S5,
        Strategy::S6,
    ];

    pub fn config(self) -> StrategyConfig {
        use Exploration::*;
        let (use_cache, budget, exploration, pruning) = match self {
            Strategy::S0 => (false, None, Index, false),
            Strategy::S0p5 => (false, Some(400), Random, false),
            Strategy::S1 => (true, None, Greedy, false),
            Strategy::S2 => (true, Some(400), Greedy, false),
            Strategy::S3 => (true, None, Arbitrary, false),
            Strategy::S4 => (true, None, Greedy, true),
            Strategy::S5 => (true, Some(400), Greedy, true),
            Strategy::S6 => (true, None, Arbitrary, true),
        };
        StrategyConfig { strategy: self, use_cache, budget, exploration, pruning, batch_start: 3, batch_factor: 5, random_tail: 75 }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Strategy::S0 => "0",
            Strategy::S0p5 => "0.5",
            Strategy::S1 => "1",
            Strategy::S2 => "2",
            Strategy::S3 => "3",
            Strategy::S4 => "4",
            Strategy::S5 => "5",
            Strategy::S6 => "6",
        };
        f.write_str(s)
    }
}

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL.into_iter().find(|x| x.to_string() == s.trim()).ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

/// How fresh controls are drawn for a cell once its cached controls fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exploration {
    Index,
    Random,
    /// Growing nearest-to-target batches, with a random final batch.
    Greedy,
    Arbitrary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    pub use_cache: bool,
    /// Controls tried per cell per pass, cached ones included. `None` means all.
    pub budget: Option<usize>,
    pub exploration: Exploration,
    pub pruning: bool,
    pub batch_start: usize,
    pub batch_factor: usize,
    /// Size of the last, randomly drawn batch.
    pub random_tail: usize,
}

impl StrategyConfig {
    pub fn uses_abstraction(&self) -> bool {
        self.use_cache
    }

    pub fn budget_for(&self, n_controls: usize) -> usize {
        self.budget.unwrap_or(n_controls).min(n_controls)
    }

    /// Parameters of the symmetry layer matching this strategy, if it uses one.
    pub fn abstraction_params(&self, n_controls: usize) -> Option<AbstractionParams> {
        if !self.uses_abstraction() {
            return None;
        }
        let ordering = match self.exploration {
            Exploration::Arbitrary | Exploration::Index => ControlOrdering::Arbitrary,
            _ => ControlOrdering::Greedy,
        };
        let mut p = AbstractionParams::new(self.budget_for(n_controls), ordering);
        p.batch_start = self.batch_start;
        p.batch_factor = self.batch_factor;
        Some(p)
    }
}

/// Everything the fixed point needs besides the strategy.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub grid: &'a GridSpec<f64, 3>,
    pub classes: &'a [Classification],
    pub table: &'a TransitionTable,
    pub neighborhood: Neighborhood,
}
