//! Closed-loop simulation of the ship under a synthesized sample-and-hold controller, and
//! sampling checks of the reach tubes.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::abstraction::Classification;
use crate::geometry::Aabb;
use crate::grid::{CellId, GridSpec};
use crate::par::par_map;
use crate::reach::{ship_dynamics, ReachDict};
use crate::scalar::wrap_angle;
use crate::scenario::Scenario;
use crate::symmetry::transform_tube_from_cell;
use crate::synthesis::Controller;

/// Integration steps per control period.
pub const STEPS_PER_PERIOD: usize = 300;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("start state {0:?} lies outside the grid")]
    OutsideGrid([f64; 3]),
    #[error("start cell {0} has no control and is not a target cell")]
    UnassignedStart(u32),
    #[error("no controlled cells to start from")]
    NothingControlled,
    #[error("cannot write {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    Reached,
    HitAvoid,
    ExitedX,
    Timeout,
    /// The sampled state fell in a cell without a control.
    Unassigned,
}

/// How the disturbance is drawn on each integration step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisturbanceMode {
    Zero,
    Uniform,
    /// A random corner of the disturbance box.
    BangBang,
}

pub fn sample_disturbance(w: &Aabb<f64, 3>, mode: DisturbanceMode, rng: &mut impl Rng) -> [f64; 3] {
    std::array::from_fn(|d| {
        let (lo, hi) = (w.lo()[d], w.hi()[d]);
        match mode {
            DisturbanceMode::Zero => 0.0,
            DisturbanceMode::Uniform => lo + (hi - lo) * rng.random::<f64>(),
            DisturbanceMode::BangBang => {
                if rng.random::<bool>() {
                    hi
                } else {
                    lo
                }
            }
        }
    })
}

pub fn rk4_step(x: &[f64; 3], u: &[f64; 3], w: &[f64; 3], h: f64) -> [f64; 3] {
    let add = |a: &[f64; 3], k: &[f64; 3], s: f64| [a[0] + s * k[0], a[1] + s * k[1], a[2] + s * k[2]];
    let k1 = ship_dynamics(x, u, w);
    let k2 = ship_dynamics(&add(x, &k1, h / 2.0), u, w);
    let k3 = ship_dynamics(&add(x, &k2, h / 2.0), u, w);
    let k4 = ship_dynamics(&add(x, &k3, h), u, w);
    std::array::from_fn(|d| x[d] + h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]))
}

/// Integrates over `[0, t]` in `steps` RK4 steps, with the disturbance of step `k` given
/// by `w(k)`. Heading is left unwrapped.
pub fn integrate(x0: &[f64; 3], u: &[f64; 3], t: f64, steps: usize, mut w: impl FnMut(usize) -> [f64; 3]) -> [f64; 3] {
    let h = t / steps as f64;
    let mut x = *x0;
    for k in 0..steps {
        x = rk4_step(&x, u, &w(k), h);
    }
    x
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    /// `(t, state)` at every integration step, heading wrapped.
    pub states: Vec<(f64, [f64; 3])>,
    /// Control symbol of each period.
    pub controls: Vec<u32>,
    pub verdict: Verdict,
    pub reach_time: Option<f64>,
}

impl Rollout {
    /// Writes `t, N, E, theta, control` rows.
    pub fn write_csv(&self, path: &Path) -> Result<(), ValidationError> {
        let err = |source| ValidationError::Csv { path: path.display().to_string(), source };
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(["t", "N", "E", "theta", "control"]).map_err(err)?;
        for (i, (t, x)) in self.states.iter().enumerate() {
            let period = (i.saturating_sub(1) / STEPS_PER_PERIOD).min(self.controls.len().saturating_sub(1));
            let control = self.controls.get(period).map(|a| a.to_string()).unwrap_or_default();
            w.write_record([t.to_string(), x[0].to_string(), x[1].to_string(), x[2].to_string(), control]).map_err(err)?;
        }
        w.flush().map_err(|e| err(e.into()))?;
        Ok(())
    }
}

/// Runs the sample-and-hold controller of a scenario on the concrete ship.
pub struct Simulator<'a> {
    pub scenario: &'a Scenario,
    pub grid: &'a GridSpec<f64, 3>,
    pub classes: &'a [Classification],
    pub controller: &'a Controller,
    pub control_grid: GridSpec<f64, 3>,
    pub mode: DisturbanceMode,
}

impl<'a> Simulator<'a> {
    pub fn new(scenario: &'a Scenario, grid: &'a GridSpec<f64, 3>, classes: &'a [Classification], controller: &'a Controller) -> Self {
        Self { scenario, grid, classes, controller, control_grid: scenario.control_grid(), mode: DisturbanceMode::Uniform }
    }

    /// Three times the grid diagonal in cells.
    pub fn default_max_periods(&self) -> usize {
        let d: f64 = self.grid.counts().iter().map(|&n| (n * n) as f64).sum::<f64>().sqrt();
        3 * d.ceil() as usize
    }

    fn wrapped(&self, x: &[f64; 3]) -> [f64; 3] {
        std::array::from_fn(|d| if self.scenario.periodic[d] { wrap_angle(x[d]) } else { x[d] })
    }

    fn status(&self, x: &[f64; 3]) -> Option<Verdict> {
        if self.scenario.avoid_boxes.iter().any(|a| a.contains_point(x)) {
            Some(Verdict::HitAvoid)
        } else if self.scenario.reach_box.contains_point(x) {
            Some(Verdict::Reached)
        } else if (0..3).any(|d| {
            let (lo, hi) = (self.scenario.state_box.lo()[d], self.scenario.state_box.hi()[d]);
            !self.scenario.periodic[d] && !(lo <= x[d] && x[d] <= hi)
        }) {
            Some(Verdict::ExitedX)
        } else {
            None
        }
    }

    pub fn simulate(&self, x0: &[f64; 3], rng: &mut impl Rng, max_periods: usize) -> Result<Rollout, ValidationError> {
        let h = self.scenario.tau / STEPS_PER_PERIOD as f64;
        let mut x = self.wrapped(x0);
        let mut states = vec![(0.0, x)];
        let mut controls = Vec::new();
        let done = |verdict, t: f64, states, controls| {
            let reach_time = (verdict == Verdict::Reached).then_some(t);
            Ok(Rollout { states, controls, verdict, reach_time })
        };
        if let Some(v) = self.status(&x) {
            return done(v, 0.0, states, controls);
        }
        let start = self.grid.cell_of(&x).ok_or(ValidationError::OutsideGrid(x))?;
        if self.controller.get(start).is_none() && self.classes[start.index()] != Classification::Reach {
            return Err(ValidationError::UnassignedStart(start.0));
        }
        let mut t = 0.0;
        for period in 0..max_periods {
            let Some(cell) = self.grid.cell_of(&x) else {
                return done(Verdict::ExitedX, t, states, controls);
            };
            let Some(a) = self.controller.get(cell) else {
                return done(Verdict::Unassigned, t, states, controls);
            };
            controls.push(a);
            let u = self.control_grid.center_of(CellId(a));
            for k in 0..STEPS_PER_PERIOD {
                let w = sample_disturbance(&self.scenario.disturbance_box, self.mode, rng);
                x = rk4_step(&x, &u, &w, h);
                t = (period * STEPS_PER_PERIOD + k + 1) as f64 * h;
                x = self.wrapped(&x);
                states.push((t, x));
                if let Some(v) = self.status(&x) {
                    return done(v, t, states, controls);
                }
            }
        }
        done(Verdict::Timeout, t, states, controls)
    }

    /// `n` rollouts from uniform points of random controlled cells (faces owned by the
    /// cell included); rollout `i` uses its
    /// own stream of the seeded generator.
    pub fn rollouts(&self, n: usize, seed: u64, max_periods: usize) -> Result<Vec<Rollout>, ValidationError> {
        let cells: Vec<CellId> = self.controller.controlled().map(|(c, _)| c).collect();
        if cells.is_empty() {
            return Err(ValidationError::NothingControlled);
        }
        let jobs: Vec<u64> = (0..n as u64).collect();
        par_map(&jobs, |&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let c = cells[rng.random_range(0..cells.len())];
            // the controller reads the half-open cell, so upper faces belong to neighbors
            let x0 = loop {
                let x = uniform_in(&self.grid.cell_box(c), &mut rng);
                if self.grid.cell_of(&x) == Some(c) {
                    break x;
                }
            };
            self.simulate(&x0, &mut rng, max_periods)
        })
        .into_iter()
        .collect()
    }
}

/// Uniform point of a box; each coordinate snaps to a face with probability 1/8 so that
/// corners get sampled too.
pub fn uniform_in(b: &Aabb<f64, 3>, rng: &mut impl Rng) -> [f64; 3] {
    std::array::from_fn(|d| {
        let (lo, hi) = (b.lo()[d], b.hi()[d]);
        match rng.random_range(0..16) {
            0 => lo,
            1 => hi,
            _ => lo + (hi - lo) * rng.random::<f64>(),
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TubeViolation {
    pub cell: u32,
    pub control: u32,
    pub t: f64,
    pub state: [f64; 3],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ContainmentReport {
    pub samples: usize,
    pub violations: Vec<TubeViolation>,
}

/// Integrates random (cell, control, start, disturbance) samples and checks every
/// integration step against the time-window boxes of the tube transformed to the cell.
/// Half of the samples use uniform disturbances, half bang-bang ones.
pub fn check_tube_containment(
    grid: &GridSpec<f64, 3>,
    rd: &ReachDict<f64>,
    disturbance: &Aabb<f64, 3>,
    samples: usize,
    seed: u64,
) -> ContainmentReport {
    let tau = rd.header().tau;
    let n_controls = rd.num_controls();
    let jobs: Vec<u64> = (0..samples as u64).collect();
    let found = par_map(&jobs, |&i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        let cell = CellId(rng.random_range(0..grid.num_cells() as u32));
        let a = rng.random_range(0..n_controls);
        let mode = if i % 2 == 0 { DisturbanceMode::Uniform } else { DisturbanceMode::BangBang };
        let cb = grid.cell_box(cell);
        let tube = transform_tube_from_cell(rd.tube(0, a), &cb);
        let u = rd.control(a);
        let mut x = uniform_in(&cb, &mut rng);
        let h = tau / STEPS_PER_PERIOD as f64;
        let inside = |t: f64, x: &[f64; 3]| {
            let slack = 1e-12 * tau;
            tube.segments().iter().any(|s| s.t_start - slack <= t && t <= s.t_end + slack && s.bbox.contains_point(x))
        };
        for k in 0..STEPS_PER_PERIOD {
            let t = k as f64 * h;
            if !inside(t, &x) {
                return Some(TubeViolation { cell: cell.0, control: a as u32, t, state: x });
            }
            let w = sample_disturbance(disturbance, mode, &mut rng);
            x = rk4_step(&x, &u, &w, h);
        }
        if !inside(tau, &x) || !tube.last().contains_point(&x) {
            return Some(TubeViolation { cell: cell.0, control: a as u32, t: tau, state: x });
        }
        None
    });
    ContainmentReport { samples, violations: found.into_iter().flatten().collect() }
}
