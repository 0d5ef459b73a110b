//! Scenario files: state, input and disturbance boxes, target, obstacles and grid sizes.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Aabb;
use crate::grid::{GridError, GridSpec};
use crate::reach::{ReachHeader, DEFAULT_STEPS_PER_SEGMENT};
use crate::symmetry::disturbance_union_all_frames;
use crate::synthesis::Strategy;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {msg}")]
    Field { field: String, msg: String },
    #[error("unknown built-in scenario `{0}`, expected ship, toy or corridor")]
    UnknownBuiltin(String),
}

fn field_err(field: impl Into<String>, msg: impl fmt::Display) -> ScenarioError {
    ScenarioError::Field { field: field.into(), msg: msg.to_string() }
}

/// A bound written as a plain number or as a multiple of pi, `"pi:2/3"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Num {
    F(f64),
    I(i64),
    S(String),
}

impl Num {
    fn value(&self, field: &str) -> Result<f64, ScenarioError> {
        match self {
            Num::F(x) => Ok(*x),
            Num::I(x) => Ok(*x as f64),
            Num::S(s) => {
                let rest = s.trim().strip_prefix("pi:").ok_or_else(|| field_err(field, format!("`{s}` is not a number or pi:<factor>")))?;
                let bad = || field_err(field, format!("bad pi factor `{rest}`"));
                let factor = match rest.split_once('/') {
                    Some((a, b)) => {
                        let a: f64 = a.trim().parse().map_err(|_| bad())?;
                        let b: f64 = b.trim().parse().map_err(|_| bad())?;
                        a / b
                    }
                    None => rest.trim().parse().map_err(|_| bad())?,
                };
                Ok(factor * PI)
            }
        }
    }
}

type RawBox = Vec<[Num; 2]>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    name: Option<String>,
    state_box: RawBox,
    periodic: Option<[bool; 3]>,
    input_box: RawBox,
    disturbance_box: RawBox,
    frame_disturbance_box: Option<RawBox>,
    reach_box: RawBox,
    #[serde(default)]
    avoid_boxes: Vec<RawBox>,
    tau: f64,
    substeps: usize,
    steps_per_segment: Option<usize>,
    grid_counts: [usize; 3],
    control_counts: [usize; 3],
    strategy: Option<String>,
    #[serde(rename = "M")]
    m: Option<usize>,
    seed: Option<u64>,
}

fn to_box(raw: &RawBox, field: &str) -> Result<Aabb<f64, 3>, ScenarioError> {
    if raw.len() != 3 {
        return Err(field_err(field, format!("expected 3 intervals, got {}", raw.len())));
    }
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for d in 0..3 {
        let f = format!("{field}[{d}]");
        lo[d] = raw[d][0].value(&f)?;
        hi[d] = raw[d][1].value(&f)?;
        if !lo[d].is_finite() || !hi[d].is_finite() {
            return Err(field_err(f, "bounds must be finite"));
        }
        if lo[d] > hi[d] {
            return Err(field_err(f, format!("lower bound {} exceeds upper bound {}", lo[d], hi[d])));
        }
    }
    Ok(Aabb::new(lo, hi).expect("checked bounds"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub state_box: Aabb<f64, 3>,
    pub periodic: [bool; 3],
    pub input_box: Aabb<f64, 3>,
    /// Disturbance acting on the ship in the world frame.
    pub disturbance_box: Aabb<f64, 3>,
    /// Disturbance as seen in any body frame; covers every rotation of `disturbance_box`.
    pub frame_disturbance_box: Aabb<f64, 3>,
    pub reach_box: Aabb<f64, 3>,
    pub avoid_boxes: Vec<Aabb<f64, 3>>,
    pub tau: f64,
    pub substeps: usize,
    pub steps_per_segment: usize,
    pub grid_counts: [usize; 3],
    pub control_counts: [usize; 3],
    pub strategy: Strategy,
    /// Overrides the obstructed-control limit of the symmetry layer.
    pub m: Option<usize>,
    pub seed: u64,
}

const SHIP: &str = include_str!("../scenarios/ship.toml");
const TOY: &str = include_str!("../scenarios/toy.toml");
const CORRIDOR: &str = include_str!("../scenarios/corridor.toml");

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let raw: Raw = toml::from_str(text)?;
        let state_box = to_box(&raw.state_box, "state_box")?;
        let periodic = raw.periodic.unwrap_or([false, false, true]);
        let disturbance_box = to_box(&raw.disturbance_box, "disturbance_box")?;
        let frame_disturbance_box = match &raw.frame_disturbance_box {
            Some(b) => to_box(b, "frame_disturbance_box")?,
            None => disturbance_union_all_frames(&disturbance_box),
        };
        if !frame_disturbance_box.contains_box(&disturbance_union_all_frames(&disturbance_box).inflate(&[-1e-12; 3]).unwrap_or(disturbance_box)) {
            return Err(field_err("frame_disturbance_box", "must cover every rotation of disturbance_box"));
        }
        let avoid_boxes = raw
            .avoid_boxes
            .iter()
            .enumerate()
            .map(|(i, b)| to_box(b, &format!("avoid_boxes[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        if !(raw.tau > 0.0 && raw.tau.is_finite()) {
            return Err(field_err("tau", "must be positive"));
        }
        if raw.substeps == 0 {
            return Err(field_err("substeps", "must be at least 1"));
        }
        let steps_per_segment = raw.steps_per_segment.unwrap_or(DEFAULT_STEPS_PER_SEGMENT);
        if steps_per_segment == 0 {
            return Err(field_err("steps_per_segment", "must be at least 1"));
        }
        for (field, counts) in [("grid_counts", raw.grid_counts), ("control_counts", raw.control_counts)] {
            if let Some(d) = counts.iter().position(|&n| n == 0) {
                return Err(field_err(format!("{field}[{d}]"), "must be at least 1"));
            }
        }
        if raw.control_counts.iter().product::<usize>() > u16::MAX as usize {
            return Err(field_err("control_counts", "too many control symbols"));
        }
        let strategy = match &raw.strategy {
            Some(s) => s.parse().map_err(|e| field_err("strategy", e))?,
            None => Strategy::S0,
        };
        if raw.m == Some(0) {
            return Err(field_err("M", "must be at least 1"));
        }
        let s = Self {
            name: raw.name.unwrap_or_else(|| "scenario".into()),
            state_box,
            periodic,
            input_box: to_box(&raw.input_box, "input_box")?,
            disturbance_box,
            frame_disturbance_box,
            reach_box: to_box(&raw.reach_box, "reach_box")?,
            avoid_boxes,
            tau: raw.tau,
            substeps: raw.substeps,
            steps_per_segment,
            grid_counts: raw.grid_counts,
            control_counts: raw.control_counts,
            strategy,
            m: raw.m,
            seed: raw.seed.unwrap_or(0),
        };
        s.grid().map_err(|e| field_err("grid_counts", e))?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn builtin(name: &str) -> Result<Self, ScenarioError> {
        Self::from_toml(Self::builtin_text(name)?)
    }

    pub fn builtin_text(name: &str) -> Result<&'static str, ScenarioError> {
        match name {
            "ship" => Ok(SHIP),
            "toy" => Ok(TOY),
            "corridor" => Ok(CORRIDOR),
            _ => Err(ScenarioError::UnknownBuiltin(name.into())),
        }
    }

    pub fn ship() -> Self {
        Self::builtin("ship").expect("built-in scene parses")
    }

    pub fn toy() -> Self {
        Self::builtin("toy").expect("built-in scene parses")
    }

    pub fn corridor() -> Self {
        Self::builtin("corridor").expect("built-in scene parses")
    }

    pub fn with_resolution(mut self, counts: [usize; 3]) -> Self {
        self.grid_counts = counts;
        self
    }

    pub fn grid(&self) -> Result<GridSpec<f64, 3>, GridError> {
        GridSpec::new(self.state_box, self.grid_counts, self.periodic)
    }

    pub fn control_grid(&self) -> GridSpec<f64, 3> {
        GridSpec::new(self.input_box, self.control_counts, [false; 3]).expect("validated control counts")
    }

    /// Header of the reach dictionary: one cross-section cell at the origin.
    pub fn reach_header(&self) -> ReachHeader<f64> {
        let mut h = ReachHeader::new(
            self.control_grid(),
            vec![Aabb::point([0.0; 3])],
            self.frame_disturbance_box,
            self.tau,
            self.substeps,
        );
        h.steps_per_segment = self.steps_per_segment;
        h
    }

    /// `"30x30x30"`.
    pub fn counts_label(&self) -> String {
        let [a, b, c] = self.grid_counts;
        format!("{a}x{b}x{c}")
    }
}

/// Parses `"30"` or `"30x30x30"`.
pub fn parse_resolution(s: &str) -> Result<[usize; 3], ScenarioError> {
    let bad = || field_err("resolution", format!("`{s}` is not N or NxNxN with N >= 1"));
    let parts: Vec<usize> = s.split('x').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    let counts = match parts.as_slice() {
        [n] => [*n; 3],
        [a, b, c] => [*a, *b, *c],
        _ => return Err(bad()),
    };
    if counts.contains(&0) {
        return Err(bad());
    }
    Ok(counts)
}
