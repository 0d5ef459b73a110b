use std::path::Path;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::artifact::{self, ArtifactError};
use crate::geometry::Aabb;
use crate::grid::{CellId, GridSpec};
use crate::reach::{compute_tube, ReachError, ShipModel, TimedTube, DEFAULT_STEPS_PER_SEGMENT};
use crate::scalar::Scalar;

pub const REACH_DICT_VERSION: u32 = 1;

/// Everything a reach dictionary depends on; a cached file is reused only if its
/// header matches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ReachHeader<T> {
    pub control_grid: GridSpec<T, 3>,
    pub control_grid_hash: String,
    pub cross_section: Vec<Aabb<T, 3>>,
    pub disturbance: Aabb<T, 3>,
    pub tau: T,
    pub substeps: usize,
    pub steps_per_segment: usize,
}

impl<T: Scalar + Serialize> ReachHeader<T> {
    pub fn new(control_grid: GridSpec<T, 3>, cross_section: Vec<Aabb<T, 3>>, disturbance: Aabb<T, 3>, tau: T, substeps: usize) -> Self {
        let control_grid_hash = control_grid.hash_hex();
        Self {
            control_grid,
            control_grid_hash,
            cross_section,
            disturbance,
            tau,
            substeps,
            steps_per_segment: DEFAULT_STEPS_PER_SEGMENT,
        }
    }
}

/// Relative tubes indexed by cross-section cell `j` and control symbol `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ReachDict<T> {
    header: ReachHeader<T>,
    tubes: Vec<Vec<TimedTube<T>>>,
}

const FORMAT_NAME: &str = "symsynth-reachdict";

impl<T: Scalar> ReachDict<T> {
    pub fn header(&self) -> &ReachHeader<T> {
        &self.header
    }

    pub fn num_cross_sections(&self) -> usize {
        self.tubes.len()
    }

    pub fn num_controls(&self) -> usize {
        self.header.control_grid.num_cells()
    }

    pub fn tube(&self, j: usize, a: usize) -> &TimedTube<T> {
        &self.tubes[j][a]
    }

    pub fn tubes(&self, j: usize) -> &[TimedTube<T>] {
        &self.tubes[j]
    }

    /// `beta(a)`: the center of control cell `a`.
    pub fn control(&self, a: usize) -> [T; 3] {
        self.header.control_grid.center_of(CellId(a as u32))
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError>
    where
        T: Serialize,
    {
        artifact::write(path, FORMAT_NAME, REACH_DICT_VERSION, self)
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError>
    where
        T: for<'de> Deserialize<'de>,
    {
        artifact::read(path, FORMAT_NAME, REACH_DICT_VERSION)
    }

    /// Loads and checks that the file was built for `expected`.
    pub fn load_matching(path: &Path, expected: &ReachHeader<T>) -> Result<Self, ArtifactError>
    where
        T: for<'de> Deserialize<'de>,
    {
        let d = Self::load(path)?;
        if &d.header != expected {
            let what = if d.header.control_grid_hash != expected.control_grid_hash {
                "control grid"
            } else if d.header.disturbance != expected.disturbance {
                "disturbance"
            } else {
                "horizon or partition"
            };
            return Err(artifact::mismatch(path, what));
        }
        Ok(d)
    }
}

/// Computes one tube per (cross-section cell, control symbol), in parallel over controls.
pub fn build_reach_dict<T: Scalar>(header: ReachHeader<T>) -> Result<ReachDict<T>, ReachError> {
    let n = header.control_grid.num_cells();
    let workers = thread::available_parallelism().map(|w| w.get()).unwrap_or(1).min(n.max(1));
    let mut tubes = Vec::with_capacity(header.cross_section.len());
    for (j, x0) in header.cross_section.iter().enumerate() {
        let chunk = n.div_ceil(workers);
        let parts: Vec<Result<Vec<TimedTube<T>>, ReachError>> = thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|k| {
                    let header = &header;
                    s.spawn(move || {
                        (k * chunk..((k + 1) * chunk).min(n))
                            .map(|a| {
                                let model = ShipModel {
                                    control: header.control_grid.center_of(CellId(a as u32)),
                                    disturbance: header.disturbance,
                                    tau: header.tau,
                                    substeps: header.substeps,
                                    steps_per_segment: header.steps_per_segment,
                                };
                                compute_tube(&model, x0).map_err(|e| ReachError::Tube { j, a, source: Box::new(e) })
                            })
                            .collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("reach worker panicked")).collect()
        });
        let mut row = Vec::with_capacity(n);
        for p in parts {
            row.extend(p?);
        }
        tubes.push(row);
    }
    Ok(ReachDict { header, tubes })
}
