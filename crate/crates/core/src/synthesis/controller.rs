use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::{self, ArtifactError};
use crate::grid::CellId;

/// Control symbol per cell, or none.
#[derive(Clone, Debug, PartialEq)]
pub struct Controller {
    grid_hash: String,
    tau: f64,
    assignment: Vec<Option<u32>>,
}

#[derive(Serialize, Deserialize)]
struct Stored {
    grid_hash: String,
    tau: f64,
    num_cells: usize,
    entries: Vec<[u32; 2]>,
}

const FORMAT_NAME: &str = "symsynth-controller";
const VERSION: u32 = 1;

impl Controller {
    pub fn new(grid_hash: String, tau: f64, num_cells: usize) -> Self {
        Self { grid_hash, tau, assignment: vec![None; num_cells] }
    }

    pub fn grid_hash(&self) -> &str {
        &self.grid_hash
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn get(&self, c: CellId) -> Option<u32> {
        self.assignment[c.index()]
    }

    pub fn set(&mut self, c: CellId, a: u32) {
        self.assignment[c.index()] = Some(a);
    }

    pub fn num_controlled(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_some()).count()
    }

    pub fn controlled(&self) -> impl Iterator<Item = (CellId, u32)> + '_ {
        self.assignment.iter().enumerate().filter_map(|(i, a)| a.map(|a| (CellId(i as u32), a)))
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        let body = Stored {
            grid_hash: self.grid_hash.clone(),
            tau: self.tau,
            num_cells: self.assignment.len(),
            entries: self.controlled().map(|(c, a)| [c.0, a]).collect(),
        };
        artifact::write(path, FORMAT_NAME, VERSION, &body)
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        let body: Stored = artifact::read(path, FORMAT_NAME, VERSION)?;
        let mut c = Self::new(body.grid_hash, body.tau, body.num_cells);
        for [cell, a] in body.entries {
            if cell as usize >= body.num_cells {
                return Err(artifact::mismatch(path, "cell count"));
            }
            c.set(CellId(cell), a);
        }
        Ok(c)
    }
}
