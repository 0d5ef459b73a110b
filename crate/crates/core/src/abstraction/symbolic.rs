use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::abstraction::{Classification, RelState};
use crate::artifact::{self, ArtifactError};
use crate::geometry::SpatialIndex;
use crate::grid::CellId;
use crate::par::par_map;
use crate::reach::ReachDict;

/// Abstract state of a cell in the symmetry layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymState {
    Reach,
    Avoid,
    /// Cross-section cell `j` and the first unobstructed control found for it.
    Pair { j: u32, a: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlOrdering {
    /// Controls whose final boxes lie nearest the relative target come first.
    Greedy,
    /// Controls in index order.
    Arbitrary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractionParams {
    /// A cell is condemned once this many controls are obstructed.
    pub m: usize,
    pub ordering: ControlOrdering,
    pub batch_start: usize,
    pub batch_factor: usize,
}

impl AbstractionParams {
    pub fn new(m: usize, ordering: ControlOrdering) -> Self {
        Self { m, ordering, batch_start: 3, batch_factor: 5 }
    }
}

/// Yields controls nearest a target point in growing k-NN rounds, skipping repeats.
pub struct GreedyOrder<'a> {
    index: &'a SpatialIndex<f64, 3>,
    target: [f64; 3],
    k: usize,
    factor: usize,
    seen: Vec<bool>,
    pending: std::vec::IntoIter<usize>,
    exhausted: bool,
}

impl<'a> GreedyOrder<'a> {
    pub fn new(index: &'a SpatialIndex<f64, 3>, target: [f64; 3], batch_start: usize, batch_factor: usize) -> Self {
        Self {
            index,
            target,
            k: batch_start.max(1),
            factor: batch_factor.max(2),
            seen: vec![false; index.len()],
            pending: Vec::new().into_iter(),
            exhausted: index.is_empty(),
        }
    }

    /// Skips `a` in later rounds.
    pub fn mark_seen(&mut self, a: usize) {
        self.seen[a] = true;
    }
}

impl Iterator for GreedyOrder<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            for a in self.pending.by_ref() {
                if !self.seen[a] {
                    self.seen[a] = true;
                    return Some(a);
                }
            }
            if self.exhausted {
                return None;
            }
            let n = self.index.len();
            let k = self.k.min(n);
            let batch = self.index.knn(&self.target, k).expect("k within index size");
            self.pending = batch.into_iter();
            self.exhausted = k == n;
            self.k = self.k.saturating_mul(self.factor);
        }
    }
}

/// k-NN index over the final boxes of the tubes of each cross-section cell.
pub fn last_box_indices(rd: &ReachDict<f64>) -> Vec<SpatialIndex<f64, 3>> {
    (0..rd.num_cross_sections())
        .map(|j| SpatialIndex::new(rd.tubes(j).iter().enumerate().map(|(a, t)| (*t.last(), a))))
        .collect()
}

/// Cross-section cell holding the relative image of a cell.
fn cross_section_of(rel: &RelState, rd: &ReachDict<f64>) -> usize {
    let c = rel.rel_cell.center();
    let cs = &rd.header().cross_section;
    (0..cs.len())
        .min_by(|&x, &y| cs[x].distance_sq_to_point(&c).total_cmp(&cs[y].distance_sq_to_point(&c)))
        .unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymAbstraction {
    r_gs: Vec<SymState>,
    /// Cells condemned because `m` controls were obstructed.
    cao: Vec<CellId>,
    params: AbstractionParams,
}

#[derive(Serialize, Deserialize)]
struct Stored {
    grid_hash: String,
    abstraction: SymAbstraction,
}

const FORMAT_NAME: &str = "symsynth-abstraction";
const VERSION: u32 = 1;

impl SymAbstraction {
    pub fn image(&self, c: CellId) -> SymState {
        self.r_gs[c.index()]
    }

    pub fn r_gs(&self) -> &[SymState] {
        &self.r_gs
    }

    pub fn params(&self) -> &AbstractionParams {
        &self.params
    }

    pub fn cao_cells(&self) -> &[CellId] {
        &self.cao
    }

    pub fn num_cao(&self) -> usize {
        self.cao.len()
    }

    /// Distinct `(j, a*)` states.
    pub fn pairs(&self) -> BTreeSet<SymState> {
        self.r_gs.iter().copied().filter(|s| matches!(s, SymState::Pair { .. })).collect()
    }

    /// `|X_sym|`: the pairs plus the reach and avoid states.
    pub fn num_states(&self) -> usize {
        self.pairs().len() + 2
    }

    pub fn preimage(&self, s: SymState) -> Vec<CellId> {
        self.r_gs.iter().enumerate().filter(|(_, &t)| t == s).map(|(i, _)| CellId(i as u32)).collect()
    }

    pub fn preimage_counts(&self) -> BTreeMap<SymState, usize> {
        let mut m = BTreeMap::new();
        for &s in &self.r_gs {
            *m.entry(s).or_insert(0) += 1;
        }
        m
    }

    pub fn save(&self, path: &Path, grid_hash: &str) -> Result<(), ArtifactError> {
        let body = Stored { grid_hash: grid_hash.to_string(), abstraction: self.clone() };
        artifact::write(path, FORMAT_NAME, VERSION, &body)
    }

    pub fn load(path: &Path, grid_hash: &str) -> Result<Self, ArtifactError> {
        let body: Stored = artifact::read(path, FORMAT_NAME, VERSION)?;
        if body.grid_hash != grid_hash {
            return Err(artifact::mismatch(path, "state grid"));
        }
        Ok(body.abstraction)
    }
}

enum Outcome {
    State(SymState),
    Condemned,
}

fn abstract_cell(rel: &RelState, rd: &ReachDict<f64>, indices: &[SpatialIndex<f64, 3>], params: &AbstractionParams) -> Outcome {
    match rel.class {
        Classification::Avoid => return Outcome::State(SymState::Avoid),
        Classification::Reach => return Outcome::State(SymState::Reach),
        Classification::Normal => {}
    }
    let j = cross_section_of(rel, rd);
    let tubes = rd.tubes(j);
    let m = params.m.clamp(1, tubes.len());
    let try_control = |a: usize| {
        if tubes[a].full().any(|b| rel.hits_avoid(b)) {
            None
        } else {
            Some(SymState::Pair { j: j as u32, a: a as u32 })
        }
    };
    let found = match params.ordering {
        ControlOrdering::Greedy => GreedyOrder::new(&indices[j], rel.target, params.batch_start, params.batch_factor)
            .take(m)
            .find_map(try_control),
        ControlOrdering::Arbitrary => (0..tubes.len()).take(m).find_map(try_control),
    };
    match found {
        Some(s) => Outcome::State(s),
        None => Outcome::Condemned,
    }
}

/// Maps every cell to an abstract state, in parallel over cells.
pub fn build_sym_abstraction(rels: &[RelState], rd: &ReachDict<f64>, params: AbstractionParams) -> SymAbstraction {
    let indices = last_box_indices(rd);
    let outcomes = par_map(rels, |rel| abstract_cell(rel, rd, &indices, &params));
    let mut r_gs = Vec::with_capacity(rels.len());
    let mut cao = Vec::new();
    for (rel, o) in rels.iter().zip(outcomes) {
        match o {
            Outcome::State(s) => r_gs.push(s),
            Outcome::Condemned => {
                r_gs.push(SymState::Avoid);
                cao.push(rel.cell);
            }
        }
    }
    SymAbstraction { r_gs, cao, params }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;

    fn line_index(n: usize) -> SpatialIndex<f64, 3> {
        SpatialIndex::new((0..n).map(|i| (Aabb::point([i as f64, 0.0, 0.0]), i)))
    }

    #[test]
    fn greedy_order_visits_everything_once() {
        let ix = line_index(50);
        let order: Vec<usize> = GreedyOrder::new(&ix, [20.2, 0.0, 0.0], 3, 5).collect();
        assert_eq!(order.len(), 50);
        assert_eq!(&order[..3], &[20, 21, 19]);
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn greedy_order_rounds_grow() {
        let ix = line_index(100);
        let mut it = GreedyOrder::new(&ix, [0.0; 3], 3, 5);
        let first: Vec<usize> = it.by_ref().take(3).collect();
        assert_eq!(first, vec![0, 1, 2]);
        // second round fetches the 15 nearest and skips the three already seen
        assert_eq!(it.next(), Some(3));
    }

    #[test]
    fn marked_controls_are_skipped() {
        let ix = line_index(10);
        let mut it = GreedyOrder::new(&ix, [0.0; 3], 3, 5);
        it.mark_seen(0);
        assert_eq!(it.next(), Some(1));
    }
}
