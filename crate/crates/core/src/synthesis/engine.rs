use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::abstraction::{last_box_indices, Classification, RelState, SymAbstraction, SymState};
use crate::geometry::SpatialIndex;
use crate::grid::{CellId, CellSet};
use crate::reach::ReachDict;
use crate::synthesis::{Cache, Controller, Exploration, Problem, StrategyConfig};

#[derive(Clone, Debug)]
pub struct SynthesisOutput {
    pub controller: Controller,
    /// Reach cells plus every controlled cell.
    pub winning: CellSet,
    /// Controlled cells in the order they were added.
    pub added: Vec<CellId>,
    pub iterations: usize,
    /// Per pass, the explored cells over the cells still open at its start.
    pub explored_fracs: Vec<f64>,
    pub cache: Option<Cache>,
    pub transitions_checked: u64,
}

impl SynthesisOutput {
    pub fn explored_frac(&self) -> f64 {
        if self.explored_fracs.is_empty() {
            return 0.0;
        }
        self.explored_fracs.iter().sum::<f64>() / self.explored_fracs.len() as f64
    }
}

struct State<'a> {
    p: &'a Problem<'a>,
    r: CellSet,
    avoid: CellSet,
    controller: Controller,
    added: Vec<CellId>,
    checked: u64,
    open_normal: usize,
}

impl<'a> State<'a> {
    fn new(p: &'a Problem<'a>, tau: f64) -> Self {
        let n = p.grid.num_cells();
        let of = |k: Classification| CellSet::from_cells(n, p.grid.cells().filter(|c| p.classes[c.index()] == k));
        let open_normal = p.classes.iter().filter(|&&k| k == Classification::Normal).count();
        Self {
            p,
            r: of(Classification::Reach),
            avoid: of(Classification::Avoid),
            controller: Controller::new(p.grid.hash_hex(), tau, n),
            added: Vec::new(),
            checked: 0,
            open_normal,
        }
    }

    fn try_control(&mut self, cell_box: &crate::Aabb3, theta_index: usize, a: usize) -> bool {
        self.checked += 1;
        self.p.table.check(self.p.grid, cell_box, theta_index, a, &self.r, &self.avoid)
    }

    fn accept(&mut self, c: CellId, a: usize) {
        self.r.insert(c);
        self.controller.set(c, a as u32);
        self.added.push(c);
        self.open_normal -= 1;
    }

    fn finish(self, iterations: usize, explored_fracs: Vec<f64>, cache: Option<Cache>) -> SynthesisOutput {
        SynthesisOutput {
            controller: self.controller,
            winning: self.r,
            added: self.added,
            iterations,
            explored_fracs,
            cache,
            transitions_checked: self.checked,
        }
    }
}

/// Plain fixed point: every open Normal cell is tried each pass, with controls in index
/// order or a random subset of the budget.
pub fn synth_baseline(p: &Problem, rd: &ReachDict<f64>, cfg: &StrategyConfig, seed: u64) -> SynthesisOutput {
    let mut st = State::new(p, rd.header().tau);
    let n = p.table.n_controls();
    let budget = cfg.budget_for(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut open: Vec<CellId> = p.grid.cells().filter(|c| p.classes[c.index()] == Classification::Normal).collect();
    let mut fracs = Vec::new();
    let mut iterations = 0;
    while !open.is_empty() {
        iterations += 1;
        fracs.push(if st.open_normal == 0 { 0.0 } else { open.len() as f64 / st.open_normal as f64 });
        let before = st.added.len();
        for &c in &open {
            let cb = p.grid.cell_box(c);
            let t = p.grid.coords_of(c)[2];
            let found = match cfg.exploration {
                Exploration::Random => sample(&mut rng, n, budget).into_iter().find(|&a| st.try_control(&cb, t, a)),
                _ => (0..budget).find(|&a| st.try_control(&cb, t, a)),
            };
            if let Some(a) = found {
                st.accept(c, a);
            }
        }
        if st.added.len() == before {
            break;
        }
        open.retain(|c| !st.r.contains(*c));
    }
    st.finish(iterations, fracs, None)
}

/// Controls of one cell ordered by distance of their final boxes to the cell's relative
/// target, fetched in growing rounds and kept across passes.
struct LazyOrder {
    prefix: Vec<u16>,
    k: usize,
}

impl LazyOrder {
    fn get(&mut self, i: usize, index: &SpatialIndex<f64, 3>, target: &[f64; 3], cfg: &StrategyConfig) -> Option<usize> {
        let n = index.len();
        if i >= n {
            return None;
        }
        while i >= self.prefix.len() {
            self.k = if self.k == 0 { cfg.batch_start.max(1) } else { self.k * cfg.batch_factor.max(2) }.min(n);
            self.prefix = index.knn(target, self.k).expect("k within index size").into_iter().map(|a| a as u16).collect();
        }
        Some(self.prefix[i] as usize)
    }
}

/// Marks controls tried for the current cell and resets cheaply.
struct Tried {
    flags: Vec<bool>,
    list: Vec<usize>,
}

impl Tried {
    fn new(n: usize) -> Self {
        Self { flags: vec![false; n], list: Vec::new() }
    }

    fn clear(&mut self) {
        for &a in &self.list {
            self.flags[a] = false;
        }
        self.list.clear();
    }

    fn mark(&mut self, a: usize) -> bool {
        if self.flags[a] {
            return false;
        }
        self.flags[a] = true;
        self.list.push(a);
        true
    }

    fn count(&self) -> usize {
        self.list.len()
    }
}

/// Fixed point guided by the symmetry layer: cached controls of a cell's abstract state
/// go first, then fresh batches; with pruning, only neighbors of new cells are revisited.
pub fn synth_symmetry(
    p: &Problem,
    sym: &SymAbstraction,
    rels: &[RelState],
    rd: &ReachDict<f64>,
    cfg: &StrategyConfig,
    seed: u64,
) -> SynthesisOutput {
    let mut st = State::new(p, rd.header().tau);
    let n = p.table.n_controls();
    let budget = cfg.budget_for(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = last_box_indices(rd);
    let mut cache = Cache::new(sym);
    let mut orders: Vec<LazyOrder> = (0..p.grid.num_cells()).map(|_| LazyOrder { prefix: Vec::new(), k: 0 }).collect();
    let mut tried = Tried::new(n);
    let is_pair = |c: CellId| matches!(sym.image(c), SymState::Pair { .. });

    let mut open: Vec<CellId> = p.grid.cells().filter(|&c| is_pair(c) && !st.r.contains(c)).collect();
    let mut fracs = Vec::new();
    let mut iterations = 0;
    while !open.is_empty() {
        iterations += 1;
        fracs.push(if st.open_normal == 0 { 0.0 } else { open.len() as f64 / st.open_normal as f64 });
        let before = st.added.len();
        for &c in &open {
            if st.r.contains(c) {
                continue;
            }
            let s = sym.image(c);
            let SymState::Pair { j, .. } = s else { continue };
            let cb = p.grid.cell_box(c);
            let t = p.grid.coords_of(c)[2];
            tried.clear();
            let mut found = None;
            for &(_, a) in cache.list(s) {
                if tried.count() >= budget {
                    break;
                }
                let a = a as usize;
                if tried.mark(a) && st.try_control(&cb, t, a) {
                    found = Some(a);
                    break;
                }
            }
            if found.is_none() {
                found = match cfg.exploration {
                    Exploration::Greedy => {
                        let target = rels[c.index()].target;
                        let index = &indices[j as usize];
                        let order = &mut orders[c.index()];
                        let mut size = cfg.batch_start.max(1);
                        let mut cursor = 0;
                        let mut hit = None;
                        'batches: while tried.count() < budget {
                            let rem = budget - tried.count();
                            let batch: Vec<usize> = if rem > cfg.random_tail {
                                let take = size.min(rem - cfg.random_tail);
                                size = size.saturating_mul(cfg.batch_factor.max(2));
                                let mut b = Vec::with_capacity(take);
                                while b.len() < take {
                                    let Some(a) = order.get(cursor, index, &target, cfg) else { break };
                                    cursor += 1;
                                    if !tried.flags[a] {
                                        b.push(a);
                                    }
                                }
                                b
                            } else {
                                let untried: Vec<usize> = (0..n).filter(|&a| !tried.flags[a]).collect();
                                let k = rem.min(untried.len());
                                sample(&mut rng, untried.len(), k).into_iter().map(|i| untried[i]).collect()
                            };
                            if batch.is_empty() {
                                break;
                            }
                            for a in batch {
                                tried.mark(a);
                                if st.try_control(&cb, t, a) {
                                    hit = Some(a);
                                    break 'batches;
                                }
                            }
                        }
                        hit
                    }
                    _ => {
                        let mut hit = None;
                        for a in 0..n {
                            if tried.count() >= budget {
                                break;
                            }
                            if tried.mark(a) && st.try_control(&cb, t, a) {
                                hit = Some(a);
                                break;
                            }
                        }
                        hit
                    }
                };
            }
            if let Some(a) = found {
                st.accept(c, a);
                cache.update(s, a as u32);
            }
        }
        let new = &st.added[before..];
        if new.is_empty() {
            break;
        }
        if cfg.pruning {
            let mut next = CellSet::new(p.grid.num_cells());
            p.neighborhood.extend(p.grid, new, &mut next);
            open = next.iter().filter(|&c| is_pair(c) && !st.r.contains(c)).collect();
        } else {
            open.retain(|c| !st.r.contains(*c));
        }
    }
    st.finish(iterations, fracs, Some(cache))
}
