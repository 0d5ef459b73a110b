use crate::geometry::{rotate_box_outer, Aabb, AngleInterval};
use crate::grid::{CellId, CellSet, GridSpec};
use crate::reach::ReachDict;
use crate::symmetry::translate_planar;

/// Relative tubes rotated over the heading range of each heading slab of the grid.
///
/// A cell's absolute tube is the rotated box plus the cell's planar extent, so it only
/// depends on the heading index and the control.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    n_controls: usize,
    n_segments: usize,
    boxes: Vec<Aabb<f64, 3>>,
}

impl TransitionTable {
    pub fn new(grid: &GridSpec<f64, 3>, rd: &ReachDict<f64>) -> Self {
        assert_eq!(rd.num_cross_sections(), 1, "transition table needs a single cross-section cell");
        let tubes = rd.tubes(0);
        let n_controls = tubes.len();
        let n_segments = tubes[0].segments().len();
        let n_theta = grid.counts()[2];
        let mut boxes = Vec::with_capacity(n_theta * n_controls * (n_segments + 1));
        for t in 0..n_theta {
            let slab = grid.cell_box(grid.id_of(&[0, 0, t]));
            let angles = AngleInterval { lo: slab.lo()[2], hi: slab.hi()[2] };
            for tube in tubes {
                for b in tube.full().chain([tube.last()]) {
                    boxes.push(rotate_box_outer(b, angles));
                }
            }
        }
        Self { n_controls, n_segments, boxes }
    }

    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    fn swept(&self, theta_index: usize, a: usize) -> &[Aabb<f64, 3>] {
        let stride = self.n_segments + 1;
        let start = (theta_index * self.n_controls + a) * stride;
        &self.boxes[start..start + stride]
    }

    /// Absolute final box of control `a` from `cell`.
    pub fn last_box(&self, grid: &GridSpec<f64, 3>, cell: CellId, a: usize) -> Aabb<f64, 3> {
        let t = grid.coords_of(cell)[2];
        translate_planar(&self.swept(t, a)[self.n_segments], &grid.cell_box(cell))
    }

    /// Absolute segment boxes of control `a` from `cell`.
    pub fn segment_boxes(&self, grid: &GridSpec<f64, 3>, cell: CellId, a: usize) -> Vec<Aabb<f64, 3>> {
        let t = grid.coords_of(cell)[2];
        let cb = grid.cell_box(cell);
        self.swept(t, a)[..self.n_segments].iter().map(|b| translate_planar(b, &cb)).collect()
    }

    /// Every cell meeting the final box is in `r`, and no segment leaves the grid or
    /// meets a cell of `avoid`.
    pub fn transition_ok(&self, grid: &GridSpec<f64, 3>, cell: CellId, a: usize, r: &CellSet, avoid: &CellSet) -> bool {
        let cb = grid.cell_box(cell);
        self.check(grid, &cb, grid.coords_of(cell)[2], a, r, avoid)
    }

    pub(crate) fn check(
        &self,
        grid: &GridSpec<f64, 3>,
        cell_box: &Aabb<f64, 3>,
        theta_index: usize,
        a: usize,
        r: &CellSet,
        avoid: &CellSet,
    ) -> bool {
        let sw = self.swept(theta_index, a);
        let last = translate_planar(&sw[self.n_segments], cell_box);
        if grid.for_each_cover(&last, |c| r.contains(c)) != Some(true) {
            return false;
        }
        sw[..self.n_segments]
            .iter()
            .all(|s| grid.for_each_cover(&translate_planar(s, cell_box), |c| !avoid.contains(c)) == Some(true))
    }
}

/// Per-dimension index radius within which a newly added cell can change another
/// cell's transitions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighborhood {
    reach: [i64; 3],
}

impl Neighborhood {
    /// `max_travel[d]` bounds how far any tube gets from its start along `d`.
    pub fn new(grid: &GridSpec<f64, 3>, max_travel: [f64; 3]) -> Self {
        let reach = std::array::from_fn(|d| {
            let w = grid.cell_width(d);
            if w == 0.0 {
                0
            } else {
                (1.0 + max_travel[d] / w + 1e-9).floor() as i64
            }
        });
        Self { reach }
    }

    pub fn from_reach_dict(grid: &GridSpec<f64, 3>, rd: &ReachDict<f64>) -> Self {
        Self::new(grid, max_travel(rd))
    }

    pub fn reach(&self) -> [i64; 3] {
        self.reach
    }

    /// Adds the neighborhood of every cell in `new_cells` to `out`.
    pub fn extend(&self, grid: &GridSpec<f64, 3>, new_cells: &[CellId], out: &mut CellSet) {
        let counts = grid.counts();
        for &c in new_cells {
            let x = grid.coords_of(c);
            let mut ranges = [(0i64, 0i64); 3];
            for d in 0..3 {
                let (i, n, k) = (x[d] as i64, counts[d] as i64, self.reach[d]);
                ranges[d] = if grid.periodic()[d] {
                    if 2 * k + 1 >= n {
                        (0, n - 1)
                    } else {
                        (i - k, i + k)
                    }
                } else {
                    ((i - k).max(0), (i + k).min(n - 1))
                };
            }
            grid.walk_ranges(&ranges, &mut |n| {
                out.insert(n);
                true
            });
        }
    }
}

/// Largest per-dimension distance from the start reached by any tube: the planar
/// radius for both position axes and the largest heading change.
pub fn max_travel(rd: &ReachDict<f64>) -> [f64; 3] {
    let mut r: f64 = 0.0;
    let mut th: f64 = 0.0;
    for j in 0..rd.num_cross_sections() {
        for t in rd.tubes(j) {
            for b in t.full() {
                for v in b.vertices() {
                    r = r.max(v[0].hypot(v[1]));
                    th = th.max(v[2].abs());
                }
            }
        }
    }
    [r, r, th]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec<f64, 3> {
        GridSpec::new(Aabb::new([0.0, 0.0, -std::f64::consts::PI], [5.0, 5.0, std::f64::consts::PI]).unwrap(), [10, 10, 10], [false, false, true])
            .unwrap()
    }

    #[test]
    fn one_ring_for_short_travel() {
        let n = Neighborhood::new(&grid(), [0.3, 0.3, 0.3]);
        assert_eq!(n.reach(), [1, 1, 1]);
    }

    #[test]
    fn empty_input_empty_output() {
        let g = grid();
        let mut out = CellSet::new(g.num_cells());
        Neighborhood::new(&g, [0.3; 3]).extend(&g, &[], &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn union_of_neighborhoods() {
        let g = grid();
        let nb = Neighborhood::new(&g, [0.3; 3]);
        let a = g.id_of(&[4, 4, 0]);
        let b = g.id_of(&[5, 4, 0]);
        let mut both = CellSet::new(g.num_cells());
        nb.extend(&g, &[a, b], &mut both);
        let mut sep = CellSet::new(g.num_cells());
        nb.extend(&g, &[a], &mut sep);
        nb.extend(&g, &[b], &mut sep);
        assert_eq!(both, sep);
        // 4 x 3 planar block times 3 headings, wrapping at index 0
        assert_eq!(both.len(), 36);
        assert!(both.contains(g.id_of(&[3, 3, 9])));
    }
}
