//! Grid cell classification, relative-coordinate tuples and the symmetry layer that
//! groups cells by the control their relative pose suggests.

mod relative;
mod symbolic;

pub use relative::{
    build_rel_state, build_rel_states, relative_obstacle, relative_target, relevance_radius, RelObstacle, RelState,
    MAX_PIECE_WIDTH,
};
pub use symbolic::{
    build_sym_abstraction, last_box_indices, AbstractionParams, ControlOrdering, GreedyOrder, SymAbstraction, SymState,
};

use serde::{Deserialize, Serialize};

use crate::geometry::Aabb;
use crate::grid::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Reach,
    Avoid,
    Normal,
}

/// Avoid if the closed cell meets any obstacle, else Reach if it lies inside the target.
pub fn classify_cell(cell: &Aabb<f64, 3>, reach: &Aabb<f64, 3>, avoid: &[Aabb<f64, 3>]) -> Classification {
    if avoid.iter().any(|a| a.intersects(cell)) {
        Classification::Avoid
    } else if reach.contains_box(cell) {
        Classification::Reach
    } else {
        Classification::Normal
    }
}

pub fn classify_grid(grid: &GridSpec<f64, 3>, reach: &Aabb<f64, 3>, avoid: &[Aabb<f64, 3>]) -> Vec<Classification> {
    grid.cells().map(|c| classify_cell(&grid.cell_box(c), reach, avoid)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn target() -> Aabb<f64, 3> {
        Aabb::new([7.0, 0.0, PI / 3.0], [10.0, 6.5, 2.0 * PI / 3.0]).unwrap()
    }

    fn obstacle() -> Aabb<f64, 3> {
        Aabb::new([2.0, -3.0, -PI], [2.5, 3.0, PI]).unwrap()
    }

    #[test]
    fn classification_examples() {
        let inside = Aabb::new([8.0, 3.0, 1.1], [8.5, 3.5, 1.3]).unwrap();
        assert_eq!(classify_cell(&inside, &target(), &[obstacle()]), Classification::Reach);
        let overlapping = Aabb::new([2.3, 0.0, 0.0], [2.8, 0.5, 0.2]).unwrap();
        assert_eq!(classify_cell(&overlapping, &target(), &[obstacle()]), Classification::Avoid);
        let free = Aabb::new([4.0, 4.0, 0.0], [4.5, 4.5, 0.2]).unwrap();
        assert_eq!(classify_cell(&free, &target(), &[obstacle()]), Classification::Normal);
    }

    #[test]
    fn avoid_wins_over_reach() {
        let cell = Aabb::new([8.0, 3.0, 1.1], [8.5, 3.5, 1.3]).unwrap();
        let wall = Aabb::new([8.4, 0.0, -PI], [9.0, 6.0, PI]).unwrap();
        assert_eq!(classify_cell(&cell, &target(), &[wall]), Classification::Avoid);
    }
}
