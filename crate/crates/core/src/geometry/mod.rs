//! Boxes, H-polytopes, planar rotation bounds and a box R-tree.

mod aabb;
mod polytope;
mod rotation;
mod rtree;

pub use aabb::Aabb;
pub use polytope::{Halfspace, Polytope};
pub use rotation::{cos_range, rotate2, rotate_box_outer, rotate_state, sin_range, AngleInterval};
pub use rtree::SpatialIndex;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("lower bound {lo} exceeds upper bound {hi} in dimension {dim}")]
    InvertedBounds { dim: usize, lo: f64, hi: f64 },
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("constraint row {row} has an all-zero normal")]
    ZeroNormal { row: usize },
    #[error("angle interval [{lo}, {hi}] is inverted or wider than a full turn")]
    BadAngleInterval { lo: f64, hi: f64 },
    #[error("spatial index is empty")]
    EmptyIndex,
    #[error("requested {k} neighbours from an index of {len}")]
    TooManyNeighbors { k: usize, len: usize },
}
