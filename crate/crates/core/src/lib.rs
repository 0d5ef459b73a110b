//! Reach-avoid controller synthesis on grid abstractions, accelerated by a symmetry
//! layer that groups cells by their pose relative to targets and obstacles.

pub mod abstraction;
pub mod artifact;
pub mod geometry;
pub mod grid;
mod par;
pub mod pipeline;
pub mod reach;
pub mod scalar;
pub mod scenario;
pub mod symmetry;
pub mod synthesis;
pub mod validation;

pub use scalar::Scalar;

pub type Aabb3 = geometry::Aabb<f64, 3>;
pub type Polytope3 = geometry::Polytope<f64, 3>;
pub type Grid3 = grid::GridSpec<f64, 3>;
pub type Tube = reach::TimedTube<f64>;
pub type ReachDict = reach::ReachDict<f64>;
pub type GroupElement = symmetry::GroupElement<f64>;
