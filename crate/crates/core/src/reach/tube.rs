use serde::{Deserialize, Serialize};

use crate::geometry::Aabb;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct TubeSegment<T> {
    pub t_start: T,
    pub t_end: T,
    pub bbox: Aabb<T, 3>,
}

/// Time-annotated boxes covering a reachable set over `[0, tau]`.
///
/// `segments` partition the horizon; `last` encloses the states reachable at exactly
/// `tau` and is contained in the final segment box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct TimedTube<T> {
    segments: Vec<TubeSegment<T>>,
    last: Aabb<T, 3>,
}

impl<T: Scalar> TimedTube<T> {
    pub fn from_parts(segments: Vec<TubeSegment<T>>, last: Aabb<T, 3>) -> Self {
        debug_assert!(!segments.is_empty());
        Self { segments, last }
    }

    pub fn segments(&self) -> &[TubeSegment<T>] {
        &self.segments
    }

    /// The `full` view: every segment box.
    pub fn full(&self) -> impl Iterator<Item = &Aabb<T, 3>> + '_ {
        self.segments.iter().map(|s| &s.bbox)
    }

    /// The `last` view.
    pub fn last(&self) -> &Aabb<T, 3> {
        &self.last
    }

    pub fn horizon(&self) -> T {
        self.segments.last().map(|s| s.t_end).unwrap_or_else(T::zero)
    }

    pub fn hull(&self) -> Aabb<T, 3> {
        self.full().skip(1).fold(self.segments[0].bbox, |acc, b| acc.hull(b))
    }

    /// Segment whose window holds `t` (closed on both ends; the earlier segment wins at a seam).
    pub fn segment_at(&self, t: T) -> Option<&TubeSegment<T>> {
        self.segments.iter().find(|s| s.t_start <= t && t <= s.t_end)
    }
}
