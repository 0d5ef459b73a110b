use std::array;

use serde::{Deserialize, Serialize};

use crate::geometry::GeometryError;
use crate::scalar::Scalar;

/// Closed axis-aligned box `[lo[0], hi[0]] x ... x [lo[D-1], hi[D-1]]`.
///
/// Degenerate (zero-width) sides are allowed, so a single point is a valid box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "Vec<[T; 2]>",
    into = "Vec<[T; 2]>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Aabb<T, const D: usize> {
    lo: [T; D],
    hi: [T; D],
}

impl<T: Scalar, const D: usize> Aabb<T, D> {
    pub fn new(lo: [T; D], hi: [T; D]) -> Result<Self, GeometryError> {
        for d in 0..D {
            if !lo[d].is_finite() || !hi[d].is_finite() {
                return Err(GeometryError::NonFinite);
            }
            if lo[d] > hi[d] {
                return Err(GeometryError::InvertedBounds {
                    dim: d,
                    lo: lo[d].as_f64(),
                    hi: hi[d].as_f64(),
                });
            }
        }
        Ok(Self { lo, hi })
    }

    /// Builds from per-dimension `[lo, hi]` pairs.
    pub fn from_intervals(iv: [[T; 2]; D]) -> Result<Self, GeometryError> {
        Self::new(array::from_fn(|d| iv[d][0]), array::from_fn(|d| iv[d][1]))
    }

    pub fn point(p: [T; D]) -> Self {
        Self { lo: p, hi: p }
    }

    /// Skips validation; callers guarantee `lo <= hi`.
    pub(crate) fn new_unchecked(lo: [T; D], hi: [T; D]) -> Self {
        debug_assert!((0..D).all(|d| lo[d] <= hi[d]), "inverted box {lo:?} {hi:?}");
        Self { lo, hi }
    }

    pub fn lo(&self) -> &[T; D] {
        &self.lo
    }

    pub fn hi(&self) -> &[T; D] {
        &self.hi
    }

    pub fn dim(&self) -> usize {
        D
    }

    pub fn interval(&self, d: usize) -> [T; 2] {
        [self.lo[d], self.hi[d]]
    }

    pub fn width(&self, d: usize) -> T {
        self.hi[d] - self.lo[d]
    }

    pub fn max_width(&self) -> T {
        (0..D).map(|d| self.width(d)).fold(T::zero(), T::max)
    }

    pub fn center(&self) -> [T; D] {
        let half = T::lit(0.5);
        array::from_fn(|d| (self.lo[d] + self.hi[d]) * half)
    }

    /// True iff the closed boxes share at least one point.
    pub fn intersects(&self, other: &Self) -> bool {
        (0..D).all(|d| self.lo[d] <= other.hi[d] && other.lo[d] <= self.hi[d])
    }

    pub fn contains_point(&self, p: &[T; D]) -> bool {
        (0..D).all(|d| self.lo[d] <= p[d] && p[d] <= self.hi[d])
    }

    pub fn contains_box(&self, other: &Self) -> bool {
        (0..D).all(|d| self.lo[d] <= other.lo[d] && other.hi[d] <= self.hi[d])
    }

    pub fn intersection(&self, other: &Self) -> Option<Self> {
        if !self.intersects(other) {
            return None;
        }
        Some(Self {
            lo: array::from_fn(|d| self.lo[d].max(other.lo[d])),
            hi: array::from_fn(|d| self.hi[d].min(other.hi[d])),
        })
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &Self) -> Self {
        Self {
            lo: array::from_fn(|d| self.lo[d].min(other.lo[d])),
            hi: array::from_fn(|d| self.hi[d].max(other.hi[d])),
        }
    }

    pub fn hull_point(&self, p: &[T; D]) -> Self {
        self.hull(&Self::point(*p))
    }

    pub fn translate(&self, v: &[T; D]) -> Self {
        Self {
            lo: array::from_fn(|d| self.lo[d] + v[d]),
            hi: array::from_fn(|d| self.hi[d] + v[d]),
        }
    }

    /// Minkowski sum `{a + b : a in self, b in other}`.
    pub fn minkowski_sum(&self, other: &Self) -> Self {
        Self {
            lo: array::from_fn(|d| self.lo[d] + other.lo[d]),
            hi: array::from_fn(|d| self.hi[d] + other.hi[d]),
        }
    }

    /// Grows every side outward by `by[d]` (negative values shrink; returns `None` if a side inverts).
    pub fn inflate(&self, by: &[T; D]) -> Option<Self> {
        let lo: [T; D] = array::from_fn(|d| self.lo[d] - by[d]);
        let hi: [T; D] = array::from_fn(|d| self.hi[d] + by[d]);
        (0..D).all(|d| lo[d] <= hi[d]).then_some(Self { lo, hi })
    }

    /// Euclidean distance from `p` to the box (zero inside).
    pub fn distance_to_point(&self, p: &[T; D]) -> T {
        self.distance_sq_to_point(p).sqrt()
    }

    pub fn distance_sq_to_point(&self, p: &[T; D]) -> T {
        let mut acc = T::zero();
        for d in 0..D {
            let gap = if p[d] < self.lo[d] {
                self.lo[d] - p[d]
            } else if p[d] > self.hi[d] {
                p[d] - self.hi[d]
            } else {
                T::zero()
            };
            acc = acc + gap * gap;
        }
        acc
    }

    /// All `2^D` corners, bit `d` of the index selecting `hi[d]`.
    pub fn vertices(&self) -> impl Iterator<Item = [T; D]> + '_ {
        (0..1usize << D).map(move |mask| {
            array::from_fn(|d| if mask >> d & 1 == 1 { self.hi[d] } else { self.lo[d] })
        })
    }

    pub fn cast<U: Scalar>(&self) -> Aabb<U, D> {
        Aabb {
            lo: array::from_fn(|d| U::lit(self.lo[d].as_f64())),
            hi: array::from_fn(|d| U::lit(self.hi[d].as_f64())),
        }
    }
}

impl<T: Scalar, const D: usize> TryFrom<Vec<[T; 2]>> for Aabb<T, D> {
    type Error = GeometryError;

    fn try_from(v: Vec<[T; 2]>) -> Result<Self, Self::Error> {
        if v.len() != D {
            return Err(GeometryError::DimensionMismatch {
                expected: D,
                found: v.len(),
            });
        }
        Self::new(array::from_fn(|d| v[d][0]), array::from_fn(|d| v[d][1]))
    }
}

impl<T: Scalar, const D: usize> From<Aabb<T, D>> for Vec<[T; 2]> {
    fn from(b: Aabb<T, D>) -> Self {
        (0..D).map(|d| [b.lo[d], b.hi[d]]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b2(lo: [f64; 2], hi: [f64; 2]) -> Aabb<f64, 2> {
        Aabb::new(lo, hi).unwrap()
    }

    #[test]
    fn touching_corner_counts_as_intersection() {
        assert!(b2([0.0, 0.0], [1.0, 1.0]).intersects(&b2([1.0, 1.0], [2.0, 2.0])));
        assert!(!b2([0.0, 0.0], [1.0, 1.0]).intersects(&b2([2.0, 2.0], [3.0, 3.0])));
    }

    #[test]
    fn rejects_inverted_and_nan() {
        assert!(matches!(
            Aabb::new([0.0, 2.0], [1.0, 1.0]),
            Err(GeometryError::InvertedBounds { dim: 1, .. })
        ));
        assert!(matches!(
            Aabb::new([f64::NAN], [1.0]),
            Err(GeometryError::NonFinite)
        ));
    }

    #[test]
    fn intersects_matches_per_dimension_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rand_box = |rng: &mut ChaCha8Rng| {
            let lo: [f64; 3] = array::from_fn(|_| rng.random_range(-2.0..2.0));
            let hi: [f64; 3] = array::from_fn(|d| lo[d] + rng.random_range(0.0..1.5));
            Aabb::new(lo, hi).unwrap()
        };
        for _ in 0..1000 {
            let a = rand_box(&mut rng);
            let b = rand_box(&mut rng);
            let oracle = (0..3).all(|d| {
                let lo = a.lo()[d].max(b.lo()[d]);
                let hi = a.hi()[d].min(b.hi()[d]);
                lo <= hi
            });
            assert_eq!(a.intersects(&b), oracle);
        }
    }

    #[test]
    fn distance_is_zero_inside() {
        let b = b2([0.0, 0.0], [1.0, 2.0]);
        assert_eq!(b.distance_to_point(&[0.5, 1.0]), 0.0);
        assert!((b.distance_to_point(&[4.0, 6.0]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn serde_uses_interval_pairs() {
        let b = b2([0.0, -1.5], [1.0, 2.0]);
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, "[[0.0,1.0],[-1.5,2.0]]");
        let back: Aabb<f64, 2> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<Aabb<f64, 2>>("[[1.0,0.0],[0.0,1.0]]").is_err());
    }
}
