//! Uniform partition of a box into cells, with optional periodic dimensions.

use std::array;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::Aabb;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid count for dimension {dim} must be positive")]
    ZeroCount { dim: usize },
    #[error("periodic dimension {dim} has zero width")]
    DegeneratePeriodic { dim: usize },
    #[error("grid has {cells} cells, more than the supported {max}")]
    TooManyCells { cells: usize, max: usize },
}

/// Flat cell index, row-major with the last dimension varying fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl CellId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct GridSpec<T, const D: usize> {
    bounds: Aabb<T, D>,
    #[serde(with = "serde_arrays")]
    counts: [usize; D],
    #[serde(with = "serde_arrays")]
    periodic: [bool; D],
}

impl<T: Scalar, const D: usize> GridSpec<T, D> {
    pub fn new(bounds: Aabb<T, D>, counts: [usize; D], periodic: [bool; D]) -> Result<Self, GridError> {
        for d in 0..D {
            if counts[d] == 0 {
                return Err(GridError::ZeroCount { dim: d });
            }
            if periodic[d] && bounds.width(d) <= T::zero() {
                return Err(GridError::DegeneratePeriodic { dim: d });
            }
        }
        let cells = counts.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
        match cells {
            Some(n) if n <= u32::MAX as usize => Ok(Self { bounds, counts, periodic }),
            _ => Err(GridError::TooManyCells { cells: cells.unwrap_or(usize::MAX), max: u32::MAX as usize }),
        }
    }

    pub fn bounds(&self) -> &Aabb<T, D> {
        &self.bounds
    }

    pub fn counts(&self) -> &[usize; D] {
        &self.counts
    }

    pub fn periodic(&self) -> &[bool; D] {
        &self.periodic
    }

    pub fn num_cells(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn cell_width(&self, d: usize) -> T {
        self.bounds.width(d) / T::lit(self.counts[d] as f64)
    }

    pub fn cell_widths(&self) -> [T; D] {
        array::from_fn(|d| self.cell_width(d))
    }

    pub fn coords_of(&self, id: CellId) -> [usize; D] {
        let mut rest = id.index();
        let mut out = [0; D];
        for d in (0..D).rev() {
            out[d] = rest % self.counts[d];
            rest /= self.counts[d];
        }
        out
    }

    pub fn id_of(&self, coords: &[usize; D]) -> CellId {
        let mut flat = 0usize;
        for d in 0..D {
            debug_assert!(coords[d] < self.counts[d]);
            flat = flat * self.counts[d] + coords[d];
        }
        CellId(flat as u32)
    }

    pub fn cell_box(&self, id: CellId) -> Aabb<T, D> {
        let c = self.coords_of(id);
        let lo: [T; D] = array::from_fn(|d| self.edge(d, c[d]));
        let hi: [T; D] = array::from_fn(|d| self.edge(d, c[d] + 1));
        Aabb::new_unchecked(lo, hi)
    }

    pub fn center_of(&self, id: CellId) -> [T; D] {
        self.cell_box(id).center()
    }

    fn edge(&self, d: usize, i: usize) -> T {
        if i == self.counts[d] {
            return self.bounds.hi()[d];
        }
        self.bounds.lo()[d] + self.cell_width(d) * T::lit(i as f64)
    }

    /// Index along `d` of the half-open cell holding `x`; the top face of a
    /// non-periodic dimension belongs to the last cell. Periodic values are wrapped.
    fn index_along(&self, d: usize, x: T) -> Option<usize> {
        let n = self.counts[d];
        let w = self.cell_width(d);
        if w == T::zero() {
            return (x == self.bounds.lo()[d]).then_some(0);
        }
        let rel = (x - self.bounds.lo()[d]) / w;
        if self.periodic[d] {
            let k = rel.floor().to_i64()?;
            return Some(k.rem_euclid(n as i64) as usize);
        }
        if x < self.bounds.lo()[d] || x > self.bounds.hi()[d] {
            return None;
        }
        Some((rel.floor().to_usize()?).min(n - 1))
    }

    pub fn cell_of(&self, p: &[T; D]) -> Option<CellId> {
        let mut c = [0; D];
        for d in 0..D {
            c[d] = self.index_along(d, p[d])?;
        }
        Some(self.id_of(&c))
    }

    /// Per-dimension index ranges of the half-open cells meeting `b`, or `None` if `b`
    /// leaves the bounds along a non-periodic dimension. Periodic ranges are unwrapped
    /// (may exceed `0..count`) and capped at one full turn.
    pub fn cover_ranges(&self, b: &Aabb<T, D>) -> Option<[(i64, i64); D]> {
        let mut out = [(0i64, 0i64); D];
        for d in 0..D {
            let n = self.counts[d] as i64;
            let (lo, hi) = (b.lo()[d], b.hi()[d]);
            let w = self.cell_width(d);
            if w == T::zero() {
                if lo > self.bounds.lo()[d] || hi < self.bounds.lo()[d] {
                    return None;
                }
                out[d] = (0, 0);
                continue;
            }
            if !self.periodic[d] && (lo < self.bounds.lo()[d] || hi > self.bounds.hi()[d]) {
                return None;
            }
            let a = ((lo - self.bounds.lo()[d]) / w).floor().to_i64()?;
            let z = ((hi - self.bounds.lo()[d]) / w).floor().to_i64()?;
            out[d] = if self.periodic[d] {
                if z - a + 1 >= n {
                    (0, n - 1)
                } else {
                    (a, z)
                }
            } else {
                (a.clamp(0, n - 1), z.clamp(0, n - 1))
            };
        }
        Some(out)
    }

    /// Visits every cell meeting `b` until `f` returns `false`. Returns `None` if `b`
    /// leaves the bounds, else whether the visit ran to completion.
    pub fn for_each_cover(&self, b: &Aabb<T, D>, mut f: impl FnMut(CellId) -> bool) -> Option<bool> {
        let ranges = self.cover_ranges(b)?;
        Some(self.walk_ranges(&ranges, &mut f))
    }

    pub(crate) fn walk_ranges(&self, ranges: &[(i64, i64); D], f: &mut impl FnMut(CellId) -> bool) -> bool {
        let mut cur: [i64; D] = array::from_fn(|d| ranges[d].0);
        loop {
            let coords: [usize; D] = array::from_fn(|d| cur[d].rem_euclid(self.counts[d] as i64) as usize);
            if !f(self.id_of(&coords)) {
                return false;
            }
            let mut d = D;
            loop {
                if d == 0 {
                    return true;
                }
                d -= 1;
                if cur[d] < ranges[d].1 {
                    cur[d] += 1;
                    break;
                }
                cur[d] = ranges[d].0;
            }
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> {
        (0..self.num_cells() as u32).map(CellId)
    }

    /// Stable content hash used to tie cached artifacts to the grid they were built on.
    pub fn hash_hex(&self) -> String
    where
        T: Serialize,
    {
        let bytes = serde_json::to_vec(self).expect("grid serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Dense boolean set over the cells of one grid.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CellSet {
    bits: Vec<bool>,
    len: usize,
}

impl CellSet {
    pub fn new(num_cells: usize) -> Self {
        Self { bits: vec![false; num_cells], len: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains(&self, c: CellId) -> bool {
        self.bits[c.index()]
    }

    /// Returns `true` if `c` was not yet present.
    pub fn insert(&mut self, c: CellId) -> bool {
        let slot = &mut self.bits[c.index()];
        let fresh = !*slot;
        *slot = true;
        self.len += fresh as usize;
        fresh
    }

    pub fn remove(&mut self, c: CellId) -> bool {
        let slot = &mut self.bits[c.index()];
        let had = *slot;
        *slot = false;
        self.len -= had as usize;
        had
    }

    pub fn iter(&self) -> impl Iterator<Item = CellId> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| CellId(i as u32))
    }

    pub fn union_with(&mut self, other: &CellSet) {
        for c in other.iter() {
            self.insert(c);
        }
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.iter().all(|c| other.contains(c))
    }

    pub fn from_cells(num_cells: usize, cells: impl IntoIterator<Item = CellId>) -> Self {
        let mut s = Self::new(num_cells);
        for c in cells {
            s.insert(c);
        }
        s
    }
}

mod serde_arrays {
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, V: Serialize, const D: usize>(v: &[V; D], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, De: Deserializer<'de>, V: Deserialize<'de>, const D: usize>(d: De) -> Result<[V; D], De::Error> {
        let v = Vec::<V>::deserialize(d)?;
        let n = v.len();
        v.try_into().map_err(|_| De::Error::custom(format!("expected {D} entries, found {n}")))
    }
}
