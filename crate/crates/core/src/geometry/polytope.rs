use std::array;

use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, GeometryError};
use crate::scalar::Scalar;

/// H-representation `{x : normals[i] . x <= offsets[i]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct Polytope<T, const D: usize> {
    #[serde(with = "rows_serde")]
    rows: Vec<Halfspace<T, D>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Halfspace<T, const D: usize> {
    pub normal: [T; D],
    pub offset: T,
}

impl<T: Scalar, const D: usize> Halfspace<T, D> {
    fn eval(&self, p: &[T; D]) -> T {
        dot(&self.normal, p) - self.offset
    }
}

fn dot<T: Scalar, const D: usize>(a: &[T; D], b: &[T; D]) -> T {
    (0..D).fold(T::zero(), |acc, d| acc + a[d] * b[d])
}

impl<T: Scalar, const D: usize> Polytope<T, D> {
    /// Rejects non-finite data and all-zero normals: a zero row is either vacuous or
    /// makes the whole set empty, and neither should come from a well-formed caller.
    pub fn new(rows: Vec<Halfspace<T, D>>) -> Result<Self, GeometryError> {
        for (i, r) in rows.iter().enumerate() {
            if !r.offset.is_finite() || r.normal.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::NonFinite);
            }
            if r.normal.iter().all(|v| *v == T::zero()) {
                return Err(GeometryError::ZeroNormal { row: i });
            }
        }
        Ok(Self { rows })
    }

    pub fn from_parts(normals: Vec<[T; D]>, offsets: Vec<T>) -> Result<Self, GeometryError> {
        if normals.len() != offsets.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: normals.len(),
                found: offsets.len(),
            });
        }
        Self::new(
            normals
                .into_iter()
                .zip(offsets)
                .map(|(normal, offset)| Halfspace { normal, offset })
                .collect(),
        )
    }

    /// The whole space (no constraints).
    pub fn universe() -> Self {
        Self { rows: Vec::new() }
    }

    pub fn from_box(b: &Aabb<T, D>) -> Self {
        let mut rows = Vec::with_capacity(2 * D);
        for d in 0..D {
            let mut n = [T::zero(); D];
            n[d] = T::one();
            rows.push(Halfspace { normal: n, offset: b.hi()[d] });
            n[d] = -T::one();
            rows.push(Halfspace { normal: n, offset: -b.lo()[d] });
        }
        Self { rows }
    }

    pub fn rows(&self) -> &[Halfspace<T, D>] {
        &self.rows
    }

    /// Adds the constraints of `other` (set intersection).
    pub fn intersect(&self, other: &Self) -> Self {
        let mut rows = self.rows.clone();
        rows.extend_from_slice(&other.rows);
        Self { rows }
    }

    pub fn contains_point(&self, p: &[T; D], tol: T) -> bool {
        self.rows.iter().all(|r| r.eval(p) <= tol * (T::one() + r.offset.abs()))
    }

    pub fn is_empty(&self) -> bool {
        !feasible(self.rows.clone())
    }

    /// True iff some point satisfies both the polytope and the box constraints.
    pub fn intersects_box(&self, b: &Aabb<T, D>) -> bool {
        let mut rows = self.rows.clone();
        rows.extend_from_slice(&Self::from_box(b).rows);
        feasible(rows)
    }

    /// True iff every corner of `b` satisfies every constraint (convexity makes this exact).
    pub fn contains_box(&self, b: &Aabb<T, D>, tol: T) -> bool {
        b.vertices().all(|v| self.contains_point(&v, tol))
    }

    /// Preimage under the affine map `x = matrix * y + shift`, i.e. the set of `y` that
    /// land inside `self`.
    pub fn affine_preimage(&self, matrix: &[[T; D]; D], shift: &[T; D]) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                // (M^T n) . y <= b - n . c
                let normal = array::from_fn(|j| (0..D).fold(T::zero(), |acc, i| acc + matrix[i][j] * r.normal[i]));
                Halfspace { normal, offset: r.offset - dot(&r.normal, shift) }
            })
            .collect();
        Self { rows }
    }

    /// Bounding box, computed by projecting onto each axis. `None` when empty or unbounded.
    pub fn bounding_box(&self) -> Option<Aabb<T, D>> {
        let mut lo = [T::zero(); D];
        let mut hi = [T::zero(); D];
        for d in 0..D {
            let (l, h) = axis_range(self.rows.clone(), d)?;
            lo[d] = l;
            hi[d] = h;
        }
        Aabb::new(lo, hi).ok()
    }

    /// Euclidean projection of `q` onto the polytope, `None` when it is empty.
    ///
    /// Enumerates candidate active sets of at most `D` constraints and keeps the
    /// KKT point that is primal and dual feasible. Fine for the handful of
    /// facets used here; the count grows combinatorially with the row number.
    pub fn closest_point(&self, q: &[T; D]) -> Option<[T; D]> {
        let tol = T::lit(1e-9);
        if self.contains_point(q, tol) {
            return Some(*q);
        }
        let m = self.rows.len();
        let mut best: Option<([T; D], T)> = None;
        let mut active = Vec::with_capacity(D);
        for size in 1..=D.min(m).min(MAX_ACTIVE) {
            combinations(m, size, &mut active, 0, &mut |set| {
                if let Some(y) = project_onto_active(&self.rows, set, q) {
                    if self.contains_point(&y, tol) {
                        let dist = (0..D).fold(T::zero(), |acc, d| acc + (y[d] - q[d]) * (y[d] - q[d]));
                        if best.as_ref().is_none_or(|(_, bd)| dist < *bd) {
                            best = Some((y, dist));
                        }
                    }
                }
            });
        }
        best.map(|(y, _)| y)
    }
}

fn combinations(n: usize, k: usize, cur: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for i in start..n {
        cur.push(i);
        combinations(n, k, cur, i + 1, f);
        cur.pop();
    }
}

/// Largest active set handled by the closest-point search.
const MAX_ACTIVE: usize = 4;

/// Minimizes `|y - q|^2` subject to the selected rows holding with equality.
/// Returns `None` for dependent normals or negative multipliers.
fn project_onto_active<T: Scalar, const D: usize>(
    rows: &[Halfspace<T, D>],
    set: &[usize],
    q: &[T; D],
) -> Option<[T; D]> {
    let k = set.len();
    assert!(k <= MAX_ACTIVE, "active set too large");
    // Gram system G lambda = A q - b, y = q - A^T lambda.
    let mut g = [[T::zero(); MAX_ACTIVE + 1]; MAX_ACTIVE];
    for (i, &ri) in set.iter().enumerate() {
        for (j, &rj) in set.iter().enumerate() {
            g[i][j] = dot(&rows[ri].normal, &rows[rj].normal);
        }
        g[i][k] = dot(&rows[ri].normal, q) - rows[ri].offset;
    }
    let lambda = solve_dense(&mut g, k)?;
    if lambda[..k].iter().any(|l| *l < -T::lit(1e-12)) {
        return None;
    }
    let mut y = *q;
    for (i, &ri) in set.iter().enumerate() {
        for d in 0..D {
            y[d] = y[d] - lambda[i] * rows[ri].normal[d];
        }
    }
    Some(y)
}

/// Gaussian elimination with partial pivoting on the leading `k x (k+1)` block.
fn solve_dense<T: Scalar>(a: &mut [[T; MAX_ACTIVE + 1]; MAX_ACTIVE], k: usize) -> Option<[T; MAX_ACTIVE]> {
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < T::lit(1e-12) {
            return None;
        }
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    let v = a[col][c];
                    a[r][c] = a[r][c] - f * v;
                }
            }
        }
    }
    let mut out = [T::zero(); MAX_ACTIVE];
    for i in 0..k {
        out[i] = a[i][k] / a[i][i];
    }
    Some(out)
}

/// Fourier–Motzkin feasibility test. Variables are eliminated from the last
/// dimension down; the remaining constant rows must all read `0 <= b`.
fn feasible<T: Scalar, const D: usize>(rows: Vec<Halfspace<T, D>>) -> bool {
    let mut rows = rows;
    for var in (0..D).rev() {
        rows = eliminate(rows, var);
        if rows.iter().any(|r| is_constant(r) && r.offset < -slack(r.offset)) {
            return false;
        }
    }
    rows.iter().all(|r| r.offset >= -slack(r.offset))
}

fn slack<T: Scalar>(b: T) -> T {
    T::lit(1e-9) * (T::one() + b.abs())
}

fn is_constant<T: Scalar, const D: usize>(r: &Halfspace<T, D>) -> bool {
    r.normal.iter().all(|v| *v == T::zero())
}

fn eliminate<T: Scalar, const D: usize>(rows: Vec<Halfspace<T, D>>, var: usize) -> Vec<Halfspace<T, D>> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut out = Vec::new();
    for r in rows {
        let c = r.normal[var];
        if c > T::zero() {
            pos.push(scale(&r, T::one() / c));
        } else if c < T::zero() {
            neg.push(scale(&r, T::one() / -c));
        } else if !is_constant(&r) || r.offset < -slack(r.offset) {
            // constant rows are dropped unless they are violated
            out.push(r);
        }
    }
    for p in &pos {
        for n in &neg {
            let mut normal = array::from_fn(|d| p.normal[d] + n.normal[d]);
            normal[var] = T::zero();
            out.push(Halfspace { normal, offset: p.offset + n.offset });
        }
    }
    dedup_rows(out)
}

fn scale<T: Scalar, const D: usize>(r: &Halfspace<T, D>, s: T) -> Halfspace<T, D> {
    Halfspace { normal: array::from_fn(|d| r.normal[d] * s), offset: r.offset * s }
}

/// Drops exact duplicate directions, keeping the tightest offset.
fn dedup_rows<T: Scalar, const D: usize>(rows: Vec<Halfspace<T, D>>) -> Vec<Halfspace<T, D>> {
    let mut kept: Vec<Halfspace<T, D>> = Vec::with_capacity(rows.len());
    'next: for r in rows {
        let norm = r.normal.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let r = if norm > T::zero() { scale(&r, T::one() / norm) } else { r };
        for k in kept.iter_mut() {
            if k.normal == r.normal {
                if r.offset < k.offset {
                    k.offset = r.offset;
                }
                continue 'next;
            }
        }
        kept.push(r);
    }
    kept
}

/// Range of coordinate `axis` over the polytope, by eliminating every other variable.
fn axis_range<T: Scalar, const D: usize>(rows: Vec<Halfspace<T, D>>, axis: usize) -> Option<(T, T)> {
    let mut rows = rows;
    for var in (0..D).rev().filter(|v| *v != axis) {
        rows = eliminate(rows, var);
    }
    let mut lo = T::neg_infinity();
    let mut hi = T::infinity();
    for r in &rows {
        let c = r.normal[axis];
        if c > T::zero() {
            hi = hi.min(r.offset / c);
        } else if c < T::zero() {
            lo = lo.max(r.offset / c);
        } else if r.offset < -slack(r.offset) {
            return None;
        }
    }
    (lo.is_finite() && hi.is_finite() && lo <= hi + slack(hi)).then(|| (lo, hi.max(lo)))
}

mod rows_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row<T> {
        normal: Vec<T>,
        offset: T,
    }

    pub fn serialize<S: Serializer, T: Scalar + Serialize, const D: usize>(
        rows: &[Halfspace<T, D>],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let v: Vec<Row<T>> = rows
            .iter()
            .map(|r| Row { normal: r.normal.to_vec(), offset: r.offset })
            .collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, De: Deserializer<'de>, T: Scalar + Deserialize<'de>, const D: usize>(
        de: De,
    ) -> Result<Vec<Halfspace<T, D>>, De::Error> {
        let v: Vec<Row<T>> = Vec::deserialize(de)?;
        v.into_iter()
            .map(|r| {
                let normal: [T; D] = r
                    .normal
                    .try_into()
                    .map_err(|_| serde::de::Error::custom("normal has wrong dimension"))?;
                Ok(Halfspace { normal, offset: r.offset })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit3() -> Aabb<f64, 3> {
        Aabb::new([0.0; 3], [1.0; 3]).unwrap()
    }

    #[test]
    fn unit_box_as_polytope_meets_unit_box() {
        assert!(Polytope::from_box(&unit3()).intersects_box(&unit3()));
    }

    #[test]
    fn halfspace_beyond_box_is_disjoint() {
        let p = Polytope::from_parts(vec![[1.0, 0.0, 0.0]], vec![-1.0]).unwrap();
        assert!(!p.intersects_box(&unit3()));
        assert!(p.intersects_box(&Aabb::new([-2.0, 0.0, 0.0], [-1.0, 1.0, 1.0]).unwrap()));
    }

    #[test]
    fn zero_normal_is_flagged() {
        let err = Polytope::<f64, 3>::from_parts(vec![[0.0; 3]], vec![-1.0]).unwrap_err();
        assert!(matches!(err, GeometryError::ZeroNormal { row: 0 }));
    }

    #[test]
    fn contradictory_rows_are_empty() {
        let p = Polytope::from_parts(vec![[1.0, 0.0], [-1.0, 0.0]], vec![0.0, -1.0]).unwrap();
        assert!(p.is_empty());
        assert!(p.bounding_box().is_none());
        assert!(p.closest_point(&[0.0, 0.0]).is_none());
    }

    #[test]
    fn diagonal_cut_box_bounds() {
        // x + y <= 1 inside the unit square is a triangle
        let p: Polytope<f64, 2> = Polytope::from_box(&Aabb::new([0.0, 0.0], [1.0, 1.0]).unwrap())
            .intersect(&Polytope::from_parts(vec![[1.0, 1.0]], vec![1.0]).unwrap());
        let bb = p.bounding_box().unwrap();
        assert!((bb.hi()[0] - 1.0).abs() < 1e-12 && (bb.hi()[1] - 1.0).abs() < 1e-12);
        assert!(!p.intersects_box(&Aabb::new([0.6, 0.6], [1.0, 1.0]).unwrap()));
        assert!(p.intersects_box(&Aabb::new([0.5, 0.5], [1.0, 1.0]).unwrap()));
    }

    #[test]
    fn closest_point_clamps_for_boxes() {
        let p: Polytope<f64, 3> = Polytope::from_box(&Aabb::new([1.0, -1.0, 2.0], [3.0, 1.0, 4.0]).unwrap());
        let y = p.closest_point(&[0.0, 0.5, 0.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-12 && (y[1] - 0.5).abs() < 1e-12 && (y[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn closest_point_on_slanted_face() {
        let p: Polytope<f64, 2> = Polytope::from_parts(vec![[-1.0, -1.0]], vec![-2.0]).unwrap(); // x + y >= 2
        let y = p.closest_point(&[0.0, 0.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-12 && (y[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_preimage_of_translation() {
        // y = x - (1,2) maps the unit box to [-1,0]x[-2,-1]; preimage under x = I y + (1,2)
        let p: Polytope<f64, 2> = Polytope::from_box(&Aabb::new([0.0, 0.0], [1.0, 1.0]).unwrap());
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let q = p.affine_preimage(&id, &[1.0, 2.0]);
        assert!(q.contains_point(&[-1.0, -2.0], 1e-12));
        assert!(q.contains_point(&[0.0, -1.0], 1e-12));
        assert!(!q.contains_point(&[0.5, 0.5], 1e-12));
    }

    #[test]
    fn serde_round_trip() {
        let p = Polytope::from_box(&unit3());
        let s = serde_json::to_string(&p).unwrap();
        let back: Polytope<f64, 3> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
