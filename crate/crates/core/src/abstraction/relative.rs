//! Targets and obstacles expressed in the moving frame of each cell.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::abstraction::{classify_cell, Classification};
use crate::geometry::{rotate2, Aabb, Halfspace, Polytope};
use crate::grid::{CellId, GridSpec};
use crate::par::par_map;
use crate::reach::ReachDict;
use crate::symmetry::GroupElement;

/// Widest heading slice handled by a single rotated obstacle piece.
pub const MAX_PIECE_WIDTH: f64 = 0.1;

/// One outer piece of a relative obstacle with its bounding box for cheap rejection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelObstacle {
    pub poly: Polytope<f64, 3>,
    pub bbox: Aabb<f64, 3>,
}

impl RelObstacle {
    pub fn intersects_box(&self, b: &Aabb<f64, 3>) -> bool {
        self.bbox.intersects(b) && self.poly.intersects_box(b)
    }

    pub fn contains_point(&self, p: &[f64; 3], tol: f64) -> bool {
        self.poly.contains_point(p, tol)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelState {
    pub cell: CellId,
    pub class: Classification,
    /// Image of the cell on the cross-section; a single point for a moving frame that
    /// sends every state to the origin.
    pub rel_cell: Aabb<f64, 3>,
    /// Outer bound of the obstacles seen from every frame of the cell, within the
    /// relevance radius.
    pub rel_avoid: Vec<RelObstacle>,
    /// Inner bound of the target seen from every frame of the cell (may be empty).
    pub rel_reach: Polytope<f64, 3>,
    /// Point of `rel_reach` nearest the origin, or a fallback aim point when it is empty.
    pub target: [f64; 3],
}

impl RelState {
    pub fn hits_avoid(&self, b: &Aabb<f64, 3>) -> bool {
        self.rel_avoid.iter().any(|o| o.intersects_box(b))
    }
}

/// Largest planar distance from the origin reached by any tube box.
pub fn relevance_radius(rd: &ReachDict<f64>) -> f64 {
    let mut r: f64 = 0.0;
    for j in 0..rd.num_cross_sections() {
        for t in rd.tubes(j) {
            for b in t.full().chain([t.last()]) {
                for v in b.vertices() {
                    r = r.max(v[0].hypot(v[1]));
                }
            }
        }
    }
    r
}

/// Relative heading intervals `target - frame` over every frame heading in `cell_th`,
/// as unwrapped copies near zero, or `None` if unconstrained.
fn relative_heading_outer(target: [f64; 2], cell_th: [f64; 2]) -> Option<Vec<[f64; 2]>> {
    let lo = target[0] - cell_th[1];
    let hi = target[1] - cell_th[0];
    if hi - lo >= 2.0 * PI - 1e-12 {
        return None;
    }
    Some(
        (-1..=1)
            .map(|k| [lo + 2.0 * PI * k as f64, hi + 2.0 * PI * k as f64])
            .filter(|iv| iv[1] >= -2.0 * PI && iv[0] <= 2.0 * PI)
            .collect(),
    )
}

fn planar_rows(normal: [f64; 2], offset: f64) -> Halfspace<f64, 3> {
    Halfspace { normal: [normal[0], normal[1], 0.0], offset }
}

/// Outer pieces of `union_{x in cell} phi_{gamma(x)}(obstacle)`, valid for points within
/// `radius` of the origin.
pub fn relative_obstacle(cell: &Aabb<f64, 3>, obstacle: &Aabb<f64, 3>, radius: f64) -> Vec<RelObstacle> {
    // positions of obstacle points relative to the cell, before rotation
    let lo = [
        (obstacle.lo()[0] - cell.hi()[0]).max(-radius),
        (obstacle.lo()[1] - cell.hi()[1]).max(-radius),
    ];
    let hi = [
        (obstacle.hi()[0] - cell.lo()[0]).min(radius),
        (obstacle.hi()[1] - cell.lo()[1]).min(radius),
    ];
    if lo[0] > hi[0] || lo[1] > hi[1] {
        return Vec::new();
    }
    let r_max = [lo[0].abs().max(hi[0].abs()), lo[1].abs().max(hi[1].abs())];
    let r_max = r_max[0].hypot(r_max[1]);
    let headings = relative_heading_outer([obstacle.lo()[2], obstacle.hi()[2]], [cell.lo()[2], cell.hi()[2]]);

    let (th_lo, th_hi) = (cell.lo()[2], cell.hi()[2]);
    let pieces = (((th_hi - th_lo) / MAX_PIECE_WIDTH).ceil() as usize).max(1);
    let mut out = Vec::new();
    for k in 0..pieces {
        let a = th_lo + (th_hi - th_lo) * k as f64 / pieces as f64;
        let b = th_lo + (th_hi - th_lo) * (k + 1) as f64 / pieces as f64;
        let mid = 0.5 * (a + b);
        // R(mid - theta) moves a point by at most 2 r sin(|mid - theta| / 2)
        let grow = 2.0 * r_max * (0.25 * (b - a)).sin() + 1e-12 * (1.0 + r_max);
        let d_lo = [lo[0] - grow, lo[1] - grow];
        let d_hi = [hi[0] + grow, hi[1] + grow];
        // p = R(-mid) q with q in the grown box  <=>  R(mid) p in the grown box
        let ex = rotate2([1.0, 0.0], -mid);
        let ey = rotate2([0.0, 1.0], -mid);
        let mut rows = vec![
            planar_rows(ex, d_hi[0]),
            planar_rows([-ex[0], -ex[1]], -d_lo[0]),
            planar_rows(ey, d_hi[1]),
            planar_rows([-ey[0], -ey[1]], -d_lo[1]),
        ];
        let corners = [[d_lo[0], d_lo[1]], [d_hi[0], d_lo[1]], [d_lo[0], d_hi[1]], [d_hi[0], d_hi[1]]];
        let mut plo = [f64::INFINITY; 2];
        let mut phi = [f64::NEG_INFINITY; 2];
        for c in corners {
            let p = rotate2(c, -mid);
            for d in 0..2 {
                plo[d] = plo[d].min(p[d]);
                phi[d] = phi[d].max(p[d]);
            }
        }
        let planar_box = |tl: f64, th: f64| Aabb::new([plo[0], plo[1], tl], [phi[0], phi[1], th]).expect("finite piece");
        match &headings {
            None => {
                out.push(RelObstacle { poly: Polytope::new(rows).expect("valid rows"), bbox: planar_box(-1e9, 1e9) });
            }
            Some(ivs) => {
                rows.push(Halfspace { normal: [0.0, 0.0, 1.0], offset: 0.0 });
                rows.push(Halfspace { normal: [0.0, 0.0, -1.0], offset: 0.0 });
                let n = rows.len();
                for iv in ivs {
                    rows[n - 2].offset = iv[1];
                    rows[n - 1].offset = -iv[0];
                    out.push(RelObstacle { poly: Polytope::new(rows.clone()).expect("valid rows"), bbox: planar_box(iv[0], iv[1]) });
                }
            }
        }
    }
    out
}

/// Inner bound of `intersect_{x in cell} phi_{gamma(x)}(target)`.
///
/// A point `p` qualifies if `R(theta) p + x` lies in the target for every frame. For a
/// heading interval of width `w < pi` the arc `R(theta) p` lies in the triangle spanned by
/// its endpoints and the meeting point of their tangents, so three linear constraints
/// per face suffice.
pub fn relative_target(cell: &Aabb<f64, 3>, target: &Aabb<f64, 3>) -> Polytope<f64, 3> {
    let s_lo = [target.lo()[0] - cell.lo()[0], target.lo()[1] - cell.lo()[1]];
    let s_hi = [target.hi()[0] - cell.hi()[0], target.hi()[1] - cell.hi()[1]];
    let (t1, t2) = (cell.lo()[2], cell.hi()[2]);
    let width = t2 - t1;
    let empty = || {
        Polytope::new(vec![
            Halfspace { normal: [1.0, 0.0, 0.0], offset: -1.0 },
            Halfspace { normal: [-1.0, 0.0, 0.0], offset: -1.0 },
        ])
        .expect("valid rows")
    };
    if s_lo[0] > s_hi[0] || s_lo[1] > s_hi[1] || width >= PI {
        return empty();
    }
    let c2 = (0.5 * width).cos().powi(2);
    let mut rows = Vec::with_capacity(14);
    let faces = [([1.0, 0.0], s_hi[0]), ([-1.0, 0.0], -s_lo[0]), ([0.0, 1.0], s_hi[1]), ([0.0, -1.0], -s_lo[1])];
    for (n, b) in faces {
        // n . R(theta) p = (R(theta)^T n) . p
        let n1 = rotate2(n, -t1);
        let n2 = rotate2(n, -t2);
        rows.push(planar_rows(n1, b));
        if width > 0.0 {
            rows.push(planar_rows(n2, b));
            rows.push(planar_rows([n1[0] + n2[0], n1[1] + n2[1]], 2.0 * b * c2));
        }
    }
    // relative heading must land in the target for every frame heading
    let lo = target.lo()[2] - t1;
    let hi = target.hi()[2] - t2;
    if target.width(2) < 2.0 * PI - 1e-12 {
        if lo > hi {
            return empty();
        }
        let mid = 0.5 * (lo + hi);
        let shift = -2.0 * PI * (mid / (2.0 * PI)).round();
        rows.push(Halfspace { normal: [0.0, 0.0, 1.0], offset: hi + shift });
        rows.push(Halfspace { normal: [0.0, 0.0, -1.0], offset: -(lo + shift) });
    }
    Polytope::new(rows).expect("valid rows")
}

/// Nearest point of a polytope whose rows constrain either the position or the heading
/// alone, solving the two parts apart.
fn closest_separable(p: &Polytope<f64, 3>, q: &[f64; 3]) -> Option<[f64; 3]> {
    let mut planar = Vec::with_capacity(p.rows().len());
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for r in p.rows() {
        let [a, b, c] = r.normal;
        if c == 0.0 {
            planar.push(Halfspace { normal: [a, b], offset: r.offset });
        } else if a == 0.0 && b == 0.0 {
            if c > 0.0 {
                hi = hi.min(r.offset / c);
            } else {
                lo = lo.max(r.offset / c);
            }
        } else {
            return p.closest_point(q);
        }
    }
    if lo > hi + 1e-9 {
        return None;
    }
    let th = if lo > hi { 0.5 * (lo + hi) } else { q[2].clamp(lo, hi) };
    let xy = Polytope::new(planar).ok()?.closest_point(&[q[0], q[1]])?;
    Some([xy[0], xy[1], th])
}

pub fn build_rel_state(
    grid: &GridSpec<f64, 3>,
    cell: CellId,
    reach: &Aabb<f64, 3>,
    avoid: &[Aabb<f64, 3>],
    radius: f64,
) -> RelState {
    let b = grid.cell_box(cell);
    let class = classify_cell(&b, reach, avoid);
    let rel_avoid = avoid.iter().flat_map(|a| relative_obstacle(&b, a, radius)).collect();
    let rel_reach = relative_target(&b, reach);
    let target = closest_separable(&rel_reach, &[0.0; 3]).unwrap_or_else(|| {
        let g = GroupElement::frame_of(&b.center());
        let mut p = g.apply_state(&reach.center());
        p[2] = crate::scalar::wrap_angle(p[2]);
        p
    });
    RelState { cell, class, rel_cell: Aabb::point([0.0; 3]), rel_avoid, rel_reach, target }
}

/// One relative tuple per cell, computed in parallel and ordered by cell index.
pub fn build_rel_states(grid: &GridSpec<f64, 3>, reach: &Aabb<f64, 3>, avoid: &[Aabb<f64, 3>], rd: &ReachDict<f64>) -> Vec<RelState> {
    let radius = relevance_radius(rd);
    let cells: Vec<CellId> = grid.cells().collect();
    par_map(&cells, |&c| build_rel_state(grid, c, reach, avoid, radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bx(lo: [f64; 3], hi: [f64; 3]) -> Aabb<f64, 3> {
        Aabb::new(lo, hi).unwrap()
    }

    fn sample(rng: &mut ChaCha8Rng, b: &Aabb<f64, 3>) -> [f64; 3] {
        std::array::from_fn(|d| if b.width(d) > 0.0 { rng.random_range(b.lo()[d]..=b.hi()[d]) } else { b.lo()[d] })
    }

    #[test]
    fn separable_closest_matches_general() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let target = bx([7.0, 0.0, PI / 3.0], [10.0, 6.5, 2.0 * PI / 3.0]);
        for _ in 0..200 {
            let lo = [rng.random_range(4.0..11.0), rng.random_range(-1.0..7.0), rng.random_range(-PI..PI)];
            let cell = bx(lo, [lo[0] + 0.5, lo[1] + 0.4, lo[2] + 0.2]);
            let p = relative_target(&cell, &target);
            let q = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            match (closest_separable(&p, &q), p.closest_point(&q)) {
                (Some(a), Some(b)) => assert!((0..3).all(|d| (a[d] - b[d]).abs() < 1e-9), "{a:?} {b:?}"),
                (a, b) => assert_eq!(a.is_some(), b.is_some()),
            }
        }
    }

    #[test]
    fn point_cell_obstacle_is_exact_transform() {
        let cell = Aabb::point([1.0, 1.0, 0.5]);
        let obs = bx([2.0, 0.0, -PI], [2.5, 3.0, PI]);
        let pieces = relative_obstacle(&cell, &obs, 100.0);
        assert_eq!(pieces.len(), 1);
        let g = GroupElement::frame_of(cell.lo());
        for v in obs.vertices() {
            let mut p = g.apply_state(&v);
            p[2] = 0.0;
            assert!(pieces[0].contains_point(&p, 1e-9), "{p:?}");
        }
        let outside = g.apply_state(&[1.9, 1.0, 0.0]);
        assert!(!pieces[0].contains_point(&[outside[0], outside[1], 0.0], 1e-9));
    }

    #[test]
    fn point_cell_target_is_exact_transform() {
        let cell = Aabb::point([8.0, 3.0, 1.2]);
        let target = bx([7.0, 0.0, PI / 3.0], [10.0, 6.5, 2.0 * PI / 3.0]);
        let p = relative_target(&cell, &target);
        let g = GroupElement::frame_of(cell.lo());
        for v in target.vertices() {
            assert!(p.contains_point(&g.apply_state(&v), 1e-9));
        }
        assert!(p.contains_point(&[0.0; 3], 0.0));
        assert!(!p.contains_point(&g.apply_state(&[6.9, 3.0, 1.2]), 1e-9));
    }

    #[test]
    fn obstacle_outer_soundness_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let obstacles = [bx([2.0, -3.0, -PI], [2.5, 3.0, PI]), bx([5.0, 3.5, -0.5], [5.5, 9.5, 0.7])];
        let radius = 1.5;
        for _ in 0..50 {
            let lo = [rng.random_range(0.5..6.0), rng.random_range(-1.0..5.0), rng.random_range(-PI..PI - 0.3)];
            let cell = bx(lo, [lo[0] + 0.5, lo[1] + 0.4, lo[2] + 0.3]);
            for obs in &obstacles {
                let pieces = relative_obstacle(&cell, obs, radius);
                for _ in 0..20 {
                    let g = GroupElement::frame_of(&sample(&mut rng, &cell));
                    for _ in 0..20 {
                        let a = sample(&mut rng, obs);
                        let mut p = g.apply_state(&a);
                        if p[0].hypot(p[1]) > radius {
                            continue;
                        }
                        let hit = (-1..=1).any(|k| {
                            p[2] += 2.0 * PI * k as f64;
                            let ok = pieces.iter().any(|o| o.contains_point(&p, 1e-9));
                            p[2] -= 2.0 * PI * k as f64;
                            ok
                        });
                        assert!(hit, "cell {cell:?} point {p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn target_inner_soundness_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let target = bx([7.0, 0.0, PI / 3.0], [10.0, 6.5, 2.0 * PI / 3.0]);
        let mut nonempty = 0;
        for _ in 0..50 {
            let lo = [rng.random_range(5.0..9.0), rng.random_range(-1.0..6.0), rng.random_range(0.5..1.8)];
            let cell = bx(lo, [lo[0] + 0.5, lo[1] + 0.4, lo[2] + 0.2]);
            let p = relative_target(&cell, &target);
            let Some(bb) = p.bounding_box() else { continue };
            nonempty += 1;
            for _ in 0..20 {
                let q = std::array::from_fn(|d| rng.random_range(bb.lo()[d]..=bb.hi()[d]));
                if !p.contains_point(&q, 0.0) {
                    continue;
                }
                for _ in 0..20 {
                    let g = GroupElement::frame_of(&sample(&mut rng, &cell));
                    let x = g.apply_inverse_unwrapped(&q);
                    assert!(target.contains_point(&x), "cell {cell:?} q {q:?} x {x:?}");
                }
            }
        }
        assert!(nonempty > 10);
    }

    #[test]
    fn target_contains_origin_iff_cell_inside() {
        let target = bx([7.0, 0.0, PI / 3.0], [10.0, 6.5, 2.0 * PI / 3.0]);
        let inside = bx([8.0, 3.0, 1.1], [8.5, 3.5, 1.3]);
        assert!(relative_target(&inside, &target).contains_point(&[0.0; 3], 1e-12));
        let astride = bx([9.8, 3.0, 1.1], [10.3, 3.5, 1.3]);
        assert!(!relative_target(&astride, &target).contains_point(&[0.0; 3], 1e-12));
    }

    #[test]
    fn far_obstacle_is_dropped() {
        let cell = bx([0.0, 0.0, 0.0], [0.5, 0.5, 0.2]);
        assert!(relative_obstacle(&cell, &bx([5.0, 5.0, -PI], [6.0, 6.0, PI]), 1.0).is_empty());
    }
}
