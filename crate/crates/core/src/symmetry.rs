//! SE(2) acting on ship states `(N, E, heading)`, the moving frame that sends every state
//! to the origin, and the transformation of relative reachable tubes back to absolute
//! coordinates.

use serde::{Deserialize, Serialize};

use crate::geometry::{rotate2, rotate_box_outer, Aabb, AngleInterval, Polytope};
use crate::reach::{TimedTube, TubeSegment};
use crate::scalar::{wrap_angle, Scalar};

/// Group element `alpha`: a planar rotation `R(heading)` and an anchor state.
///
/// Acts on states as `phi(x) = R^T (x - anchor)` with the rotation applied to the
/// position only and the heading coordinate shifted by `-anchor[2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement<T> {
    pub heading: T,
    pub anchor: [T; 3],
}

impl<T: Scalar> GroupElement<T> {
    pub fn identity() -> Self {
        Self { heading: T::zero(), anchor: [T::zero(); 3] }
    }

    /// The moving frame: the element that maps `x` onto the origin.
    pub fn frame_of(x: &[T; 3]) -> Self {
        Self { heading: x[2], anchor: *x }
    }

    /// `phi_alpha(x)`; the heading result is wrapped into `[-pi, pi)`.
    pub fn apply_state(&self, x: &[T; 3]) -> [T; 3] {
        let [n, e] = rotate2([x[0] - self.anchor[0], x[1] - self.anchor[1]], -self.heading);
        [n, e, wrap_angle(x[2] - self.anchor[2])]
    }

    /// `phi_alpha^{-1}(y)`.
    pub fn apply_inverse_state(&self, y: &[T; 3]) -> [T; 3] {
        let [n, e] = rotate2([y[0], y[1]], self.heading);
        [n + self.anchor[0], e + self.anchor[1], wrap_angle(y[2] + self.anchor[2])]
    }

    /// Same as [`Self::apply_inverse_state`] but leaves the heading unwrapped.
    pub fn apply_inverse_unwrapped(&self, y: &[T; 3]) -> [T; 3] {
        let [n, e] = rotate2([y[0], y[1]], self.heading);
        [n + self.anchor[0], e + self.anchor[1], y[2] + self.anchor[2]]
    }

    /// Controls are body-frame velocities and are left unchanged (`chi = id`).
    pub fn apply_control(&self, u: &[T; 3]) -> [T; 3] {
        *u
    }

    /// `psi_alpha(w) = R^T w` on the planar part of a disturbance.
    pub fn apply_disturbance(&self, w: &[T; 3]) -> [T; 3] {
        let [a, b] = rotate2([w[0], w[1]], -self.heading);
        [a, b, w[2]]
    }

    /// Element acting as `self` after `first`: `phi_{self.then(first)} = phi_self o phi_first`.
    pub fn compose(&self, first: &Self) -> Self {
        let [dn, de] = rotate2([self.anchor[0], self.anchor[1]], first.heading);
        Self {
            heading: self.heading + first.heading,
            anchor: [first.anchor[0] + dn, first.anchor[1] + de, first.anchor[2] + self.anchor[2]],
        }
    }

    pub fn inverse(&self) -> Self {
        let [n, e] = rotate2([self.anchor[0], self.anchor[1]], -self.heading);
        Self { heading: -self.heading, anchor: [-n, -e, -self.anchor[2]] }
    }

    /// Linear part and shift of `phi^{-1}` as a 3x3 affine map (heading not wrapped).
    fn inverse_affine(&self) -> ([[T; 3]; 3], [T; 3]) {
        let (s, c) = self.heading.sin_cos();
        let z = T::zero();
        ([[c, -s, z], [s, c, z], [z, z, T::one()]], self.anchor)
    }

    /// Image `phi_alpha(P)` of a polytope given in absolute coordinates.
    pub fn transform_polytope(&self, p: &Polytope<T, 3>) -> Polytope<T, 3> {
        let (m, shift) = self.inverse_affine();
        p.affine_preimage(&m, &shift)
    }
}

/// Over-approximates `union_{x0 in cell} phi_{gamma(x0)}^{-1}(tube)` box by box.
///
/// Per box this is the bounding box of the vertex-frame images, which equals the cell's
/// position box plus the relative box rotated at both heading extremes; frames strictly
/// inside the heading range are covered by the arc-exact rotation bound.
pub fn transform_tube_from_cell<T: Scalar>(tube: &TimedTube<T>, cell: &Aabb<T, 3>) -> TimedTube<T> {
    let angles = AngleInterval { lo: cell.lo()[2], hi: cell.hi()[2] };
    let map = |b: &Aabb<T, 3>| transform_box_from_cell(b, cell, angles);
    TimedTube::from_parts(
        tube.segments()
            .iter()
            .map(|s| TubeSegment { t_start: s.t_start, t_end: s.t_end, bbox: map(&s.bbox) })
            .collect(),
        map(tube.last()),
    )
}

pub(crate) fn transform_box_from_cell<T: Scalar>(b: &Aabb<T, 3>, cell: &Aabb<T, 3>, angles: AngleInterval<T>) -> Aabb<T, 3> {
    let swept = rotate_box_outer(b, angles);
    translate_planar(&swept, cell)
}

/// Adds the cell's planar extent to an already rotated box (heading untouched).
pub(crate) fn translate_planar<T: Scalar>(swept: &Aabb<T, 3>, cell: &Aabb<T, 3>) -> Aabb<T, 3> {
    Aabb::new_unchecked(
        [swept.lo()[0] + cell.lo()[0], swept.lo()[1] + cell.lo()[1], swept.lo()[2]],
        [swept.hi()[0] + cell.hi()[0], swept.hi()[1] + cell.hi()[1], swept.hi()[2]],
    )
}

/// Bounding box of `psi_alpha(W)` over every rotation `alpha`.
pub fn disturbance_union_all_frames<T: Scalar>(w: &Aabb<T, 3>) -> Aabb<T, 3> {
    let swept = rotate_box_outer(&Aabb::new_unchecked([w.lo()[0], w.lo()[1], T::zero()], [w.hi()[0], w.hi()[1], T::zero()]), AngleInterval::full());
    Aabb::new_unchecked(
        [swept.lo()[0], swept.lo()[1], w.lo()[2]],
        [swept.hi()[0], swept.hi()[1], w.hi()[2]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::angle_diff;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &[f64; 3], b: &[f64; 3], tol: f64) -> bool {
        (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol && angle_diff(a[2], b[2]).abs() <= tol
    }

    fn random_state(rng: &mut ChaCha8Rng) -> [f64; 3] {
        [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-PI..PI)]
    }

    #[test]
    fn frame_examples() {
        let g = GroupElement::frame_of(&[0.0, 0.0, 0.0]);
        assert_eq!(g, GroupElement::identity());
        let g = GroupElement::frame_of(&[1.0, 2.0, 0.0]);
        assert!(close(&g.apply_state(&[3.0, 4.0, PI / 4.0]), &[2.0, 2.0, PI / 4.0], 1e-12));
        let g = GroupElement::frame_of(&[0.0, 0.0, FRAC_PI_2]);
        assert!(close(&g.apply_state(&[0.0, 1.0, FRAC_PI_2]), &[1.0, 0.0, 0.0], 1e-12));
        assert!(close(&g.apply_inverse_state(&[1.0, 0.0, 0.0]), &[0.0, 1.0, FRAC_PI_2], 1e-12));
        let id = GroupElement::<f64>::identity();
        assert!(close(&id.apply_state(&[1.5, -2.0, 0.3]), &[1.5, -2.0, 0.3], 0.0));
    }

    #[test]
    fn frame_maps_state_to_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = random_state(&mut rng);
            let y = GroupElement::frame_of(&x).apply_state(&x);
            assert!(y.iter().all(|v| v.abs() <= 1e-9), "{y:?}");
        }
    }

    #[test]
    fn inverse_and_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let g = GroupElement::frame_of(&random_state(&mut rng));
            let h = GroupElement::frame_of(&random_state(&mut rng));
            let x = random_state(&mut rng);
            assert!(close(&g.apply_inverse_state(&g.apply_state(&x)), &x, 1e-9));
            assert!(close(&g.inverse().apply_state(&x), &g.apply_inverse_state(&x), 1e-9));
            assert!(close(&g.compose(&h).apply_state(&x), &g.apply_state(&h.apply_state(&x)), 1e-9));
        }
    }

    #[test]
    fn rotated_disturbance_fits_in_cube() {
        let a = 0.01 / 2f64.sqrt();
        let w = Aabb::new([-a; 3], [a; 3]).unwrap();
        let cube = Aabb::new([-0.01; 3], [0.01; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let g = GroupElement::frame_of(&random_state(&mut rng));
            for v in w.vertices() {
                assert!(cube.contains_point(&g.apply_disturbance(&v)));
            }
        }
        // the union over all frames is the disc of radius 0.01; its box touches the cube
        let u = disturbance_union_all_frames(&w);
        assert!(u.inflate(&[-1e-14; 3]).is_some_and(|s| cube.contains_box(&s)));
    }

    #[test]
    fn polytope_translation_moves_vertices_back() {
        let p = Polytope::from_box(&Aabb::new([0.0; 3], [1.0, 1.0, 0.0]).unwrap());
        let g = GroupElement::frame_of(&[1.0, 2.0, 0.0]);
        let q = g.transform_polytope(&p);
        assert!(q.contains_point(&[-1.0, -2.0, 0.0], 1e-12));
        assert!(q.contains_point(&[0.0, -1.0, 0.0], 1e-12));
        assert!(!q.contains_point(&[0.5, 0.5, 0.0], 1e-12));
    }

    #[test]
    fn polytope_quarter_turn_matches_vertex_map() {
        let b = Aabb::new([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        let g = GroupElement { heading: FRAC_PI_2, anchor: [0.0; 3] };
        let q = g.transform_polytope(&Polytope::from_box(&b));
        for v in b.vertices() {
            let img = g.apply_state(&v);
            assert!(q.contains_point(&img, 1e-12), "{img:?}");
        }
        // (1,0) lands on (0,-1)
        assert!(q.contains_point(&[0.0, -1.0, 0.0], 1e-12));
        assert!(!q.contains_point(&[0.0, 1.0, 0.0], 1e-12));
    }

    #[test]
    fn polytope_transform_inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = Polytope::from_parts(
            vec![[1.0, 0.5, 0.0], [-1.0, 0.2, 0.0], [0.0, -1.0, 0.3], [0.0, 0.0, 1.0], [0.3, 0.3, -1.0]],
            vec![2.0, 1.0, 1.5, 2.0, 1.0],
        )
        .unwrap();
        let g = GroupElement { heading: 0.7, anchor: [1.0, -2.0, 0.4] };
        let back = g.inverse().transform_polytope(&g.transform_polytope(&p));
        for _ in 0..1000 {
            let x = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
            assert_eq!(p.contains_point(&x, 1e-9), back.contains_point(&x, 1e-9), "{x:?}");
        }
    }

    fn sample_tube() -> TimedTube<f64> {
        let b = |lo: [f64; 3], hi: [f64; 3]| Aabb::new(lo, hi).unwrap();
        TimedTube::from_parts(
            vec![
                TubeSegment { t_start: 0.0, t_end: 1.5, bbox: b([-0.01, -0.02, -0.05], [0.2, 0.05, 0.1]) },
                TubeSegment { t_start: 1.5, t_end: 3.0, bbox: b([0.15, -0.03, 0.0], [0.5, 0.1, 0.2]) },
            ],
            b([0.4, 0.0, 0.1], [0.5, 0.1, 0.2]),
        )
    }

    #[test]
    fn tube_from_origin_cell_unchanged() {
        let tube = sample_tube();
        let out = transform_tube_from_cell(&tube, &Aabb::point([0.0; 3]));
        for (a, b) in out.segments().iter().zip(tube.segments()) {
            for d in 0..3 {
                assert!((a.bbox.lo()[d] - b.bbox.lo()[d]).abs() < 1e-12);
                assert!((a.bbox.hi()[d] - b.bbox.hi()[d]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tube_from_translated_point() {
        let tube = sample_tube();
        let out = transform_tube_from_cell(&tube, &Aabb::point([1.0, 2.0, 0.0]));
        let b = &out.segments()[1].bbox;
        assert!((b.lo()[0] - 1.15).abs() < 1e-12 && (b.hi()[1] - 2.1).abs() < 1e-12);
    }

    #[test]
    fn tube_from_cell_contains_sampled_frames() {
        let tube = sample_tube();
        let cell = Aabb::new([1.0, 1.0, 0.0], [1.3, 1.2, 0.2]).unwrap();
        let out = transform_tube_from_cell(&tube, &cell);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let x0 = [rng.random_range(1.0..1.3), rng.random_range(1.0..1.2), rng.random_range(0.0..0.2)];
            let g = GroupElement::frame_of(&x0);
            for (rel, abs) in tube.segments().iter().zip(out.segments()) {
                for v in rel.bbox.vertices() {
                    assert!(abs.bbox.contains_point(&g.apply_inverse_unwrapped(&v)));
                }
            }
        }
    }
}
