use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, GeometryError};
use crate::scalar::Scalar;

/// Closed interval of headings `[lo, hi]`, stored unwrapped (`hi - lo <= 2 pi`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleInterval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> AngleInterval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self, GeometryError> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if lo > hi || hi - lo > T::lit(2.0) * T::PI() {
            return Err(GeometryError::BadAngleInterval { lo: lo.as_f64(), hi: hi.as_f64() });
        }
        Ok(Self { lo, hi })
    }

    pub fn point(theta: T) -> Self {
        Self { lo: theta, hi: theta }
    }

    pub fn full() -> Self {
        Self { lo: -T::PI(), hi: T::PI() }
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn mid(&self) -> T {
        (self.lo + self.hi) * T::lit(0.5)
    }

    pub fn contains(&self, theta: T) -> bool {
        self.lo <= theta && theta <= self.hi
    }

    pub fn neg(&self) -> Self {
        Self { lo: -self.hi, hi: -self.lo }
    }
}

/// `R(theta) = [[cos, -sin], [sin, cos]]` applied to `(x, y)`.
pub fn rotate2<T: Scalar>(p: [T; 2], theta: T) -> [T; 2] {
    let (s, c) = theta.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

/// Rotates the planar part of `p` by `theta` and shifts the heading coordinate by `theta`.
pub fn rotate_state<T: Scalar>(p: [T; 3], theta: T) -> [T; 3] {
    let [x, y] = rotate2([p[0], p[1]], theta);
    [x, y, p[2] + theta]
}

/// Range of `cos(t)` over `[lo, hi]` (exact up to rounding).
pub fn cos_range<T: Scalar>(lo: T, hi: T) -> (T, T) {
    trig_range(lo, hi, lo.cos(), hi.cos(), T::zero())
}

/// Range of `sin(t)` over `[lo, hi]`.
pub fn sin_range<T: Scalar>(lo: T, hi: T) -> (T, T) {
    trig_range(lo, hi, lo.sin(), hi.sin(), T::FRAC_PI_2())
}

/// Extremes of a unit sinusoid peaking at `peak + 2k pi`, given its endpoint values.
fn trig_range<T: Scalar>(lo: T, hi: T, a: T, b: T, peak: T) -> (T, T) {
    let two_pi = T::PI() + T::PI();
    if hi - lo >= two_pi {
        return (-T::one(), T::one());
    }
    let hits = |offset: T| {
        let (l, h) = ((lo - offset) / two_pi, (hi - offset) / two_pi);
        h.floor() >= l.ceil()
    };
    let mx = if hits(peak) { T::one() } else { a.max(b) };
    let mn = if hits(peak + T::PI()) { -T::one() } else { a.min(b) };
    (mn, mx)
}

/// Outer bound of the set swept by `b` when its planar part rotates by every angle in
/// `angles` (heading coordinate shifted by the same angle).
///
/// The box is the convex hull of its corners, so the axis extremes of the swept set are
/// reached at corners. Each corner moves along a circular arc whose axis range is exact.
pub fn rotate_box_outer<T: Scalar>(b: &Aabb<T, 3>, angles: AngleInterval<T>) -> Aabb<T, 3> {
    if angles.lo == T::zero() && angles.hi == T::zero() {
        // the identity rotation is exact
        return *b;
    }
    let mut lo = [T::infinity(); 2];
    let mut hi = [T::neg_infinity(); 2];
    let mut radius = T::zero();
    for (x, y) in [
        (b.lo()[0], b.lo()[1]),
        (b.hi()[0], b.lo()[1]),
        (b.lo()[0], b.hi()[1]),
        (b.hi()[0], b.hi()[1]),
    ] {
        let r = x.hypot(y);
        radius = radius.max(r);
        if r == T::zero() {
            lo = [lo[0].min(T::zero()), lo[1].min(T::zero())];
            hi = [hi[0].max(T::zero()), hi[1].max(T::zero())];
            continue;
        }
        let phase = y.atan2(x);
        let (cmin, cmax) = cos_range(phase + angles.lo, phase + angles.hi);
        let (smin, smax) = sin_range(phase + angles.lo, phase + angles.hi);
        // the endpoints themselves, evaluated the same way callers rotate points
        let e0 = rotate2([x, y], angles.lo);
        let e1 = rotate2([x, y], angles.hi);
        lo[0] = lo[0].min(r * cmin).min(e0[0]).min(e1[0]);
        hi[0] = hi[0].max(r * cmax).max(e0[0]).max(e1[0]);
        lo[1] = lo[1].min(r * smin).min(e0[1]).min(e1[1]);
        hi[1] = hi[1].max(r * smax).max(e0[1]).max(e1[1]);
    }
    // rounding guard so that pointwise rotations always land inside
    let pad = T::epsilon() * T::lit(16.0) * (radius + T::one());
    Aabb::new_unchecked(
        [lo[0] - pad, lo[1] - pad, b.lo()[2] + angles.lo],
        [hi[0] + pad, hi[1] + pad, b.hi()[2] + angles.hi],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn trig_ranges() {
        let (mn, mx) = cos_range(-0.1, 0.1);
        assert_eq!(mx, 1.0);
        assert!((mn - 0.1f64.cos()).abs() < 1e-15);
        let (mn, mx) = sin_range(0.0, PI);
        assert!(mn.abs() < 1e-15 && mx == 1.0);
        let (mn, mx) = cos_range(3.0, 3.5);
        assert_eq!(mn, -1.0);
        assert!((mx - 3.5f64.cos()).abs() < 1e-15);
        assert_eq!(cos_range(0.0, 7.0), (-1.0, 1.0));
    }

    #[test]
    fn degenerate_interval_is_plain_rotation() {
        let b = Aabb::new([1.0, 0.0, 0.0], [2.0, 1.0, 0.0]).unwrap();
        let out = rotate_box_outer(&b, AngleInterval::point(FRAC_PI_2));
        // rotating by 90 degrees maps x -> y, y -> -x
        assert!((out.lo()[0] + 1.0).abs() < 1e-12 && out.hi()[0].abs() < 1e-12);
        assert!((out.lo()[1] - 1.0).abs() < 1e-12 && (out.hi()[1] - 2.0).abs() < 1e-12);
        assert!((out.lo()[2] - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn segment_sweep_reaches_arc_apex() {
        let seg = Aabb::new([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        let out = rotate_box_outer(&seg, AngleInterval::new(0.0, FRAC_PI_2).unwrap());
        let apex = rotate2([1.0, 0.0], FRAC_PI_4);
        assert!(out.hi()[0] >= apex[0] && out.hi()[1] >= apex[1]);
        assert!((out.hi()[0] - 1.0).abs() < 1e-12 && (out.hi()[1] - 1.0).abs() < 1e-12);
        for k in 0..=1000 {
            let t = FRAC_PI_2 * k as f64 / 1000.0;
            for p in [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]] {
                let q = rotate2(p, t);
                assert!(out.contains_point(&[q[0], q[1], t]));
            }
        }
    }

    #[test]
    fn sin_range_of_point_is_exact() {
        assert_eq!(sin_range(0.0, 0.0), (0.0, 0.0));
        assert_eq!(cos_range(0.3, 0.3), (0.3f64.cos(), 0.3f64.cos()));
    }

    #[test]
    fn trig_ranges_match_dense_sampling() {
        for k in 0..200 {
            let lo = -7.0 + 0.07 * k as f64;
            let hi = lo + 0.013 * k as f64;
            let (cmn, cmx) = cos_range(lo, hi);
            let (smn, smx) = sin_range(lo, hi);
            for i in 0..=500 {
                let t = lo + (hi - lo) * i as f64 / 500.0;
                assert!(cmn <= t.cos() + 1e-15 && t.cos() <= cmx + 1e-15);
                assert!(smn <= t.sin() + 1e-15 && t.sin() <= smx + 1e-15);
            }
        }
    }

    #[test]
    fn bad_interval_rejected() {
        assert!(AngleInterval::new(1.0, 0.0).is_err());
        assert!(AngleInterval::new(0.0, 7.0).is_err());
    }
}
