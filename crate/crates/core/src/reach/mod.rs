//! Guaranteed reachable tubes for the planar kinematics `x' = R(theta) u + w`.

mod dict;
mod tube;

pub use dict::{build_reach_dict, ReachDict, ReachHeader, REACH_DICT_VERSION};
pub use tube::{TimedTube, TubeSegment};

use thiserror::Error;

use crate::geometry::{cos_range, rotate2, sin_range, Aabb};
use crate::scalar::Scalar;

pub const DEFAULT_STEPS_PER_SEGMENT: usize = 64;

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("non-finite enclosure at t = {t}")]
    NonFinite { t: f64 },
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("need at least one segment and one integration step per segment")]
    NoSteps,
    #[error("tube for cross-section cell {j}, control {a}: {source}")]
    Tube {
        j: usize,
        a: usize,
        #[source]
        source: Box<ReachError>,
    },
}

/// Right-hand side `R(theta) u + w`.
pub fn ship_dynamics<T: Scalar>(x: &[T; 3], u: &[T; 3], w: &[T; 3]) -> [T; 3] {
    let [n, e] = rotate2([u[0], u[1]], x[2]);
    [n + w[0], e + w[1], u[2] + w[2]]
}

/// One constant control held over `[0, tau]` under a bounded disturbance.
#[derive(Clone, Debug, PartialEq)]
pub struct ShipModel<T> {
    pub control: [T; 3],
    pub disturbance: Aabb<T, 3>,
    pub tau: T,
    pub substeps: usize,
    pub steps_per_segment: usize,
}

impl<T: Scalar> ShipModel<T> {
    pub fn new(control: [T; 3], disturbance: Aabb<T, 3>, tau: T, substeps: usize) -> Self {
        Self { control, disturbance, tau, substeps, steps_per_segment: DEFAULT_STEPS_PER_SEGMENT }
    }
}

fn pad_out<T: Scalar>(lo: T, hi: T) -> (T, T) {
    let k = T::epsilon() * T::lit(4.0);
    (lo - lo.abs() * k, hi + hi.abs() * k)
}

/// Over-approximates every trajectory from `x0` segment by segment.
///
/// The heading is decoupled, so its range at time `t` is exact. Over each internal
/// step the planar velocity is enclosed by the exact range of `R(theta) u` on the
/// step's heading range plus the disturbance box, and the position box is pushed
/// forward by that constant velocity enclosure.
pub fn compute_tube<T: Scalar>(model: &ShipModel<T>, x0: &Aabb<T, 3>) -> Result<TimedTube<T>, ReachError> {
    if !(model.tau.is_finite() && model.tau > T::zero()) {
        return Err(ReachError::BadHorizon(model.tau.as_f64()));
    }
    if model.substeps == 0 || model.steps_per_segment == 0 {
        return Err(ReachError::NoSteps);
    }
    let [u, v, r] = model.control;
    let w = &model.disturbance;
    let rho = u.hypot(v);
    let phase = if rho == T::zero() { T::zero() } else { v.atan2(u) };
    let total = model.substeps * model.steps_per_segment;
    let time = |i: usize| model.tau * T::lit(i as f64) / T::lit(total as f64);
    let heading = |t: T| pad_out(x0.lo()[2] + (r + w.lo()[2]) * t, x0.hi()[2] + (r + w.hi()[2]) * t);

    let mut pos_lo = [x0.lo()[0], x0.lo()[1]];
    let mut pos_hi = [x0.hi()[0], x0.hi()[1]];
    let mut segments = Vec::with_capacity(model.substeps);
    for k in 0..model.substeps {
        let mut seg_lo = pos_lo;
        let mut seg_hi = pos_hi;
        let mut th_lo = T::infinity();
        let mut th_hi = T::neg_infinity();
        for i in 0..model.steps_per_segment {
            let step = k * model.steps_per_segment + i;
            let (t0, t1) = (time(step), time(step + 1));
            let h = t1 - t0;
            let (a0, b0) = heading(t0);
            let (a1, b1) = heading(t1);
            let (lo, hi) = (a0.min(a1), b0.max(b1));
            th_lo = th_lo.min(lo);
            th_hi = th_hi.max(hi);
            let (cmin, cmax) = cos_range(lo + phase, hi + phase);
            let (smin, smax) = sin_range(lo + phase, hi + phase);
            let vel_lo = [rho * cmin + w.lo()[0], rho * smin + w.lo()[1]];
            let vel_hi = [rho * cmax + w.hi()[0], rho * smax + w.hi()[1]];
            for d in 0..2 {
                let (dlo, dhi) = pad_out(h * vel_lo[d], h * vel_hi[d]);
                let (sweep_lo, sweep_hi) = pad_out(pos_lo[d] + dlo.min(T::zero()), pos_hi[d] + dhi.max(T::zero()));
                seg_lo[d] = seg_lo[d].min(sweep_lo);
                seg_hi[d] = seg_hi[d].max(sweep_hi);
                let (nlo, nhi) = pad_out(pos_lo[d] + dlo, pos_hi[d] + dhi);
                pos_lo[d] = nlo;
                pos_hi[d] = nhi;
            }
            if !(pos_lo[0].is_finite() && pos_lo[1].is_finite() && pos_hi[0].is_finite() && pos_hi[1].is_finite()) {
                return Err(ReachError::NonFinite { t: t1.as_f64() });
            }
        }
        let t_start = time(k * model.steps_per_segment);
        let t_end = time((k + 1) * model.steps_per_segment);
        let bbox = Aabb::new([seg_lo[0], seg_lo[1], th_lo], [seg_hi[0], seg_hi[1], th_hi])
            .map_err(|_| ReachError::NonFinite { t: t_end.as_f64() })?;
        segments.push(TubeSegment { t_start, t_end, bbox });
    }
    let (th_lo, th_hi) = heading(model.tau);
    let last = Aabb::new([pos_lo[0], pos_lo[1], th_lo], [pos_hi[0], pos_hi[1], th_hi])
        .map_err(|_| ReachError::NonFinite { t: model.tau.as_f64() })?;
    Ok(TimedTube::from_parts(segments, last))
}
