//! Quintic-polynomial lateral trajectory generation, feasibility gating, and
//! per-step lateral evaluation during a maneuver.

use rand::Rng;
use thiserror::Error;

use crate::model::{nearest_lane, SimConfig, WorldState};
use crate::scalar::{real, Scalar};

#[derive(Debug, Error)]
pub enum LaneChangeError {
    #[error("maneuver duration must be > 0 (got {0})")]
    NonPositiveDuration(f64),
}

/// An immutable lateral maneuver plan.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneChangePlan<F: Scalar> {
    /// Polynomial coefficients, constant term first.
    pub coeffs: [F; 6],
    /// Simulation time when the maneuver started (s).
    pub t_start: F,
    /// Maneuver duration (s).
    pub duration: F,
    pub y_start: F,
    pub y_end: F,
    pub source_lane: u32,
    pub target_lane: u32,
}

impl<F: Scalar> LaneChangePlan<F> {
    pub fn new(
        y_start: F,
        y_end: F,
        t_start: F,
        duration: F,
        source_lane: u32,
        target_lane: u32,
    ) -> Result<Self, LaneChangeError> {
        Ok(Self {
            coeffs: solve_quintic(y_start, y_end, duration)?,
            t_start,
            duration,
            y_start,
            y_end,
            source_lane,
            target_lane,
        })
    }
}

/// Solve the six boundary conditions (rest-to-rest: zero velocity and
/// acceleration at both ends) for the quintic coefficients.
// The negated comparison also rejects a NaN duration.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn solve_quintic<F: Scalar>(y0: F, yf: F, duration: F) -> Result<[F; 6], LaneChangeError> {
    if !(duration > F::zero()) {
        return Err(LaneChangeError::NonPositiveDuration(
            duration.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let z = F::zero();
    let one = F::one();
    let two = real::<F>(2.0);
    let t = duration;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let a = [
        [one, z, z, z, z, z],
        [z, one, z, z, z, z],
        [z, z, two, z, z, z],
        [one, t, t2, t3, t4, t5],
        [z, one, two * t, real::<F>(3.0) * t2, real::<F>(4.0) * t3, real::<F>(5.0) * t4],
        [z, z, two, real::<F>(6.0) * t, real::<F>(12.0) * t2, real::<F>(20.0) * t3],
    ];
    let b = [y0, z, z, yf, z, z];
    Ok(solve_6x6(a, b))
}

/// Dense Gaussian elimination with partial pivoting. The system is 6x6 and
/// well conditioned for any positive duration, so no dependency is warranted.
#[allow(clippy::needless_range_loop)]
fn solve_6x6<F: Scalar>(mut a: [[F; 6]; 6], mut b: [F; 6]) -> [F; 6] {
    for col in 0..6 {
        let mut pivot = col;
        for row in col + 1..6 {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        debug_assert!(diag != F::zero(), "singular boundary system");
        for row in col + 1..6 {
            let factor = a[row][col] / diag;
            if factor == F::zero() {
                continue;
            }
            for k in col..6 {
                let delta = factor * a[col][k];
                a[row][k] -= delta;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [F::zero(); 6];
    for col in (0..6).rev() {
        let mut acc = b[col];
        for k in col + 1..6 {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    x
}

/// Lateral position, velocity, and acceleration at maneuver time `tau`.
/// `tau` outside `[0, duration]` is clamped to the endpoints.
pub fn eval_trajectory<F: Scalar>(plan: &LaneChangePlan<F>, tau: F) -> (F, F, F) {
    let tau = tau.max(F::zero()).min(plan.duration);
    let c = &plan.coeffs;
    let y = ((((c[5] * tau + c[4]) * tau + c[3]) * tau + c[2]) * tau + c[1]) * tau + c[0];
    let dy = (((real::<F>(5.0) * c[5] * tau + real::<F>(4.0) * c[4]) * tau
        + real::<F>(3.0) * c[3])
        * tau
        + real::<F>(2.0) * c[2])
        * tau
        + c[1];
    let ddy = ((real::<F>(20.0) * c[5] * tau + real::<F>(12.0) * c[4]) * tau
        + real::<F>(6.0) * c[3])
        * tau
        + real::<F>(2.0) * c[2];
    (y, dy, ddy)
}

/// Whether vehicle `i` may move into `target_lane`: the lane must be adjacent
/// and every vehicle occupying it (or already changing into it) must be more
/// than `d_safe` away longitudinally.
pub fn lane_change_feasible<F: Scalar>(
    world: &WorldState<F>,
    cfg: &SimConfig<F>,
    i: usize,
    target_lane: u32,
) -> bool {
    let me = &world.vehicles[i];
    if target_lane >= cfg.n_lanes {
        return false;
    }
    let adjacent = target_lane.abs_diff(me.lane) == 1;
    if !adjacent {
        return false;
    }
    world.vehicles.iter().enumerate().all(|(j, other)| {
        if j == i {
            return true;
        }
        let occupies = nearest_lane(other.y, cfg.lane_width, cfg.n_lanes) == target_lane
            || other.lane == target_lane
            || other
                .lane_change
                .as_ref()
                .is_some_and(|p| p.target_lane == target_lane);
        !occupies || (other.x - me.x).abs() > cfg.d_safe
    })
}

/// Per-step lane-change trigger: draw once, and if the draw fires and the
/// adjacent lane is clear, build a plan starting at the current time. The
/// left lane is preferred when both neighbors exist.
///
/// Callers only invoke this for vehicles that are eligible and not already
/// mid-maneuver; the draw is consumed on every invocation regardless of the
/// feasibility outcome.
pub fn maybe_initiate<F: Scalar, R: Rng + ?Sized>(
    world: &WorldState<F>,
    cfg: &SimConfig<F>,
    i: usize,
    rng: &mut R,
) -> Option<LaneChangePlan<F>> {
    let me = &world.vehicles[i];
    debug_assert!(me.lane_change.is_none());
    let draw = F::unit_uniform(rng);
    if draw >= cfg.lane_change_prob {
        return None;
    }
    let target = if me.lane + 1 < cfg.n_lanes {
        me.lane + 1
    } else if me.lane > 0 {
        me.lane - 1
    } else {
        return None;
    };
    if !lane_change_feasible(world, cfg, i, target) {
        return None;
    }
    let y_end = F::from_u32(target).expect("lane index") * cfg.lane_width;
    LaneChangePlan::new(
        me.y,
        y_end,
        world.sim_time,
        cfg.lane_change_duration,
        me.lane,
        target,
    )
    .ok()
}
