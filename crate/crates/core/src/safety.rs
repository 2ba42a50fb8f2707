//! Time-to-collision, collision detection, and the penalty/speed response.

use crate::model::{front_neighbor, SimConfig, WorldState};
use crate::scalar::{count, real, Scalar};

/// A detected collision between a vehicle pair, ids ordered `first < second`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent<F: Scalar> {
    pub step: u32,
    /// 1-based vehicle ids, smaller first.
    pub pair: (u32, u32),
    /// Longitudinal distance at detection (m).
    pub gap: F,
}

/// Time-to-collision of a rear vehicle against the one ahead of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtcRecord<F: Scalar> {
    pub step: u32,
    pub rear_id: u32,
    pub front_id: u32,
    /// Strict value: finite only while the rear vehicle is closing;
    /// `infinity` otherwise.
    pub value: F,
    /// Signed diagnostic ratio: finite whenever the speed difference exceeds
    /// 1e-6 m/s, negative while the gap is opening.
    pub signed_value: F,
}

/// Time-to-collision values `(strict, signed)` for a rear/front pair.
pub fn ttc<F: Scalar>(x_rear: F, x_front: F, v_rear: F, v_front: F, vehicle_length: F) -> (F, F) {
    debug_assert!(x_front > x_rear);
    let gap = x_front - x_rear - vehicle_length;
    let closing = v_rear - v_front;
    let strict = if closing > F::zero() {
        gap / closing
    } else {
        F::infinity()
    };
    let signed = if closing.abs() > real(1e-6) {
        gap / closing
    } else {
        F::infinity()
    };
    (strict, signed)
}

/// Scan every pair: a collision is any two vehicles closer than `d_safe`
/// longitudinally while laterally within one proximity band (a full lane
/// width at the default threshold), which also captures mid-maneuver
/// overlap.
pub fn detect_collisions<F: Scalar>(
    world: &WorldState<F>,
    cfg: &SimConfig<F>,
    step: u32,
) -> Vec<CollisionEvent<F>> {
    let n = world.vehicles.len();
    let mut events = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let a = &world.vehicles[i];
            let b = &world.vehicles[j];
            if !cfg.laterally_proximate(a.y, b.y) {
                continue;
            }
            let gap = (a.x - b.x).abs();
            if gap < cfg.d_safe {
                let pair = if a.id < b.id { (a.id, b.id) } else { (b.id, a.id) };
                events.push(CollisionEvent { step, pair, gap });
            }
        }
    }
    events
}

/// Apply the collision response: each involved vehicle takes the penalty once
/// per event, and every rear vehicle's speed drops to its front partner's
/// speed if it was faster. Front-most pairs settle first so chains stay
/// consistent.
pub fn apply_collision_response<F: Scalar>(
    world: &mut WorldState<F>,
    step_rewards: &mut [F],
    events: &[CollisionEvent<F>],
    cfg: &SimConfig<F>,
) {
    if events.is_empty() {
        return;
    }
    let index_of = |id: u32| -> usize {
        world
            .vehicles
            .iter()
            .position(|v| v.id == id)
            .expect("event references a live vehicle")
    };

    let mut involvement = vec![0usize; world.vehicles.len()];
    let mut ordered: Vec<(usize, usize)> = events
        .iter()
        .map(|e| {
            let a = index_of(e.pair.0);
            let b = index_of(e.pair.1);
            // Front is the larger x; ties resolve to the smaller id.
            if world.vehicles[a].x >= world.vehicles[b].x {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();
    for &(front, rear) in &ordered {
        involvement[front] += 1;
        involvement[rear] += 1;
    }
    ordered.sort_by(|l, r| {
        world.vehicles[r.0]
            .x
            .partial_cmp(&world.vehicles[l.0].x)
            .expect("finite positions")
    });

    for (i, &hits) in involvement.iter().enumerate() {
        if hits > 0 {
            step_rewards[i] += count::<F>(hits) * cfg.collision_penalty;
        }
    }
    for (front, rear) in ordered {
        let v_front = world.vehicles[front].v;
        let rear_state = &mut world.vehicles[rear];
        rear_state.v = rear_state.v.min(v_front);
    }
}

/// Per-vehicle front-gap time to collision for the current world.
pub fn front_ttc_records<F: Scalar>(
    world: &WorldState<F>,
    cfg: &SimConfig<F>,
    step: u32,
) -> Vec<TtcRecord<F>> {
    let mut out = Vec::new();
    for (i, rear) in world.vehicles.iter().enumerate() {
        if let Some((j, _)) = front_neighbor(world, cfg, i) {
            let front = &world.vehicles[j];
            let (value, signed_value) = ttc(rear.x, front.x, rear.v, front.v, cfg.vehicle_length);
            out.push(TtcRecord {
                step,
                rear_id: rear.id,
                front_id: front.id,
                value,
                signed_value,
            });
        }
    }
    out
}
