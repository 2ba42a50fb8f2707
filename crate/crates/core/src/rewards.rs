//! Per-vehicle step reward: safety, efficiency, cooperation, plus the causal
//! adjustment. Collision penalties are applied afterwards by the safety
//! module, not here.

use rand::Rng;

use crate::scalar::{count, mean, Scalar};

/// The four components of one vehicle's step reward, before any collision
/// penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown<F: Scalar> {
    pub safety: F,
    pub efficiency: F,
    pub cooperation: F,
    pub causal: F,
}

impl<F: Scalar> RewardBreakdown<F> {
    /// Component sum, in a fixed order so replays reproduce it bit for bit.
    pub fn total(&self) -> F {
        self.safety + self.efficiency + self.cooperation + self.causal
    }
}

/// Spacing reward from the signed front gap. The gap is clamped below at 1 m;
/// a vehicle with nobody ahead passes `infinity` and earns 0.
pub fn safety_reward<F: Scalar>(front_gap: F, base: F) -> F {
    if front_gap == F::infinity() {
        return F::zero();
    }
    base / front_gap.max(F::one())
}

/// Speed reward relative to the fleet average; 0 when the fleet is stopped.
pub fn efficiency_reward<F: Scalar>(v: F, all_speeds: &[F], base: F) -> F {
    assert!(!all_speeds.is_empty());
    let avg = mean(all_speeds);
    if avg == F::zero() {
        return F::zero();
    }
    base * v / avg
}

/// Shared cooperation term: a non-positive penalty scaled by a uniform draw
/// over the historical range of per-step collision counts. Empty history
/// degenerates to zero. The engine draws this once per step and hands the
/// same value to every vehicle.
pub fn cooperation_reward<F: Scalar, R: Rng + ?Sized>(
    n_vehicles: usize,
    gamma: F,
    lambda: F,
    collision_hist: &[u32],
    rng: &mut R,
) -> F {
    if collision_hist.is_empty() {
        return F::zero();
    }
    let lo = count::<F>(*collision_hist.iter().min().unwrap() as usize);
    let hi = count::<F>(*collision_hist.iter().max().unwrap() as usize);
    let u = F::uniform(rng, lo, hi);
    count::<F>(n_vehicles - 1) * gamma * (-lambda * u)
}
