//! Causal evaluation: per-vehicle influence from position/reward history,
//! the system effectiveness diagnostic, and the adjustment term that gates
//! imitation against mutation.

use rand::Rng;

use crate::model::{RunHistory, VehicleHistory};
use crate::scalar::{count, mean, Scalar};

/// Per-step causal quantities recorded in the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalSnapshot<F: Scalar> {
    /// Influence per vehicle, each in `[-|w_c|, |w_c|]`.
    pub influence: Vec<F>,
    pub mean_influence: F,
    /// System effectiveness. Diagnostic only: recorded per step, never fed
    /// back into decisions.
    pub effectiveness: F,
    /// The adjustment each vehicle used this step.
    pub adjustment_per_vehicle: Vec<F>,
}

/// Deviation-form Pearson correlation, clamped into `[-1, 1]`.
///
/// Returns 0 for fewer than two samples or when either series has zero
/// variance: with no spread there is no information to correlate.
pub fn pearson_correlation<F: Scalar>(xs: &[F], ys: &[F]) -> F {
    assert_eq!(xs.len(), ys.len(), "correlation needs equal-length series");
    if xs.len() < 2 {
        return F::zero();
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut cov = F::zero();
    let mut var_x = F::zero();
    let mut var_y = F::zero();
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        let dx = x - mx;
        let dy = y - my;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == F::zero() || var_y == F::zero() {
        return F::zero();
    }
    (cov / (var_x.sqrt() * var_y.sqrt()))
        .max(-F::one())
        .min(F::one())
}

/// Causal influence of one vehicle at step `t`: the weighted correlation of
/// its normalized position history against its step-reward history.
///
/// `window` limits how many trailing samples enter the correlation; 0 means
/// the full history.
pub fn causal_influence<F: Scalar>(
    history: &VehicleHistory<F>,
    t: u32,
    w_c: F,
    window: usize,
) -> F {
    if t < 2 || history.positions.len() < 2 {
        return F::zero();
    }
    let len = history.positions.len();
    let start = if window > 0 && window < len {
        len - window
    } else {
        0
    };
    let scale = count::<F>(t as usize);
    let positions: Vec<F> = history.positions[start..]
        .iter()
        .map(|&p| p / scale)
        .collect();
    let rewards = &history.step_rewards[start..];
    w_c * pearson_correlation(&positions, rewards)
}

/// Element-wise causal influence for every vehicle.
pub fn causal_influence_vector<F: Scalar>(
    history: &RunHistory<F>,
    t: u32,
    w_c: F,
    window: usize,
) -> Vec<F> {
    history
        .per_vehicle
        .iter()
        .map(|h| causal_influence(h, t, w_c, window))
        .collect()
}

/// System causal effectiveness: mean step reward, masked and shifted by the
/// mean influence, normalized by the historical mean of system totals.
/// Guards return 0 when no history exists or the normalizer is zero.
pub fn causal_effectiveness<F: Scalar>(
    step_rewards: &[F],
    cm: F,
    mean_influence: F,
    total_rewards_hist: &[F],
) -> F {
    if total_rewards_hist.is_empty() {
        return F::zero();
    }
    let denom = mean(total_rewards_hist);
    if denom == F::zero() {
        return F::zero();
    }
    mean(step_rewards) * (cm + mean_influence) / denom
}

/// Stochastic causal adjustment: `cm * z + mean_influence_prev` with
/// `z ~ N(0, 1)`. When `cm == 0` the result is exact and no randomness is
/// consumed.
pub fn causal_adjustment<F: Scalar, R: Rng + ?Sized>(
    cm: F,
    mean_influence_prev: F,
    rng: &mut R,
) -> F {
    if cm == F::zero() {
        return mean_influence_prev;
    }
    cm * F::standard_normal(rng) + mean_influence_prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, StreamPurpose};
    use rand::Rng;

    #[test]
    fn pearson_perfectly_linear() {
        let r: f64 = pearson_correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_zero_variance_guard() {
        assert_eq!(pearson_correlation(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]), 0.0);
    }

    #[test]
    fn pearson_perfect_anticorrelation() {
        let r: f64 = pearson_correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]);
        assert!((r + 1.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn pearson_rejects_length_mismatch() {
        pearson_correlation(&[1.0, 2.0], &[1.0]);
    }

    #[test]
    fn influence_single_sample_is_zero() {
        let h = VehicleHistory {
            positions: vec![4.0],
            step_rewards: vec![2.0],
            causal_influence: vec![0.0],
        };
        assert_eq!(causal_influence(&h, 2, 1.0, 0), 0.0);
    }

    #[test]
    fn influence_monotone_linear_pair_saturates() {
        let h = VehicleHistory {
            positions: vec![1.0, 2.0, 3.0, 4.0],
            step_rewards: vec![10.0, 20.0, 30.0, 40.0],
            causal_influence: vec![],
        };
        let w_c = 0.7f64;
        assert!((causal_influence(&h, 5, w_c, 0) - w_c).abs() < 1e-12);
    }

    #[test]
    fn influence_vector_is_elementwise() {
        let h = VehicleHistory {
            positions: vec![1.0, 2.0, 5.0],
            step_rewards: vec![3.0, -1.0, 2.0],
            causal_influence: vec![],
        };
        let rh = RunHistory {
            per_vehicle: vec![h.clone(); 4],
            total_rewards: vec![0.0; 3],
            collisions_per_step: vec![0; 3],
            cumulative_collisions: 0,
        };
        let v: Vec<f64> = causal_influence_vector(&rh, 4, 0.5, 0);
        assert_eq!(v.len(), 4);
        for x in &v {
            assert_eq!(*x, causal_influence(&h, 4, 0.5, 0));
            assert!(x.abs() <= 0.5);
        }
    }

    #[test]
    fn effectiveness_direct_evaluation() {
        let e: f64 = causal_effectiveness(&[10.0, 10.0, 10.0, 10.0], 0.1, 0.0, &[20.0]);
        assert!((e - 0.05).abs() < 1e-15);
    }

    #[test]
    fn effectiveness_zero_numerator_factor() {
        let e: f64 = causal_effectiveness(&[3.0, 4.0], 0.1, -0.1, &[7.0]);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn effectiveness_empty_history_guard() {
        assert_eq!(causal_effectiveness(&[1.0], 0.1, 0.0, &[]), 0.0);
        assert_eq!(causal_effectiveness(&[1.0], 0.1, 0.0, &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn adjustment_without_mask_is_exact() {
        let mut rng = substream(1, StreamPurpose::CausalNoise, 0);
        assert_eq!(causal_adjustment(0.0, 0.25, &mut rng), 0.25);
        // Nothing was consumed.
        let mut fresh = substream(1, StreamPurpose::CausalNoise, 0);
        assert_eq!(rng.random::<u64>(), fresh.random::<u64>());
    }

    #[test]
    fn adjustment_is_reproducible() {
        let mut a = substream(5, StreamPurpose::CausalNoise, 2);
        let mut b = substream(5, StreamPurpose::CausalNoise, 2);
        assert_eq!(
            causal_adjustment(0.1, 0.0, &mut a),
            causal_adjustment(0.1, 0.0, &mut b)
        );
    }

    #[test]
    fn adjustment_moments_match_the_mask() {
        let mut rng = substream(9, StreamPurpose::CausalNoise, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| causal_adjustment(0.1, 0.0, &mut rng))
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.002, "mean {mean}");
        assert!((var.sqrt() - 0.1).abs() < 0.005, "std {}", var.sqrt());
    }
}
