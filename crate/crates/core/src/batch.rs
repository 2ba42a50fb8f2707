//! Seeded Monte Carlo batches and their aggregation.

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{run, TraceLog};
use crate::model::{ConfigError, Scenario, SimConfig};
use crate::scalar::{count, Scalar};
use crate::strategy::StrategyKind;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot summarize an empty batch")]
    Empty,
    #[error("trace {index} does not match the batch: {reason}")]
    Heterogeneous { index: usize, reason: String },
}

/// Mean / sample-std / min / max of one per-run statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats<F: Scalar> {
    pub mean: F,
    pub std: F,
    pub min: F,
    pub max: F,
}

impl<F: Scalar> Stats<F> {
    fn from_values(values: &[F]) -> Self {
        let n = values.len();
        assert!(n > 0);
        let mean = values.iter().copied().sum::<F>() / count(n);
        let std = if n < 2 {
            F::zero()
        } else {
            let ss = values
                .iter()
                .map(|&v| (v - mean) * (v - mean))
                .sum::<F>();
            (ss / count(n - 1)).sqrt()
        };
        let min = values.iter().copied().fold(F::infinity(), F::min);
        let max = values.iter().copied().fold(F::neg_infinity(), F::max);
        Stats {
            mean,
            std,
            min,
            max,
        }
    }
}

/// A per-step curve with its pointwise run-spread band.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveBand<F: Scalar> {
    pub mean: Vec<F>,
    pub lo: Vec<F>,
    pub hi: Vec<F>,
}

/// Like [`CurveBand`], but a step may carry no value at all (every sample was
/// the no-risk marker).
#[derive(Debug, Clone, PartialEq)]
pub struct OptionalCurveBand<F: Scalar> {
    pub mean: Vec<Option<F>>,
    pub lo: Vec<Option<F>>,
    pub hi: Vec<Option<F>>,
}

/// Headline numbers for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats<F: Scalar> {
    pub seed: u64,
    pub total_collisions: u32,
    pub final_cumulative_reward: F,
    /// Fraction of front-gap records whose strict time-to-collision is finite
    /// and below the safety threshold.
    pub below_ttc_fraction: F,
    /// Mean finite strict time-to-collision; `None` when every record was the
    /// no-risk marker.
    pub mean_strict_ttc: Option<F>,
}

/// Aggregates of a seeded batch for one (scenario, strategy) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary<F: Scalar> {
    pub scenario: Scenario,
    pub strategy: StrategyKind,
    pub n_runs: usize,
    pub base_seed: u64,
    pub config_hash: u64,
    pub n_steps: usize,
    pub n_vehicles: usize,
    pub dt: F,
    pub per_run: Vec<RunStats<F>>,
    pub collisions: Stats<F>,
    pub below_ttc_fraction_mean: F,
    /// System-wide cumulative reward over time.
    pub cumulative_reward: CurveBand<F>,
    /// Speed over time, one curve per vehicle.
    pub speeds: Vec<CurveBand<F>>,
    pub ttc_strict: OptionalCurveBand<F>,
    pub ttc_signed: OptionalCurveBand<F>,
}

fn per_run_stats<F: Scalar>(trace: &TraceLog<F>) -> RunStats<F> {
    let threshold = trace.meta.ttc_threshold;
    let mut slots = 0usize;
    let mut below = 0usize;
    let mut finite_sum = F::zero();
    let mut finite_n = 0usize;
    for step in &trace.steps {
        for r in &step.ttc {
            slots += 1;
            if r.value.is_finite() {
                finite_sum += r.value;
                finite_n += 1;
                if r.value < threshold {
                    below += 1;
                }
            }
        }
    }
    RunStats {
        seed: trace.meta.seed,
        total_collisions: trace.total_collisions(),
        final_cumulative_reward: *trace
            .cumulative_rewards()
            .last()
            .expect("non-empty trace"),
        below_ttc_fraction: if slots == 0 {
            F::zero()
        } else {
            count::<F>(below) / count::<F>(slots)
        },
        mean_strict_ttc: (finite_n > 0).then(|| finite_sum / count::<F>(finite_n)),
    }
}

fn band<F: Scalar>(per_run_curves: &[Vec<F>]) -> CurveBand<F> {
    let steps = per_run_curves[0].len();
    let mut mean = Vec::with_capacity(steps);
    let mut lo = Vec::with_capacity(steps);
    let mut hi = Vec::with_capacity(steps);
    for k in 0..steps {
        let column: Vec<F> = per_run_curves.iter().map(|c| c[k]).collect();
        mean.push(column.iter().copied().sum::<F>() / count(column.len()));
        lo.push(column.iter().copied().fold(F::infinity(), F::min));
        hi.push(column.iter().copied().fold(F::neg_infinity(), F::max));
    }
    CurveBand { mean, lo, hi }
}

fn optional_band<F: Scalar>(per_run_curves: &[Vec<Option<F>>]) -> OptionalCurveBand<F> {
    let steps = per_run_curves[0].len();
    let mut mean = Vec::with_capacity(steps);
    let mut lo = Vec::with_capacity(steps);
    let mut hi = Vec::with_capacity(steps);
    for k in 0..steps {
        let column: Vec<F> = per_run_curves.iter().filter_map(|c| c[k]).collect();
        if column.is_empty() {
            mean.push(None);
            lo.push(None);
            hi.push(None);
        } else {
            mean.push(Some(column.iter().copied().sum::<F>() / count(column.len())));
            lo.push(Some(column.iter().copied().fold(F::infinity(), F::min)));
            hi.push(Some(column.iter().copied().fold(F::neg_infinity(), F::max)));
        }
    }
    OptionalCurveBand { mean, lo, hi }
}

/// Per-step mean of finite front time-to-collision values; the signed variant
/// excludes its own infinity marker the same way.
fn ttc_curves<F: Scalar>(trace: &TraceLog<F>) -> (Vec<Option<F>>, Vec<Option<F>>) {
    let strict = trace
        .steps
        .iter()
        .map(|s| {
            let finite: Vec<F> = s
                .ttc
                .iter()
                .map(|r| r.value)
                .filter(|v| v.is_finite())
                .collect();
            (!finite.is_empty()).then(|| finite.iter().copied().sum::<F>() / count(finite.len()))
        })
        .collect();
    let signed = trace
        .steps
        .iter()
        .map(|s| {
            let finite: Vec<F> = s
                .ttc
                .iter()
                .map(|r| r.signed_value)
                .filter(|v| v.is_finite())
                .collect();
            (!finite.is_empty()).then(|| finite.iter().copied().sum::<F>() / count(finite.len()))
        })
        .collect();
    (strict, signed)
}

/// Aggregate already-produced traces. All traces must share the scenario,
/// strategy, step count, vehicle count, and parameter hash.
pub fn summarize<F: Scalar>(traces: &[TraceLog<F>]) -> Result<BatchSummary<F>, BatchError> {
    let first = traces.first().ok_or(BatchError::Empty)?;
    for (index, t) in traces.iter().enumerate() {
        let reason = if t.meta.scenario != first.meta.scenario {
            Some("scenario differs")
        } else if t.meta.strategy != first.meta.strategy {
            Some("strategy differs")
        } else if t.steps.len() != first.steps.len() {
            Some("step count differs")
        } else if t.meta.n_vehicles != first.meta.n_vehicles {
            Some("vehicle count differs")
        } else if t.meta.config_hash != first.meta.config_hash {
            Some("config hash differs")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(BatchError::Heterogeneous {
                index,
                reason: reason.to_string(),
            });
        }
    }

    let per_run: Vec<RunStats<F>> = traces.iter().map(per_run_stats).collect();
    let collision_counts: Vec<F> = per_run
        .iter()
        .map(|r| count::<F>(r.total_collisions as usize))
        .collect();

    let reward_curves: Vec<Vec<F>> = traces.iter().map(|t| t.cumulative_rewards()).collect();
    let n_vehicles = first.meta.n_vehicles;
    let speeds: Vec<CurveBand<F>> = (0..n_vehicles)
        .map(|i| {
            let curves: Vec<Vec<F>> = traces
                .iter()
                .map(|t| t.steps.iter().map(|s| s.vehicles[i].v).collect())
                .collect();
            band(&curves)
        })
        .collect();
    let strict_curves: Vec<Vec<Option<F>>> = traces.iter().map(|t| ttc_curves(t).0).collect();
    let signed_curves: Vec<Vec<Option<F>>> = traces.iter().map(|t| ttc_curves(t).1).collect();

    let below_mean = per_run
        .iter()
        .map(|r| r.below_ttc_fraction)
        .sum::<F>()
        / count(per_run.len());

    Ok(BatchSummary {
        scenario: first.meta.scenario,
        strategy: first.meta.strategy,
        n_runs: traces.len(),
        base_seed: first.meta.seed,
        config_hash: first.meta.config_hash,
        n_steps: first.steps.len(),
        n_vehicles,
        dt: first.meta.dt,
        collisions: Stats::from_values(&collision_counts),
        below_ttc_fraction_mean: below_mean,
        cumulative_reward: band(&reward_curves),
        speeds,
        ttc_strict: optional_band(&strict_curves),
        ttc_signed: optional_band(&signed_curves),
        per_run,
    })
}

/// Run `n_runs` seeded simulations (seeds `base_seed..base_seed + n_runs`)
/// and aggregate them. Parallel and serial execution produce identical
/// summaries; runs always aggregate in seed order.
pub fn run_batch<F: Scalar>(
    cfg: &SimConfig<F>,
    scenario: Scenario,
    strategy: StrategyKind,
    n_runs: usize,
    base_seed: u64,
    parallel: bool,
) -> Result<BatchSummary<F>, BatchError> {
    assert!(n_runs >= 1);
    cfg.validate()?;
    let seeds: Vec<u64> = (0..n_runs as u64).map(|k| base_seed + k).collect();
    let traces: Vec<TraceLog<F>> = if parallel {
        seeds
            .par_iter()
            .map(|&seed| run(cfg, scenario, strategy, seed).expect("validated config"))
            .collect()
    } else {
        seeds
            .iter()
            .map(|&seed| run(cfg, scenario, strategy, seed).expect("validated config"))
            .collect()
    };
    let mut summary = summarize(&traces)?;
    summary.base_seed = base_seed;
    Ok(summary)
}
