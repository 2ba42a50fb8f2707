//! Speed selection: causal-gated imitation/mutation, the fixed-rate
//! evolutionary ablation, and the Nash / Stackelberg baselines.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::causal::causal_adjustment;
use crate::model::{SimConfig, WorldState};
use crate::rewards::safety_reward;
use crate::rng::RngSet;
use crate::scalar::{real, Scalar};

/// Strategy names accepted in configs and on the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Cegt,
    Egt,
    Nash,
    Stackelberg,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Cegt,
        StrategyKind::Egt,
        StrategyKind::Nash,
        StrategyKind::Stackelberg,
    ];
}

#[derive(Debug, Error)]
#[error("unknown strategy {0:?} (expected cegt, egt, nash, or stackelberg)")]
pub struct StrategyParseError(pub String);

impl FromStr for StrategyKind {
    type Err = StrategyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cegt" => Ok(StrategyKind::Cegt),
            "egt" => Ok(StrategyKind::Egt),
            "nash" => Ok(StrategyKind::Nash),
            "stackelberg" => Ok(StrategyKind::Stackelberg),
            other => Err(StrategyParseError(other.to_string())),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::Cegt => "cegt",
            StrategyKind::Egt => "egt",
            StrategyKind::Nash => "nash",
            StrategyKind::Stackelberg => "stackelberg",
        })
    }
}

/// Parameters of the Nash / Stackelberg solvers. The action grid mirrors the
/// mutation grid so the baselines stay comparable.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig<F: Scalar> {
    pub action_grid_span: F,
    pub action_grid_step: F,
    pub nash_max_iters: u32,
    pub nash_tol: F,
}

impl<F: Scalar> Default for BaselineConfig<F> {
    fn default() -> Self {
        Self {
            action_grid_span: real(2.0),
            action_grid_step: real(0.1),
            nash_max_iters: 10,
            nash_tol: real(1e-6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionMode {
    Imitation,
    Mutation,
}

impl fmt::Display for DecisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecisionMode::Imitation => "imitation",
            DecisionMode::Mutation => "mutation",
        })
    }
}

/// One vehicle's per-step decision, as recorded in the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyDecision<F: Scalar> {
    pub vehicle_id: u32,
    pub mode: DecisionMode,
    pub chosen_speed: F,
    pub best_trial_reward: F,
    pub p_imitation: F,
    pub a_causal: F,
}

/// Frozen start-of-step inputs every per-vehicle decision reads.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a, F: Scalar> {
    pub world: &'a WorldState<F>,
    pub cfg: &'a SimConfig<F>,
    /// Final step rewards of the previous step, if one has completed.
    pub last_rewards: Option<&'a [F]>,
    /// Mean causal influence from the previous step.
    pub prev_mean_influence: F,
    /// The step's shared cooperation term.
    pub cooperation: F,
}

/// What a strategy hands back to the engine for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutcome<F: Scalar> {
    /// Target speed per vehicle.
    pub targets: Vec<F>,
    /// Causal adjustment per vehicle (zero for strategies without one).
    pub causal: Vec<F>,
    /// Per-vehicle decisions for the evolutionary strategies.
    pub decisions: Option<Vec<StrategyDecision<F>>>,
}

/// Imitation/mutation probabilities from the causal adjustment: a shifted
/// logistic in `a_causal`, with the complement for mutation.
pub fn imitation_mutation_probabilities<F: Scalar>(a_causal: F, alpha: F, beta: F) -> (F, F) {
    let p_im = F::one() / (F::one() + (-beta * (a_causal - alpha)).exp());
    (p_im, F::one() - p_im)
}

/// Vehicle with the highest previous-step reward among all others. Ties
/// resolve to the smallest index. `None` when no peer or no reward history
/// exists; the caller then falls back to mutation.
pub fn imitation_target<F: Scalar>(
    world: &WorldState<F>,
    last_rewards: Option<&[F]>,
    i: usize,
) -> Option<usize> {
    let rewards = last_rewards?;
    debug_assert_eq!(rewards.len(), world.vehicles.len());
    let mut best: Option<(usize, F)> = None;
    for (j, &r) in rewards.iter().enumerate() {
        if j == i {
            continue;
        }
        if best.is_none_or(|(_, br)| r > br) {
            best = Some((j, r));
        }
    }
    best.map(|(j, _)| j)
}

/// Imitated speed: the target's speed plus a small normal perturbation,
/// clamped to the legal band. A zero sigma copies exactly and consumes no
/// randomness.
pub fn imitate_speed<F: Scalar, R: Rng + ?Sized>(
    target_v: F,
    sigma: F,
    v_min: F,
    v_max: F,
    rng: &mut R,
) -> F {
    let noise = if sigma == F::zero() {
        F::zero()
    } else {
        sigma * F::standard_normal(rng)
    };
    (target_v + noise).max(v_min).min(v_max)
}

/// Candidate speeds `center ± span` at `step` increments, intersected with
/// `[v_min, v_max]`, ascending. Never empty: the clamped center is the
/// fallback.
pub fn speed_grid<F: Scalar>(center: F, span: F, step: F, v_min: F, v_max: F) -> Vec<F> {
    let half = (span / step)
        .round()
        .to_i64()
        .expect("grid half-width fits i64")
        .max(0);
    let mut grid = Vec::with_capacity((2 * half + 1) as usize);
    for k in -half..=half {
        let v = center + F::from_i64(k).expect("grid index") * step;
        if v >= v_min && v <= v_max {
            grid.push(v);
        }
    }
    if grid.is_empty() {
        grid.push(center.max(v_min).min(v_max));
    }
    grid
}

/// Safety and efficiency of vehicle `i` under a hypothetical speed profile:
/// every position is projected one step with its profile speed, then the
/// front gap is scored. Efficiency rates the trial speed against the frozen
/// start-of-step fleet average, so it stays monotone in the candidate even
/// when the candidate itself would shift the average.
pub fn profile_reward_parts<F: Scalar>(
    world: &WorldState<F>,
    cfg: &SimConfig<F>,
    i: usize,
    speeds: &[F],
) -> (F, F) {
    let dt = cfg.dt;
    let me = &world.vehicles[i];
    let my_x = me.x + speeds[i] * dt;
    let mut front_gap = F::infinity();
    for (j, other) in world.vehicles.iter().enumerate() {
        if j == i || !cfg.laterally_proximate(me.y, other.y) {
            continue;
        }
        let other_x = other.x + speeds[j] * dt;
        if other_x > my_x {
            front_gap = front_gap.min(other_x - my_x);
        }
    }
    let safety = safety_reward(front_gap, cfg.safety_base);
    let n = world.vehicles.len();
    let fleet_mean = world
        .vehicles
        .iter()
        .fold(F::zero(), |acc, v| acc + v.v)
        / crate::scalar::count::<F>(n);
    let efficiency = if fleet_mean == F::zero() {
        F::zero()
    } else {
        cfg.efficiency_base * speeds[i] / fleet_mean
    };
    (safety, efficiency)
}

/// Grid search over trial speeds for vehicle `i`, other vehicles held at
/// their current kinematics. Returns the best speed and its trial reward;
/// ties resolve to the lowest speed.
pub fn mutation_search<F: Scalar>(
    world: &WorldState<F>,
    cfg: &SimConfig<F>,
    i: usize,
    causal_term: F,
    cooperation: F,
) -> (F, F) {
    let current = world.vehicles[i].v;
    let grid = speed_grid(
        current,
        cfg.mutation_span,
        cfg.mutation_step,
        cfg.v_min,
        cfg.v_max,
    );
    let mut speeds = world.speeds();
    let mut best_v = grid[0];
    let mut best_r = F::neg_infinity();
    for &v in &grid {
        speeds[i] = v;
        let (safety, efficiency) = profile_reward_parts(world, cfg, i, &speeds);
        let reward = safety + efficiency + cooperation + causal_term;
        if reward > best_r {
            best_r = reward;
            best_v = v;
        }
    }
    (best_v, best_r)
}

fn trial_reward<F: Scalar>(
    world: &WorldState<F>,
    cfg: &SimConfig<F>,
    i: usize,
    v: F,
    causal_term: F,
    cooperation: F,
) -> F {
    let mut speeds = world.speeds();
    speeds[i] = v;
    let (safety, efficiency) = profile_reward_parts(world, cfg, i, &speeds);
    safety + efficiency + cooperation + causal_term
}

fn select_speed<F: Scalar>(
    ctx: &StepContext<'_, F>,
    i: usize,
    rngs: &mut RngSet,
    fixed_rate: Option<F>,
) -> StrategyDecision<F> {
    let cfg = ctx.cfg;
    let (a_causal, p_imitation) = match fixed_rate {
        Some(p) => (F::zero(), p),
        None => {
            let a = causal_adjustment(cfg.cm, ctx.prev_mean_influence, rngs.causal(i));
            let (p_im, _) = imitation_mutation_probabilities(a, cfg.alpha, cfg.beta);
            (a, p_im)
        }
    };
    // The causal term enters the trial reward only for the causal strategy.
    let causal_term = if fixed_rate.is_some() { F::zero() } else { a_causal };

    let branch_draw = F::unit_uniform(rngs.strategy(i));
    let imitate = branch_draw < p_imitation;
    let target = if imitate {
        imitation_target(ctx.world, ctx.last_rewards, i)
    } else {
        None
    };

    let (mode, chosen, best_r) = match target {
        Some(j) => {
            let v = imitate_speed(
                ctx.world.vehicles[j].v,
                cfg.imitation_sigma,
                cfg.v_min,
                cfg.v_max,
                rngs.strategy(i),
            );
            let r = trial_reward(ctx.world, cfg, i, v, causal_term, ctx.cooperation);
            (DecisionMode::Imitation, v, r)
        }
        None => {
            let (v, r) = mutation_search(ctx.world, cfg, i, causal_term, ctx.cooperation);
            (DecisionMode::Mutation, v, r)
        }
    };

    StrategyDecision {
        vehicle_id: ctx.world.vehicles[i].id,
        mode,
        chosen_speed: chosen.max(cfg.v_min).min(cfg.v_max),
        best_trial_reward: best_r,
        p_imitation,
        a_causal,
    }
}

/// Causal-gated imitation/mutation selection for one vehicle.
pub fn select_speed_cegt<F: Scalar>(
    ctx: &StepContext<'_, F>,
    i: usize,
    rngs: &mut RngSet,
) -> StrategyDecision<F> {
    select_speed(ctx, i, rngs, None)
}

/// Fixed-rate ablation: identical machinery, but the imitation probability is
/// a constant and no causal term enters the trial reward.
pub fn select_speed_egt<F: Scalar>(
    ctx: &StepContext<'_, F>,
    i: usize,
    rngs: &mut RngSet,
) -> StrategyDecision<F> {
    select_speed(ctx, i, rngs, Some(ctx.cfg.p_imitation_fixed))
}

fn best_response<F: Scalar>(
    world: &WorldState<F>,
    cfg: &SimConfig<F>,
    i: usize,
    grid: &[F],
    profile: &mut [F],
) -> F {
    let mut best_v = profile[i];
    let mut best_r = F::neg_infinity();
    let original = profile[i];
    for &v in grid {
        profile[i] = v;
        let (safety, efficiency) = profile_reward_parts(world, cfg, i, profile);
        let reward = safety + efficiency;
        if reward > best_r {
            best_r = reward;
            best_v = v;
        }
    }
    profile[i] = original;
    best_v
}

fn baseline_grids<F: Scalar>(world: &WorldState<F>, cfg: &SimConfig<F>) -> Vec<Vec<F>> {
    world
        .vehicles
        .iter()
        .map(|veh| {
            speed_grid(
                veh.v,
                cfg.baseline.action_grid_span,
                cfg.baseline.action_grid_step,
                cfg.v_min,
                cfg.v_max,
            )
        })
        .collect()
}

/// Iterated best response over the per-vehicle action grids: sweep vehicles
/// in index order, each maximizing its own safety + efficiency payoff against
/// the current iterate, until no one moves more than the tolerance.
pub fn nash_select<F: Scalar>(world: &WorldState<F>, cfg: &SimConfig<F>) -> Vec<F> {
    let grids = baseline_grids(world, cfg);
    let mut profile = world.speeds();
    for _ in 0..cfg.baseline.nash_max_iters {
        let mut max_move = F::zero();
        for i in 0..profile.len() {
            let next = best_response(world, cfg, i, &grids[i], &mut profile);
            max_move = max_move.max((next - profile[i]).abs());
            profile[i] = next;
        }
        if max_move <= cfg.baseline.nash_tol {
            break;
        }
    }
    profile
}

/// Leader-follower sequential selection: the front vehicle commits first,
/// then each follower best-responds to everything already committed. One
/// pass, front to back.
pub fn stackelberg_select<F: Scalar>(world: &WorldState<F>, cfg: &SimConfig<F>) -> Vec<F> {
    let grids = baseline_grids(world, cfg);
    let mut profile = world.speeds();
    for i in 0..profile.len() {
        profile[i] = best_response(world, cfg, i, &grids[i], &mut profile);
    }
    profile
}

/// Run one strategy for every vehicle against the frozen start-of-step world.
pub fn decide<F: Scalar>(
    kind: StrategyKind,
    ctx: &StepContext<'_, F>,
    rngs: &mut RngSet,
) -> PolicyOutcome<F> {
    let n = ctx.world.vehicles.len();
    match kind {
        StrategyKind::Cegt | StrategyKind::Egt => {
            let decisions: Vec<StrategyDecision<F>> = (0..n)
                .map(|i| match kind {
                    StrategyKind::Cegt => select_speed_cegt(ctx, i, rngs),
                    _ => select_speed_egt(ctx, i, rngs),
                })
                .collect();
            PolicyOutcome {
                targets: decisions.iter().map(|d| d.chosen_speed).collect(),
                causal: decisions.iter().map(|d| d.a_causal).collect(),
                decisions: Some(decisions),
            }
        }
        StrategyKind::Nash => PolicyOutcome {
            targets: nash_select(ctx.world, ctx.cfg),
            causal: vec![F::zero(); n],
            decisions: None,
        },
        StrategyKind::Stackelberg => PolicyOutcome {
            targets: stackelberg_select(ctx.world, ctx.cfg),
            causal: vec![F::zero(); n],
            decisions: None,
        },
    }
}
