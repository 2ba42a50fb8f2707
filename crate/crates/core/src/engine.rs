//! The per-step simulation loop: causal snapshot, strategy, kinematic commit,
//! lateral updates, lane-change triggers, collision handling, and history
//! recording.

use crate::causal::{causal_effectiveness, causal_influence_vector, CausalSnapshot};
use crate::lane_change::{eval_trajectory, maybe_initiate};
use crate::model::{
    front_neighbor, init_scenario, step_kinematics, ConfigError, RunHistory, Scenario, SimConfig,
    WorldState,
};
use crate::rewards::{cooperation_reward, efficiency_reward, safety_reward, RewardBreakdown};
use crate::rng::RngSet;
use crate::safety::{
    apply_collision_response, detect_collisions, front_ttc_records, CollisionEvent, TtcRecord,
};
use crate::scalar::{count, mean, Scalar};
use crate::strategy::{decide, StepContext, StrategyDecision, StrategyKind};

/// Identity of one run; everything needed to reproduce its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta<F: Scalar> {
    pub scenario: Scenario,
    pub strategy: StrategyKind,
    pub seed: u64,
    pub config_hash: u64,
    pub n_vehicles: usize,
    pub dt: F,
    pub ttc_threshold: F,
}

/// One vehicle's state as logged at the end of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleStepState<F: Scalar> {
    pub id: u32,
    pub x: F,
    pub y: F,
    pub lane: u32,
    pub v: F,
    pub lane_change_active: bool,
}

/// One vehicle's reward as logged: the component breakdown, the collision
/// penalty, and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleReward<F: Scalar> {
    pub id: u32,
    pub breakdown: RewardBreakdown<F>,
    pub penalty: F,
    pub total: F,
}

/// Everything recorded for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<F: Scalar> {
    pub step: u32,
    /// Simulation time after this step's updates (s).
    pub sim_time: F,
    pub vehicles: Vec<VehicleStepState<F>>,
    pub rewards: Vec<VehicleReward<F>>,
    pub causal: CausalSnapshot<F>,
    pub ttc: Vec<TtcRecord<F>>,
    pub collisions: Vec<CollisionEvent<F>>,
    pub decisions: Option<Vec<StrategyDecision<F>>>,
}

/// Full per-run record.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLog<F: Scalar> {
    pub meta: RunMeta<F>,
    pub steps: Vec<StepRecord<F>>,
}

impl<F: Scalar> TraceLog<F> {
    /// Total collision events over the run.
    pub fn total_collisions(&self) -> u32 {
        self.steps.iter().map(|s| s.collisions.len() as u32).sum()
    }

    /// Prefix sums of the system-wide reward total per step.
    pub fn cumulative_rewards(&self) -> Vec<F> {
        let mut acc = F::zero();
        self.steps
            .iter()
            .map(|s| {
                acc += s.rewards.iter().map(|r| r.total).sum::<F>();
                acc
            })
            .collect()
    }
}

/// A stepwise simulation. `run` drives it to the configured horizon; tests
/// can also step it manually.
#[derive(Debug, Clone)]
pub struct Engine<F: Scalar> {
    cfg: SimConfig<F>,
    meta: RunMeta<F>,
    world: WorldState<F>,
    history: RunHistory<F>,
    rngs: RngSet,
    prev_mean_influence: F,
}

impl<F: Scalar> Engine<F> {
    pub fn new(
        cfg: &SimConfig<F>,
        scenario: Scenario,
        strategy: StrategyKind,
        seed: u64,
    ) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let world = init_scenario(cfg, scenario, seed);
        let n = world.vehicles.len();
        Ok(Self {
            cfg: cfg.clone(),
            meta: RunMeta {
                scenario,
                strategy,
                seed,
                config_hash: cfg.stable_hash(),
                n_vehicles: n,
                dt: cfg.dt,
                ttc_threshold: cfg.ttc_threshold,
            },
            world,
            history: RunHistory::new(n),
            rngs: RngSet::new(seed, n),
            prev_mean_influence: F::zero(),
        })
    }

    pub fn world(&self) -> &WorldState<F> {
        &self.world
    }

    pub fn history(&self) -> &RunHistory<F> {
        &self.history
    }

    /// Execute one step and return its record.
    pub fn step(&mut self) -> StepRecord<F> {
        let cfg = &self.cfg;
        let step_index = self.world.t;
        let n = self.world.vehicles.len();

        // Causal snapshot from the history accumulated so far.
        let influence =
            causal_influence_vector(&self.history, step_index, cfg.w_c, cfg.causal_window);
        let mean_influence = mean(&influence);

        // Shared cooperation draw for the step.
        let cooperation = cooperation_reward(
            n,
            cfg.gamma,
            cfg.lambda,
            &self.history.collisions_per_step,
            self.rngs.cooperation(),
        );

        // All decisions read the same frozen start-of-step world.
        let last_rewards = self.history.last_step_rewards();
        let outcome = {
            let ctx = StepContext {
                world: &self.world,
                cfg,
                last_rewards: last_rewards.as_deref(),
                prev_mean_influence: self.prev_mean_influence,
                cooperation,
            };
            decide(self.meta.strategy, &ctx, &mut self.rngs)
        };

        // Kinematic commit: acceleration is implied by the target speed.
        for (i, veh) in self.world.vehicles.iter_mut().enumerate() {
            let accel = (outcome.targets[i] - veh.v) / cfg.dt;
            *veh = step_kinematics(veh, accel, cfg.dt, cfg.v_min, cfg.v_max);
        }
        self.world.t += 1;
        self.world.sim_time = count::<F>((self.world.t - 1) as usize) * cfg.dt;

        // Lateral progress for active maneuvers.
        for veh in &mut self.world.vehicles {
            if let Some(plan) = veh.lane_change.clone() {
                let tau = self.world.sim_time - plan.t_start;
                if tau >= plan.duration {
                    veh.lane = plan.target_lane;
                    veh.y = F::from_u32(plan.target_lane).expect("lane index") * cfg.lane_width;
                    veh.lane_change = None;
                } else {
                    veh.y = eval_trajectory(&plan, tau).0;
                }
            }
        }

        // Lane-change triggers for eligible idle vehicles.
        for i in 0..n {
            let veh = &self.world.vehicles[i];
            if veh.lane_change_eligible && veh.lane_change.is_none() {
                if let Some(plan) = maybe_initiate(&self.world, cfg, i, self.rngs.lane_change(i)) {
                    let veh = &mut self.world.vehicles[i];
                    veh.lane_change = Some(plan);
                    // One intended maneuver per run.
                    veh.lane_change_eligible = false;
                }
            }
        }

        // Step rewards on the committed state.
        let speeds = self.world.speeds();
        let breakdowns: Vec<RewardBreakdown<F>> = (0..n)
            .map(|i| {
                let gap = front_neighbor(&self.world, cfg, i)
                    .map(|(_, g)| g)
                    .unwrap_or(F::infinity());
                RewardBreakdown {
                    safety: safety_reward(gap, cfg.safety_base),
                    efficiency: efficiency_reward(speeds[i], &speeds, cfg.efficiency_base),
                    cooperation,
                    causal: outcome.causal[i],
                }
            })
            .collect();

        // Collision handling: penalties and the rear-speed response.
        let events = detect_collisions(&self.world, cfg, step_index);
        let mut totals: Vec<F> = breakdowns.iter().map(|b| b.total()).collect();
        apply_collision_response(&mut self.world, &mut totals, &events, cfg);

        let rewards: Vec<VehicleReward<F>> = (0..n)
            .map(|i| {
                let hits = events
                    .iter()
                    .filter(|e| {
                        let id = self.world.vehicles[i].id;
                        e.pair.0 == id || e.pair.1 == id
                    })
                    .count();
                let penalty = count::<F>(hits) * cfg.collision_penalty;
                VehicleReward {
                    id: self.world.vehicles[i].id,
                    breakdown: breakdowns[i],
                    penalty,
                    total: totals[i],
                }
            })
            .collect();

        // Metrics on the final post-response state.
        let ttc = front_ttc_records(&self.world, cfg, step_index);
        let effectiveness =
            causal_effectiveness(&totals, cfg.cm, mean_influence, &self.history.total_rewards);
        let causal = CausalSnapshot {
            influence,
            mean_influence,
            effectiveness,
            adjustment_per_vehicle: outcome.causal.clone(),
        };

        // History append: one entry per series per step.
        for (i, h) in self.history.per_vehicle.iter_mut().enumerate() {
            h.positions.push(self.world.vehicles[i].x);
            h.step_rewards.push(totals[i]);
            h.causal_influence.push(causal.influence[i]);
        }
        self.history.total_rewards.push(totals.iter().copied().sum());
        self.history
            .collisions_per_step
            .push(events.len() as u32);
        self.history.cumulative_collisions += events.len() as u32;
        self.prev_mean_influence = mean_influence;

        StepRecord {
            step: step_index,
            sim_time: self.world.sim_time,
            vehicles: self
                .world
                .vehicles
                .iter()
                .map(|v| VehicleStepState {
                    id: v.id,
                    x: v.x,
                    y: v.y,
                    lane: v.lane,
                    v: v.v,
                    lane_change_active: v.lane_change.is_some(),
                })
                .collect(),
            rewards,
            causal,
            ttc,
            collisions: events,
            decisions: outcome.decisions,
        }
    }

    /// Drive the run to its configured horizon.
    pub fn run_to_end(mut self) -> TraceLog<F> {
        let n_steps = self.cfg.step_count();
        let mut steps = Vec::with_capacity(n_steps);
        for _ in 0..n_steps {
            steps.push(self.step());
        }
        TraceLog {
            meta: self.meta,
            steps,
        }
    }
}

/// Run one seeded simulation to completion.
pub fn run<F: Scalar>(
    cfg: &SimConfig<F>,
    scenario: Scenario,
    strategy: StrategyKind,
    seed: u64,
) -> Result<TraceLog<F>, ConfigError> {
    Ok(Engine::new(cfg, scenario, strategy, seed)?.run_to_end())
}
