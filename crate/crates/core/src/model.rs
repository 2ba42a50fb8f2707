//! Domain types shared by every module, the kinematic update, and random
//! scenario initialization.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lane_change::LaneChangePlan;
use crate::rng::{substream, StreamPurpose};
use crate::scalar::{real, Scalar};
use crate::strategy::BaselineConfig;

/// Both studied scenarios place four vehicles on the road.
pub const SCENARIO_VEHICLES: usize = 4;

/// In the two-lane scenario, the third vehicle from the front is the one
/// flagged as intending to change lanes (its follower is the vehicle whose
/// spacing the maneuver stresses).
pub const LANE_CHANGER_INDEX: usize = 2;

#[derive(Debug, Error)]
#[error("invalid scenario id {0:?} (expected \"case1\" or \"case2\")")]
pub struct ScenarioParseError(pub String);

/// Scenario identifier used in config files and on the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Four vehicles on a single lane.
    Case1,
    /// Four vehicles on a double lane, one eligible to change lanes.
    Case2,
}

impl FromStr for Scenario {
    type Err = ScenarioParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "case1" => Ok(Scenario::Case1),
            "case2" => Ok(Scenario::Case2),
            other => Err(ScenarioParseError(other.to_string())),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Case1 => "case1",
            Scenario::Case2 => "case2",
        })
    }
}

/// State of one vehicle. Ids are 1-based and ordered by initial longitudinal
/// position: vehicle 1 is farthest ahead.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState<F: Scalar> {
    pub id: u32,
    /// Longitudinal position (m).
    pub x: F,
    /// Lateral position (m).
    pub y: F,
    /// Longitudinal speed (m/s).
    pub v: F,
    /// Lane index; flips only when a maneuver completes.
    pub lane: u32,
    /// Active lane-change maneuver, if any.
    pub lane_change: Option<LaneChangePlan<F>>,
    /// Whether this vehicle may still initiate its one intended lane change.
    pub lane_change_eligible: bool,
}

/// All vehicles plus the step counter. `t` starts at 1; `sim_time` is
/// `(t - 1) * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState<F: Scalar> {
    pub vehicles: Vec<VehicleState<F>>,
    pub t: u32,
    pub sim_time: F,
}

impl<F: Scalar> WorldState<F> {
    pub fn speeds(&self) -> Vec<F> {
        self.vehicles.iter().map(|v| v.v).collect()
    }
}

/// Per-vehicle time series feeding the causal analysis. All three series have
/// one entry per completed step.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleHistory<F: Scalar> {
    /// Longitudinal position after each step (m).
    pub positions: Vec<F>,
    /// Final step reward after each step, collision penalties included.
    pub step_rewards: Vec<F>,
    /// Causal influence recorded at each step.
    pub causal_influence: Vec<F>,
}

impl<F: Scalar> Default for VehicleHistory<F> {
    fn default() -> Self {
        Self {
            positions: Vec::new(),
            step_rewards: Vec::new(),
            causal_influence: Vec::new(),
        }
    }
}

/// Run-level history: the per-vehicle series plus system aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory<F: Scalar> {
    pub per_vehicle: Vec<VehicleHistory<F>>,
    /// System-wide reward total per completed step.
    pub total_rewards: Vec<F>,
    /// Number of collision events per completed step.
    pub collisions_per_step: Vec<u32>,
    pub cumulative_collisions: u32,
}

impl<F: Scalar> RunHistory<F> {
    pub fn new(n_vehicles: usize) -> Self {
        Self {
            per_vehicle: vec![VehicleHistory::default(); n_vehicles],
            total_rewards: Vec::new(),
            collisions_per_step: Vec::new(),
            cumulative_collisions: 0,
        }
    }

    /// Step rewards recorded for the previous step, if any step has completed.
    pub fn last_step_rewards(&self) -> Option<Vec<F>> {
        if self.total_rewards.is_empty() {
            return None;
        }
        Some(
            self.per_vehicle
                .iter()
                .map(|h| *h.step_rewards.last().expect("series in lockstep"))
                .collect(),
        )
    }
}

#[derive(Debug, Error)]
#[error("config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        field,
        reason: reason.into(),
    }
}

/// Every tunable constant of the simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<F: Scalar> {
    /// Step length (s).
    pub dt: F,
    /// Run horizon (s); the step count is `floor(duration / dt)`.
    pub duration: F,
    pub n_lanes: u32,
    /// Lane width (m).
    pub lane_width: F,
    /// Vehicle length (m), used by the time-to-collision metric.
    pub vehicle_length: F,
    pub v_min: F,
    pub v_max: F,
    /// Minimum collision distance (m).
    pub d_min: F,
    /// Safe spacing (m); collision detection and lane-change feasibility gate.
    pub d_safe: F,
    /// Lane-proximity threshold in lane-index units.
    pub epsilon_lane: F,
    /// Causal mask: exploration noise intensity in the causal adjustment.
    pub cm: F,
    /// Weight scaling the position/reward correlation into causal influence.
    pub w_c: F,
    /// Sigmoid inflection point for the imitation probability.
    pub alpha: F,
    /// Sigmoid steepness for the imitation probability.
    pub beta: F,
    /// Temporal discount in the cooperation term, in (0, 1).
    pub gamma: F,
    /// Cooperation penalty scale, > 0.
    pub lambda: F,
    pub safety_base: F,
    pub efficiency_base: F,
    /// Reward added to each vehicle involved in a collision (negative).
    pub collision_penalty: F,
    /// Per-step lane-change trigger probability.
    pub lane_change_prob: F,
    /// Lane-change maneuver duration (s).
    pub lane_change_duration: F,
    /// Std-dev of the imitation speed perturbation (m/s).
    pub imitation_sigma: F,
    /// Fixed imitation probability used by the plain evolutionary baseline.
    pub p_imitation_fixed: F,
    /// Half-width of the mutation speed grid (m/s).
    pub mutation_span: F,
    /// Mutation grid step (m/s).
    pub mutation_step: F,
    /// History window for the causal correlation; 0 means unlimited.
    pub causal_window: usize,
    /// Initial speed range (m/s).
    pub init_v_range: (F, F),
    /// Initial consecutive-gap range (m).
    pub init_gap_range: (F, F),
    /// Safety threshold on time-to-collision (s).
    pub ttc_threshold: F,
    /// Default seed; runs may override it explicitly.
    pub seed: u64,
    pub baseline: BaselineConfig<F>,
}

impl<F: Scalar> Default for SimConfig<F> {
    /// Defaults calibrated so the shipped experiments separate the four
    /// strategies cleanly; every value is overridable through the config
    /// file.
    fn default() -> Self {
        Self {
            dt: real(0.1),
            duration: real(10.0),
            n_lanes: 2,
            lane_width: real(3.75),
            vehicle_length: real(5.0),
            v_min: F::zero(),
            v_max: real(30.0),
            d_min: real(5.0),
            d_safe: real(9.2),
            epsilon_lane: real(0.5),
            cm: real(0.1),
            w_c: real(0.1),
            alpha: real(-1.0),
            beta: real(2.0),
            gamma: real(0.9),
            lambda: real(1.0),
            safety_base: real(10.0),
            efficiency_base: real(10.0),
            collision_penalty: real(-100.0),
            lane_change_prob: real(0.1),
            lane_change_duration: real(8.14),
            imitation_sigma: real(0.3),
            p_imitation_fixed: real(0.5),
            mutation_span: real(2.0),
            mutation_step: real(0.1),
            causal_window: 0,
            init_v_range: (real(10.0), real(20.0)),
            init_gap_range: (real(10.0), real(20.0)),
            ttc_threshold: real(4.0),
            seed: 42,
            baseline: BaselineConfig::default(),
        }
    }
}

impl<F: Scalar> SimConfig<F> {
    // Negated comparisons are deliberate: a NaN value must fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > F::zero()) {
            return Err(invalid("dt", "must be > 0"));
        }
        if !(self.duration > F::zero()) {
            return Err(invalid("duration", "must be > 0"));
        }
        if self.n_lanes < 1 {
            return Err(invalid("n_lanes", "must be >= 1"));
        }
        if !(self.lane_width > F::zero()) {
            return Err(invalid("lane_width", "must be > 0"));
        }
        if !(self.vehicle_length > F::zero()) {
            return Err(invalid("vehicle_length", "must be > 0"));
        }
        if !(self.v_min <= self.v_max) {
            return Err(invalid("v_min", "range [v_min, v_max] is empty"));
        }
        if !(self.d_safe > F::zero()) {
            return Err(invalid("d_safe", "must be > 0"));
        }
        if !(self.d_min > F::zero()) {
            return Err(invalid("d_min", "must be > 0"));
        }
        if !(self.epsilon_lane > F::zero()) {
            return Err(invalid("epsilon_lane", "must be > 0"));
        }
        if !(self.gamma > F::zero() && self.gamma < F::one()) {
            return Err(invalid("gamma", "must lie in (0, 1)"));
        }
        if !(self.lambda > F::zero()) {
            return Err(invalid("lambda", "must be > 0"));
        }
        if !(self.lane_change_prob >= F::zero() && self.lane_change_prob <= F::one()) {
            return Err(invalid("p_lane", "must lie in [0, 1]"));
        }
        if !(self.lane_change_duration > F::zero()) {
            return Err(invalid("t_lane_change", "must be > 0"));
        }
        if !(self.imitation_sigma >= F::zero()) {
            return Err(invalid("sigma_imit", "must be >= 0"));
        }
        if !(self.p_imitation_fixed >= F::zero() && self.p_imitation_fixed <= F::one()) {
            return Err(invalid("p_imitation_fixed", "must lie in [0, 1]"));
        }
        if !(self.mutation_span > F::zero()) {
            return Err(invalid("mutation_span", "must be > 0"));
        }
        if !(self.mutation_step > F::zero()) {
            return Err(invalid("mutation_step", "must be > 0"));
        }
        if !(self.init_v_range.0 <= self.init_v_range.1) {
            return Err(invalid("init_v_range", "range is empty"));
        }
        if !(self.init_gap_range.0 <= self.init_gap_range.1) {
            return Err(invalid("init_gap_range", "range is empty"));
        }
        if !(self.ttc_threshold > F::zero()) {
            return Err(invalid("ttc_threshold", "must be > 0"));
        }
        if !(self.baseline.action_grid_span > F::zero()) {
            return Err(invalid("action_grid_span", "must be > 0"));
        }
        if !(self.baseline.action_grid_step > F::zero()) {
            return Err(invalid("action_grid_step", "must be > 0"));
        }
        if self.baseline.nash_max_iters < 1 {
            return Err(invalid("nash_max_iters", "must be >= 1"));
        }
        if !(self.baseline.nash_tol >= F::zero()) {
            return Err(invalid("nash_tol", "must be >= 0"));
        }
        Ok(())
    }

    /// Stable digest of every parameter except the seed (the seed is recorded
    /// separately so one parameter set spans a whole seeded batch).
    pub fn stable_hash(&self) -> u64 {
        let mut text = String::new();
        let mut push = |name: &str, value: &dyn fmt::Display| {
            text.push_str(name);
            text.push('=');
            text.push_str(&value.to_string());
            text.push('\n');
        };
        push("dt", &self.dt);
        push("duration", &self.duration);
        push("n_lanes", &self.n_lanes);
        push("lane_width", &self.lane_width);
        push("vehicle_length", &self.vehicle_length);
        push("v_min", &self.v_min);
        push("v_max", &self.v_max);
        push("d_min", &self.d_min);
        push("d_safe", &self.d_safe);
        push("epsilon_lane", &self.epsilon_lane);
        push("cm", &self.cm);
        push("w_c", &self.w_c);
        push("alpha", &self.alpha);
        push("beta", &self.beta);
        push("gamma", &self.gamma);
        push("lambda", &self.lambda);
        push("r_safety_base", &self.safety_base);
        push("r_efficiency_base", &self.efficiency_base);
        push("p_collision", &self.collision_penalty);
        push("p_lane", &self.lane_change_prob);
        push("t_lane_change", &self.lane_change_duration);
        push("sigma_imit", &self.imitation_sigma);
        push("p_imitation_fixed", &self.p_imitation_fixed);
        push("mutation_span", &self.mutation_span);
        push("mutation_step", &self.mutation_step);
        push("causal_window", &self.causal_window);
        push("init_v_min", &self.init_v_range.0);
        push("init_v_max", &self.init_v_range.1);
        push("init_gap_min", &self.init_gap_range.0);
        push("init_gap_max", &self.init_gap_range.1);
        push("ttc_threshold", &self.ttc_threshold);
        push("action_grid_span", &self.baseline.action_grid_span);
        push("action_grid_step", &self.baseline.action_grid_step);
        push("nash_max_iters", &self.baseline.nash_max_iters);
        push("nash_tol", &self.baseline.nash_tol);
        fnv1a(text.as_bytes())
    }

    /// How many steps a run of this config executes.
    pub fn step_count(&self) -> usize {
        // Tolerate representation error in duration / dt (10 / 0.1 must be 100).
        let steps = (self.duration / self.dt + real(1e-9)).floor();
        steps.to_usize().unwrap_or(0)
    }

    /// Lateral proximity gate: two vehicles interact when their lateral
    /// offset is below `2 * epsilon_lane` lane widths. At the default
    /// `epsilon_lane = 0.5` this is exactly `|y_i - y_j| < lane_width`.
    pub fn laterally_proximate(&self, y_a: F, y_b: F) -> bool {
        (y_a - y_b).abs() < real::<F>(2.0) * self.epsilon_lane * self.lane_width
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Lane index whose center is nearest to the lateral position `y`.
pub fn nearest_lane<F: Scalar>(y: F, lane_width: F, n_lanes: u32) -> u32 {
    let idx = (y / lane_width).round();
    let idx = idx.to_i64().unwrap_or(0).max(0) as u32;
    idx.min(n_lanes.saturating_sub(1))
}

/// One kinematic step: position advances with the current speed, then the
/// speed absorbs the acceleration and is clamped to the legal band.
pub fn step_kinematics<F: Scalar>(
    state: &VehicleState<F>,
    accel: F,
    dt: F,
    v_min: F,
    v_max: F,
) -> VehicleState<F> {
    debug_assert!(dt > F::zero());
    let mut next = state.clone();
    next.x = state.x + state.v * dt;
    next.v = (state.v + accel * dt).max(v_min).min(v_max);
    next
}

/// Nearest vehicle ahead of `i` in the same lane context, with its
/// center-to-center gap. `None` means nobody is ahead.
pub fn front_neighbor<F: Scalar>(
    world: &WorldState<F>,
    cfg: &SimConfig<F>,
    i: usize,
) -> Option<(usize, F)> {
    let me = &world.vehicles[i];
    let mut best: Option<(usize, F)> = None;
    for (j, other) in world.vehicles.iter().enumerate() {
        if j == i || other.x <= me.x || !cfg.laterally_proximate(me.y, other.y) {
            continue;
        }
        let gap = other.x - me.x;
        if best.is_none_or(|(_, g)| gap < g) {
            best = Some((j, gap));
        }
    }
    best
}

/// Build the initial world for a scenario. Draws come from per-vehicle
/// substreams of `seed`, so two calls with the same arguments agree exactly.
pub fn init_scenario<F: Scalar>(
    cfg: &SimConfig<F>,
    scenario: Scenario,
    seed: u64,
) -> WorldState<F> {
    let n = SCENARIO_VEHICLES;
    let (v_lo, v_hi) = cfg.init_v_range;
    let (g_lo, g_hi) = cfg.init_gap_range;

    let draws: Vec<(F, F)> = (0..n)
        .map(|i| {
            let mut rng = substream(seed, StreamPurpose::Scenario, i);
            let v = F::uniform(&mut rng, v_lo, v_hi);
            let gap = F::uniform(&mut rng, g_lo, g_hi);
            (v, gap)
        })
        .collect();

    // Vehicle ids are 1-based front to back; the rearmost vehicle sits at x = 0.
    let mut xs = vec![F::zero(); n];
    for i in (0..n - 1).rev() {
        xs[i] = xs[i + 1] + draws[i].1;
    }

    let vehicles = (0..n)
        .map(|i| VehicleState {
            id: (i + 1) as u32,
            x: xs[i],
            y: F::zero(),
            v: draws[i].0,
            lane: 0,
            lane_change: None,
            lane_change_eligible: scenario == Scenario::Case2 && i == LANE_CHANGER_INDEX,
        })
        .collect();

    WorldState {
        vehicles,
        t: 1,
        sim_time: F::zero(),
    }
}
