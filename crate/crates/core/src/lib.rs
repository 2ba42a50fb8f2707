//! Deterministic multi-agent highway simulator.
//!
//! Four vehicles pick speeds each step through an evolutionary update whose
//! imitation/mutation balance is gated by a causal signal correlated from
//! their own position and reward histories; a fixed-rate evolutionary
//! variant, an iterated-best-response solver, and a leader-follower solver
//! serve as baselines. The engine is generic over the floating-point scalar;
//! the `*64` aliases below pin the common `f64` instantiation.

pub mod batch;
pub mod causal;
pub mod engine;
pub mod lane_change;
pub mod model;
pub mod rewards;
pub mod rng;
pub mod safety;
pub mod scalar;
pub mod stats;
pub mod strategy;

pub use scalar::Scalar;

pub type SimConfig64 = model::SimConfig<f64>;
pub type WorldState64 = model::WorldState<f64>;
pub type TraceLog64 = engine::TraceLog<f64>;
pub type BatchSummary64 = batch::BatchSummary<f64>;

pub type SimConfig32 = model::SimConfig<f32>;
pub type TraceLog32 = engine::TraceLog<f32>;
