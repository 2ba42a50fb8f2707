//! Seeded substreams: one master seed fans out into independent ChaCha
//! streams per (purpose, vehicle), so adding a vehicle or skipping a draw in
//! one stream never perturbs the others.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is consumed for. The discriminant is baked into the
/// stream id, so draws for different purposes never interleave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Initial speeds and gaps.
    Scenario = 0,
    /// Per-vehicle strategy noise: branch draws and imitation perturbation.
    Strategy = 1,
    /// Per-vehicle exploration noise in the causal adjustment.
    CausalNoise = 2,
    /// The shared per-step cooperation draw.
    Cooperation = 3,
    /// Per-vehicle lane-change trigger draws.
    LaneChange = 4,
}

/// Derive the substream for `(seed, purpose, index)`.
pub fn substream(seed: u64, purpose: StreamPurpose, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | index as u64);
    rng
}

/// The bundle of streams one run consumes.
#[derive(Debug, Clone)]
pub struct RngSet {
    strategy: Vec<ChaCha8Rng>,
    causal: Vec<ChaCha8Rng>,
    lane_change: Vec<ChaCha8Rng>,
    cooperation: ChaCha8Rng,
}

impl RngSet {
    pub fn new(seed: u64, n_vehicles: usize) -> Self {
        Self {
            strategy: (0..n_vehicles)
                .map(|i| substream(seed, StreamPurpose::Strategy, i))
                .collect(),
            causal: (0..n_vehicles)
                .map(|i| substream(seed, StreamPurpose::CausalNoise, i))
                .collect(),
            lane_change: (0..n_vehicles)
                .map(|i| substream(seed, StreamPurpose::LaneChange, i))
                .collect(),
            cooperation: substream(seed, StreamPurpose::Cooperation, 0),
        }
    }

    pub fn strategy(&mut self, vehicle: usize) -> &mut ChaCha8Rng {
        &mut self.strategy[vehicle]
    }

    pub fn causal(&mut self, vehicle: usize) -> &mut ChaCha8Rng {
        &mut self.causal[vehicle]
    }

    pub fn lane_change(&mut self, vehicle: usize) -> &mut ChaCha8Rng {
        &mut self.lane_change[vehicle]
    }

    pub fn cooperation(&mut self) -> &mut ChaCha8Rng {
        &mut self.cooperation
    }
}
