use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DetectorErrorModel;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Shot {
    pub detectors: Vec<bool>,
    pub observables: Vec<bool>,
    /// Indices of the mechanisms that fired.
    pub fired: Vec<u32>,
}

impl Shot {
    pub fn defects(&self) -> Vec<u32> {
        self.detectors
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as u32)
            .collect()
    }
}

/// Per-shot RNG: stream `shot` of the ChaCha8 generator keyed by `seed`, so
/// any partition of the shot range reproduces the same shots.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

#[derive(Debug, Clone)]
pub struct DemSampler<'a> {
    dem: &'a DetectorErrorModel,
    thresholds: Vec<u64>,
    seed: u64,
}

impl<'a> DemSampler<'a> {
    pub fn new(dem: &'a DetectorErrorModel, seed: u64) -> Self {
        let thresholds = dem
            .mechanisms
            .iter()
            .map(|m| {
                if m.probability >= 1.0 {
                    u64::MAX
                } else {
                    (m.probability.max(0.0) * 2f64.powi(64)) as u64
                }
            })
            .collect();
        DemSampler {
            dem,
            thresholds,
            seed,
        }
    }

    pub fn sample(&self, shot: u64) -> Shot {
        let mut rng = shot_rng(self.seed, shot);
        let mut out = Shot {
            detectors: vec![false; self.dem.num_detectors],
            observables: vec![false; self.dem.num_observables],
            fired: Vec::new(),
        };
        for (i, (&t, m)) in self.thresholds.iter().zip(&self.dem.mechanisms).enumerate() {
            let r = rng.next_u64();
            if r < t || t == u64::MAX {
                out.fired.push(i as u32);
                for &d in &m.detectors {
                    out.detectors[d as usize] ^= true;
                }
                for &o in &m.observables {
                    out.observables[o as usize] ^= true;
                }
            }
        }
        out
    }
}

pub fn sample_dem_shot(dem: &DetectorErrorModel, seed: u64, shot: u64) -> Shot {
    DemSampler::new(dem, seed).sample(shot)
}

pub fn sample_dem(dem: &DetectorErrorModel, seed: u64, shots: usize) -> Vec<Shot> {
    let s = DemSampler::new(dem, seed);
    (0..shots as u64).map(|k| s.sample(k)).collect()
}
