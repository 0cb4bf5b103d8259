//! Benchmark fixtures.

use ghostlab::circuit::{apply_noise_model, build_memory_circuit, build_tproxy_circuit, Basis, Circuit, NoiseParams, TProxyParams, TProxySchedule};
use ghostlab::dem::{extract_dem, sample_dem, DetectorErrorModel};

pub fn noisy_memory(d: usize, p: f64) -> Circuit {
    apply_noise_model(&build_memory_circuit(d, d, Basis::Z).expect("valid distance"), &NoiseParams::uniform(p))
        .expect("noise applies")
}

pub fn noisy_tproxy(d: usize, p: f64) -> (Circuit, TProxySchedule) {
    let (c, s) = build_tproxy_circuit(&TProxyParams::new(d, 1)).expect("valid distance");
    (apply_noise_model(&c, &NoiseParams::uniform(p)).expect("noise applies"), s)
}

pub fn tproxy_dem(d: usize, p: f64) -> (DetectorErrorModel, TProxySchedule) {
    let (c, s) = noisy_tproxy(d, p);
    (extract_dem(&c).expect("model extracts"), s)
}

/// Sampled syndromes with at least one defect.
pub fn syndromes(dem: &DetectorErrorModel, seed: u64, n: usize) -> Vec<Vec<bool>> {
    sample_dem(dem, seed, n * 20)
        .into_iter()
        .map(|s| s.detectors)
        .filter(|s| s.iter().any(|&b| b))
        .take(n)
        .collect()
}
