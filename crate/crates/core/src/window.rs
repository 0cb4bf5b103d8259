//! Temporal windows over a detector error model: T-proxy severances, the
//! global reference pipeline, memory sliding windows and the TW metric.

use serde::{Deserialize, Serialize};

use crate::circuit::TProxySchedule;
use crate::dem::{ghost_decompose, ghost_decompose_flagged, partition_dem, DetectorErrorModel, ErrorMechanism};
use crate::error::DecodeError;
use crate::ghost::{GhostConfig, GhostDecoder, GhostOutcome};
use crate::harness::likelihood_interval;
use crate::matching::{build_matching_graph, decode_correlated_two_pass, GraphOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub n_buf: usize,
    pub commit_rounds: usize,
    pub buffer_rounds: usize,
    pub artificial_defects: bool,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            n_buf: 1,
            commit_rounds: 1,
            buffer_rounds: 1,
            artificial_defects: true,
        }
    }
}

/// A detector error model cut down to a subset of detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedDem {
    /// Window-local model; detector `i` is global detector `detectors[i]`.
    pub dem: DetectorErrorModel,
    pub detectors: Vec<u32>,
    /// Per local mechanism: lost at least one detector to the cut.
    pub open: Vec<bool>,
    /// Per local mechanism: index in the original model.
    pub source: Vec<u32>,
}

impl TruncatedDem {
    /// Local syndrome from a global one.
    pub fn restrict(&self, syndrome: &[bool]) -> Vec<bool> {
        self.detectors.iter().map(|&d| syndrome[d as usize]).collect()
    }

    /// Global detectors touched by truncated mechanisms.
    pub fn open_detectors(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .dem
            .mechanisms
            .iter()
            .zip(&self.open)
            .filter(|(_, &o)| o)
            .flat_map(|(m, _)| m.detectors.iter().map(|&d| self.detectors[d as usize]))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Keeps detectors with `keep[d]`. Mechanisms touching a detector with
/// `drop[d]` are removed; the rest lose their cut detectors, keep their
/// probability, and are flagged open. Mechanisms left without detectors are
/// dropped.
pub fn truncate_dem(dem: &DetectorErrorModel, keep: &[bool], drop: &[bool]) -> TruncatedDem {
    let mut local = vec![u32::MAX; dem.num_detectors];
    let mut detectors = Vec::new();
    for d in 0..dem.num_detectors {
        if keep[d] {
            local[d] = detectors.len() as u32;
            detectors.push(d as u32);
        }
    }
    let mut out = DetectorErrorModel {
        mechanisms: Vec::new(),
        num_detectors: detectors.len(),
        num_observables: dem.num_observables,
        detector_patch: detectors.iter().map(|&d| dem.detector_patch[d as usize]).collect(),
        detector_time: detectors.iter().map(|&d| dem.detector_time[d as usize]).collect(),
        detector_sector: detectors.iter().map(|&d| dem.detector_sector[d as usize]).collect(),
    };
    let mut open = Vec::new();
    let mut source = Vec::new();
    for (i, m) in dem.mechanisms.iter().enumerate() {
        if m.detectors.iter().any(|&d| drop.get(d as usize).copied().unwrap_or(false)) {
            continue;
        }
        let kept: Vec<u32> = m
            .detectors
            .iter()
            .filter(|&&d| keep[d as usize])
            .map(|&d| local[d as usize])
            .collect();
        if kept.is_empty() {
            continue;
        }
        open.push(kept.len() < m.detectors.len());
        source.push(i as u32);
        let mut mech = ErrorMechanism::new(m.probability, kept, m.attribution.clone());
        mech.provenance = m.provenance.clone();
        out.mechanisms.push(mech);
    }
    TruncatedDem {
        dem: out,
        detectors,
        open,
        source,
    }
}

/// Decoding problem for one T-proxy gate: everything up to the severance
/// round, plus the measured carrier's whole history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub gate: usize,
    pub n_buf: usize,
    pub observable: u32,
    pub survivor: u32,
    pub carrier: u32,
    /// Last round of survivor detectors inside the window.
    pub severance_round: u32,
    pub cut: TruncatedDem,
}

pub fn window_dem(
    dem: &DetectorErrorModel,
    schedule: &TProxySchedule,
    gate: usize,
    n_buf: usize,
) -> Result<Window, DecodeError> {
    let info = schedule.gates[gate];
    let full = schedule.full_n_buf(gate);
    if n_buf == 0 || n_buf > full {
        return Err(DecodeError::HorizonTooLong {
            requested: n_buf as u32,
            available: full as u32,
        });
    }
    let horizon = info.horizon(n_buf);
    let keep: Vec<bool> = (0..dem.num_detectors)
        .map(|d| dem.detector_time[d] <= horizon || dem.detector_patch[d] == info.carrier)
        .collect();
    Ok(Window {
        gate,
        n_buf,
        observable: info.observable,
        survivor: info.survivor,
        carrier: info.carrier,
        severance_round: horizon,
        cut: truncate_dem(dem, &keep, &[]),
    })
}

/// Ghost decoder bound to one window.
#[derive(Debug, Clone)]
pub struct WindowDecoder {
    pub window: Window,
    pub decoder: GhostDecoder,
}

impl WindowDecoder {
    pub fn new(window: Window, config: GhostConfig) -> Result<Self, DecodeError> {
        let dec = ghost_decompose_flagged(&window.cut.dem, &window.cut.open)?;
        let decoder = GhostDecoder::new(dec, config)?;
        Ok(WindowDecoder { window, decoder })
    }

    /// Decision bit for this window's gate and the protocol outcome.
    pub fn decode(&self, syndrome: &[bool]) -> Result<(bool, GhostOutcome), DecodeError> {
        let local = self.window.cut.restrict(syndrome);
        let out = self.decoder.decode(&local)?;
        Ok((out.logical[self.window.observable as usize], out))
    }
}

/// Fully windowed T-proxy pipeline: one window per gate, each decoded from
/// the start of the circuit up to its severance.
#[derive(Debug, Clone)]
pub struct WindowedDecoder {
    pub windows: Vec<WindowDecoder>,
    pub num_detectors: usize,
}

impl WindowedDecoder {
    pub fn new(
        dem: &DetectorErrorModel,
        schedule: &TProxySchedule,
        n_buf: usize,
        config: &GhostConfig,
    ) -> Result<Self, DecodeError> {
        let windows = (0..schedule.gates.len())
            .map(|g| WindowDecoder::new(window_dem(dem, schedule, g, n_buf)?, config.clone()))
            .collect::<Result<_, _>>()?;
        Ok(WindowedDecoder {
            windows,
            num_detectors: dem.num_detectors,
        })
    }

    /// Per-gate decisions, in gate order.
    pub fn decode(&self, syndrome: &[bool]) -> Result<Vec<bool>, DecodeError> {
        if syndrome.len() != self.num_detectors {
            return Err(DecodeError::SyndromeLength {
                expected: self.num_detectors,
                got: syndrome.len(),
            });
        }
        self.windows.iter().map(|w| w.decode(syndrome).map(|r| r.0)).collect()
    }
}

pub fn decode_tproxy_windowed(
    dem: &DetectorErrorModel,
    schedule: &TProxySchedule,
    syndrome: &[bool],
    n_buf: usize,
    config: &GhostConfig,
) -> Result<Vec<bool>, DecodeError> {
    WindowedDecoder::new(dem, schedule, n_buf, config)?.decode(syndrome)
}

/// Single ghost-protocol decode of the whole model.
#[derive(Debug, Clone)]
pub struct GlobalDecoder {
    pub decoder: GhostDecoder,
    /// Observables reported, in order.
    pub observables: Vec<u32>,
}

impl GlobalDecoder {
    pub fn new(dem: &DetectorErrorModel, observables: Vec<u32>, config: &GhostConfig) -> Result<Self, DecodeError> {
        let decoder = GhostDecoder::new(ghost_decompose(dem)?, config.clone())?;
        Ok(GlobalDecoder { decoder, observables })
    }

    pub fn for_tproxy(dem: &DetectorErrorModel, schedule: &TProxySchedule, config: &GhostConfig) -> Result<Self, DecodeError> {
        Self::new(dem, schedule.gates.iter().map(|g| g.observable).collect(), config)
    }

    pub fn decode(&self, syndrome: &[bool]) -> Result<Vec<bool>, DecodeError> {
        let out = self.decoder.decode(syndrome)?;
        Ok(self.observables.iter().map(|&o| out.logical[o as usize]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwError {
    pub disagreements: u64,
    pub shots: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Fraction of shots on which any per-gate decision differs between pipelines.
pub fn compute_tw_error(windowed: &[Vec<bool>], global: &[Vec<bool>]) -> Result<TwError, DecodeError> {
    if windowed.len() != global.len() {
        return Err(DecodeError::ShotMismatch(windowed.len(), global.len()));
    }
    let shots = windowed.len() as u64;
    let disagreements = windowed.iter().zip(global).filter(|(a, b)| a != b).count() as u64;
    let (ci_lo, ci_hi) = likelihood_interval(disagreements, shots.max(1), 1000.0).unwrap_or((0.0, 1.0));
    Ok(TwError {
        disagreements,
        shots,
        rate: if shots == 0 { 0.0 } else { disagreements as f64 / shots as f64 },
        ci_lo,
        ci_hi,
    })
}

/// Sliding-window decoding of a single-patch memory experiment. Each window
/// spans `commit_rounds + buffer_rounds` rounds; edges starting in the commit
/// region are kept, and with `artificial_defects` their endpoints beyond the
/// commit region are flipped for the next window.
pub fn decode_memory_sliding(
    dem: &DetectorErrorModel,
    syndrome: &[bool],
    commit_rounds: usize,
    buffer_rounds: usize,
    artificial_defects: bool,
) -> Result<Vec<bool>, DecodeError> {
    if syndrome.len() != dem.num_detectors {
        return Err(DecodeError::SyndromeLength {
            expected: dem.num_detectors,
            got: syndrome.len(),
        });
    }
    if commit_rounds == 0 {
        return Err(DecodeError::BadSchedule("commit region must span at least one round".into()));
    }
    let mut working = syndrome.to_vec();
    let mut logical = vec![false; dem.num_observables];
    let last = dem.max_time();
    let mut t0 = 0u32;
    loop {
        let commit_end = t0 + commit_rounds as u32;
        let window_end = commit_end + buffer_rounds as u32;
        let final_window = window_end > last;
        let keep: Vec<bool> = dem
            .detector_time
            .iter()
            .map(|&t| t >= t0 && (final_window || t < window_end))
            .collect();
        let past: Vec<bool> = dem.detector_time.iter().map(|&t| t < t0).collect();
        let cut = truncate_dem(dem, &keep, &past);
        let dec = ghost_decompose_flagged(&cut.dem, &cut.open)?;
        let mut flips: Vec<u32> = Vec::new();
        for problem in partition_dem(&dec) {
            let g = build_matching_graph(&dec, &problem, GraphOptions::exposed(true))?;
            let defects: Vec<u32> = g
                .detectors
                .iter()
                .copied()
                .filter(|&d| working[cut.detectors[d as usize] as usize])
                .collect();
            let corr = decode_correlated_two_pass(&g, &defects, None)?;
            for &e in &corr.edges {
                let edge = &g.edges[e as usize];
                let ends: Vec<u32> = std::iter::once(edge.a)
                    .chain(edge.b)
                    .map(|n| cut.detectors[g.detectors[n as usize] as usize])
                    .collect();
                let start = ends.iter().map(|&d| dem.detector_time[d as usize]).min().unwrap_or(0);
                if !final_window && start >= commit_end {
                    continue;
                }
                for &o in &edge.observables {
                    logical[o as usize] ^= true;
                }
                if final_window {
                    continue;
                }
                for &d in &ends {
                    flips.push(d);
                }
                if artificial_defects && edge.is_boundary() {
                    // detectors the truncated mechanism would have lit beyond the window
                    let comp = &dec.components[edge.components[0] as usize];
                    let src = cut.source[comp.source as usize] as usize;
                    for &d in &dem.mechanisms[src].detectors {
                        if dem.detector_time[d as usize] >= window_end {
                            flips.push(d);
                        }
                    }
                }
            }
        }
        if final_window {
            break;
        }
        if artificial_defects {
            for d in flips {
                if dem.detector_time[d as usize] >= commit_end {
                    working[d as usize] ^= true;
                }
            }
        }
        t0 = commit_end;
    }
    Ok(logical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{apply_noise_model, build_memory_circuit, build_tproxy_circuit, Basis, NoiseParams, TProxyParams};
    use crate::dem::{extract_dem, DemSampler};

    fn proxy(d: usize, gates: usize, p: f64) -> (DetectorErrorModel, TProxySchedule) {
        let (c, s) = build_tproxy_circuit(&TProxyParams::new(d, gates)).unwrap();
        let noisy = apply_noise_model(&c, &NoiseParams::uniform(p)).unwrap();
        (extract_dem(&noisy).unwrap(), s)
    }

    #[test]
    fn n_buf_one_sees_one_post_cnot_round() {
        let (dem, s) = proxy(3, 1, 1e-3);
        let w = window_dem(&dem, &s, 0, 1).unwrap();
        let first = s.gates[0].first_round_after_cnot;
        let survivor_times: Vec<u32> = w
            .cut
            .detectors
            .iter()
            .filter(|&&d| dem.detector_patch[d as usize] == w.survivor)
            .map(|&d| dem.detector_time[d as usize])
            .collect();
        assert_eq!(*survivor_times.iter().max().unwrap(), first);
        assert!(w.cut.open.iter().any(|&o| o));
        // causality: nothing past the severance on the survivor
        assert!(w.cut.detectors.iter().all(|&d| {
            dem.detector_patch[d as usize] != w.survivor || dem.detector_time[d as usize] <= w.severance_round
        }));
        assert!(window_dem(&dem, &s, 0, s.full_n_buf(0) + 1).is_err());
    }

    #[test]
    fn truncation_keeps_probability() {
        let (dem, s) = proxy(3, 1, 1e-3);
        let w = window_dem(&dem, &s, 0, 1).unwrap();
        for (i, m) in w.cut.dem.mechanisms.iter().enumerate() {
            let src = &dem.mechanisms[w.cut.source[i] as usize];
            assert_eq!(m.probability, src.probability);
            assert_eq!(w.cut.open[i], m.detectors.len() < src.detectors.len());
        }
    }

    #[test]
    fn full_horizon_equals_global() {
        let (dem, s) = proxy(3, 2, 3e-3);
        let cfg = GhostConfig::default();
        let full = s.full_n_buf(0).max(s.full_n_buf(1));
        let windows: Vec<WindowDecoder> = (0..2)
            .map(|g| WindowDecoder::new(window_dem(&dem, &s, g, s.full_n_buf(g)).unwrap(), cfg.clone()).unwrap())
            .collect();
        assert!(full >= 1);
        let global = GlobalDecoder::for_tproxy(&dem, &s, &cfg).unwrap();
        let sampler = DemSampler::new(&dem, 3);
        for shot in 0..200 {
            let syn = sampler.sample(shot).detectors;
            let w: Vec<bool> = windows.iter().map(|w| w.decode(&syn).unwrap().0).collect();
            assert_eq!(w, global.decode(&syn).unwrap());
        }
    }

    #[test]
    fn noiseless_decisions_are_zero() {
        let (dem, s) = proxy(3, 2, 1e-3);
        let out = decode_tproxy_windowed(&dem, &s, &vec![false; dem.num_detectors], 1, &GhostConfig::default()).unwrap();
        assert_eq!(out, vec![false, false]);
    }

    #[test]
    fn tw_error_counts_disagreements() {
        let a = vec![vec![false, true], vec![false, false], vec![true, true]];
        let b = vec![vec![false, true], vec![true, false], vec![true, true]];
        let tw = compute_tw_error(&a, &b).unwrap();
        assert_eq!((tw.disagreements, tw.shots), (1, 3));
        assert_eq!(compute_tw_error(&a, &a).unwrap().rate, 0.0);
        assert!(compute_tw_error(&a, &b[..2]).is_err());
    }

    #[test]
    fn sliding_with_long_buffer_fixes_single_faults() {
        let c = build_memory_circuit(5, 6, Basis::Z).unwrap();
        let noisy = apply_noise_model(&c, &NoiseParams::uniform(1e-3)).unwrap();
        let dem = extract_dem(&noisy).unwrap();
        for (i, m) in dem.mechanisms.iter().enumerate().step_by(5) {
            let mut syn = vec![false; dem.num_detectors];
            for &d in &m.detectors {
                syn[d as usize] ^= true;
            }
            let truth: Vec<bool> = (0..dem.num_observables as u32).map(|o| m.observables.contains(&o)).collect();
            let got = decode_memory_sliding(&dem, &syn, 2, 5, true).unwrap();
            assert_eq!(got, truth, "mechanism {i}");
        }
    }
}
