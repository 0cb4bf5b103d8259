//! Heralded buffer extension for windowed T-proxy decoding.

use serde::{Deserialize, Serialize};

use crate::circuit::TProxySchedule;
use crate::dem::{ghost_decompose_flagged, DetectorErrorModel};
use crate::error::DecodeError;
use crate::ghost::{GhostConfig, GhostDecoder, GhostOutcome};
use crate::window::{window_dem, Window, WindowDecoder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeraldTrigger {
    None,
    WeightGrowth,
    Complementary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeraldResult {
    pub heralded: bool,
    /// First trigger that fired, weight growth checked first.
    pub trigger: HeraldTrigger,
    pub weight_growth: bool,
    pub complementary: bool,
    pub delay_rounds: usize,
    /// Decision of the unextended window.
    pub base_decision: bool,
}

/// Window length after a herald: the buffer that lets an adversarial error
/// reach weight ceil(d/2).
pub fn extended_n_buf(d: usize) -> usize {
    d.div_ceil(2) - 1
}

pub fn delay_rounds(d: usize, base_n_buf: usize) -> usize {
    extended_n_buf(d).saturating_sub(base_n_buf)
}

/// Weight of one patch's pass-`pass` correction over edges with an endpoint
/// in `region` (local detector flags), priced on the final-pass graph so that
/// edges made cheaper by ghost-singleton exposure do not count as growth.
/// Edges absent from that graph keep their own weight.
fn regional_weight(decoder: &GhostDecoder, outcome: &GhostOutcome, pass: u32, patch: usize, region: &[bool]) -> f64 {
    let passes = outcome.pass_corrections.len() as u32;
    let graph = &decoder.graphs_for_pass(pass)[patch];
    let reference = &decoder.graphs_for_pass(passes)[patch];
    let corr = &outcome.pass_corrections[pass as usize - 1][patch];
    corr.edges
        .iter()
        .map(|&e| &graph.edges[e as usize])
        .filter(|e| std::iter::once(e.a).chain(e.b).any(|n| region[graph.detectors[n as usize] as usize]))
        .map(|e| {
            e.components
                .iter()
                .find_map(|c| reference.component_edge.get(c))
                .map_or(e.weight, |&r| reference.edges[r as usize].weight)
        })
        .sum()
}

/// Survivor detectors (window-local) within `radius` rounds of the severance.
pub fn severance_region(window: &Window, radius: u32) -> Vec<bool> {
    let dem = &window.cut.dem;
    (0..dem.num_detectors)
        .map(|d| dem.detector_patch[d] == window.survivor && dem.detector_time[d].abs_diff(window.severance_round) <= radius)
        .collect()
}

/// True when the survivor's correction string near the severance strictly
/// grows from the first to the final pass.
pub fn herald_weight_growth(decoder: &GhostDecoder, outcome: &GhostOutcome, window: &Window, radius: u32) -> bool {
    let passes = outcome.pass_corrections.len() as u32;
    if passes < 2 {
        return false;
    }
    let region = severance_region(window, radius);
    let patch = window.survivor as usize;
    if patch >= decoder.num_patches() {
        return false;
    }
    let first = regional_weight(decoder, outcome, 1, patch, &region);
    let last = regional_weight(decoder, outcome, passes, patch, &region);
    last > first + 1e-9
}

/// Re-decodes with open temporal boundary edges removed; true when the
/// decision changes or the closed problem has no solution.
pub fn herald_complementary(closed: &GhostDecoder, window: &Window, syndrome: &[bool], decision: bool) -> bool {
    match closed.decode(&window.cut.restrict(syndrome)) {
        Ok(out) => out.logical[window.observable as usize] != decision,
        Err(_) => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PatienceStats {
    pub gates: u64,
    pub heralds: u64,
    pub heralds_weight: u64,
    pub heralds_complementary: u64,
    pub total_delay: u64,
    /// Heralds whose re-decode agreed with the original decision.
    pub false_positives: u64,
}

impl PatienceStats {
    pub fn average_delay(&self) -> f64 {
        if self.gates == 0 {
            0.0
        } else {
            self.total_delay as f64 / self.gates as f64
        }
    }

    pub fn merge(&mut self, other: &PatienceStats) {
        self.gates += other.gates;
        self.heralds += other.heralds;
        self.heralds_weight += other.heralds_weight;
        self.heralds_complementary += other.heralds_complementary;
        self.total_delay += other.total_delay;
        self.false_positives += other.false_positives;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatienceConfig {
    pub d: usize,
    pub base_n_buf: usize,
    /// Rounds around the severance inspected by the weight-growth herald;
    /// `None` uses `base_n_buf + 2`.
    pub region_radius: Option<u32>,
}

impl PatienceConfig {
    pub fn new(d: usize) -> Self {
        PatienceConfig {
            d,
            base_n_buf: 1,
            region_radius: None,
        }
    }

    pub fn radius(&self) -> u32 {
        self.region_radius.unwrap_or(self.base_n_buf as u32 + 2)
    }
}

struct GateDecoders {
    base: WindowDecoder,
    closed: GhostDecoder,
    extended: Option<WindowDecoder>,
}

/// Windowed decoding that delays a gate's decision when either herald fires.
pub struct PatientDecoder {
    gates: Vec<GateDecoders>,
    pub config: PatienceConfig,
    pub delay: usize,
    num_detectors: usize,
}

impl PatientDecoder {
    pub fn new(
        dem: &DetectorErrorModel,
        schedule: &TProxySchedule,
        config: PatienceConfig,
        ghost: &GhostConfig,
    ) -> Result<Self, DecodeError> {
        let delay = delay_rounds(config.d, config.base_n_buf);
        let ext = config.base_n_buf + delay;
        let mut gates = Vec::with_capacity(schedule.gates.len());
        for g in 0..schedule.gates.len() {
            if delay > 0 && ext > schedule.max_n_buf(g) {
                return Err(DecodeError::HorizonTooLong {
                    requested: ext as u32,
                    available: schedule.max_n_buf(g) as u32,
                });
            }
            let window = window_dem(dem, schedule, g, config.base_n_buf)?;
            let closed_cfg = GhostConfig {
                drop_open_boundary: true,
                ..ghost.clone()
            };
            let closed = GhostDecoder::new(ghost_decompose_flagged(&window.cut.dem, &window.cut.open)?, closed_cfg)?;
            let base = WindowDecoder::new(window, ghost.clone())?;
            let extended = if delay > 0 {
                Some(WindowDecoder::new(window_dem(dem, schedule, g, ext)?, ghost.clone())?)
            } else {
                None
            };
            gates.push(GateDecoders { base, closed, extended });
        }
        Ok(PatientDecoder {
            gates,
            config,
            delay,
            num_detectors: dem.num_detectors,
        })
    }

    /// Heralds for one gate given its base decode.
    pub fn heralds(&self, gate: usize, syndrome: &[bool], decision: bool, outcome: &GhostOutcome) -> HeraldResult {
        let g = &self.gates[gate];
        let weight_growth = herald_weight_growth(&g.base.decoder, outcome, &g.base.window, self.config.radius());
        let complementary = herald_complementary(&g.closed, &g.base.window, syndrome, decision);
        let trigger = if weight_growth {
            HeraldTrigger::WeightGrowth
        } else if complementary {
            HeraldTrigger::Complementary
        } else {
            HeraldTrigger::None
        };
        let heralded = weight_growth || complementary;
        HeraldResult {
            heralded,
            trigger,
            weight_growth,
            complementary,
            delay_rounds: if heralded { self.delay } else { 0 },
            base_decision: decision,
        }
    }

    /// Final per-gate decisions, per-gate herald results and shot statistics.
    pub fn decode(&self, syndrome: &[bool]) -> Result<(Vec<bool>, Vec<HeraldResult>, PatienceStats), DecodeError> {
        if syndrome.len() != self.num_detectors {
            return Err(DecodeError::SyndromeLength {
                expected: self.num_detectors,
                got: syndrome.len(),
            });
        }
        let mut decisions = Vec::with_capacity(self.gates.len());
        let mut heralds = Vec::with_capacity(self.gates.len());
        let mut stats = PatienceStats::default();
        for (k, g) in self.gates.iter().enumerate() {
            let (base, outcome) = g.base.decode(syndrome)?;
            let h = self.heralds(k, syndrome, base, &outcome);
            stats.gates += 1;
            let mut decision = base;
            if h.heralded {
                stats.heralds += 1;
                stats.heralds_weight += h.weight_growth as u64;
                stats.heralds_complementary += h.complementary as u64;
                stats.total_delay += h.delay_rounds as u64;
                if let Some(ext) = &g.extended {
                    decision = ext.decode(syndrome)?.0;
                }
                if decision == base {
                    stats.false_positives += 1;
                }
            }
            decisions.push(decision);
            heralds.push(h);
        }
        Ok((decisions, heralds, stats))
    }
}

pub fn patient_decode(
    dem: &DetectorErrorModel,
    schedule: &TProxySchedule,
    syndrome: &[bool],
    config: PatienceConfig,
    ghost: &GhostConfig,
) -> Result<(Vec<bool>, PatienceStats), DecodeError> {
    let p = PatientDecoder::new(dem, schedule, config, ghost)?;
    let (dec, _, stats) = p.decode(syndrome)?;
    Ok((dec, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{apply_noise_model, build_tproxy_circuit, NoiseParams, TProxyParams};
    use crate::dem::{extract_dem, DemSampler};
    use crate::window::WindowedDecoder;

    fn proxy(d: usize, p: f64) -> (DetectorErrorModel, TProxySchedule) {
        let (c, s) = build_tproxy_circuit(&TProxyParams::new(d, 1)).unwrap();
        let noisy = apply_noise_model(&c, &NoiseParams::uniform(p)).unwrap();
        (extract_dem(&noisy).unwrap(), s)
    }

    #[test]
    fn delay_law() {
        let got: Vec<usize> = [3, 5, 7, 9, 11, 13, 15].iter().map(|&d| delay_rounds(d, 1)).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn noiseless_shot_is_not_heralded() {
        let (dem, s) = proxy(5, 1e-3);
        let p = PatientDecoder::new(&dem, &s, PatienceConfig::new(5), &GhostConfig::default()).unwrap();
        let (dec, heralds, stats) = p.decode(&vec![false; dem.num_detectors]).unwrap();
        assert_eq!(dec, vec![false]);
        assert!(!heralds[0].heralded);
        assert_eq!(stats.total_delay, 0);
    }

    #[test]
    fn distance_three_never_changes_decisions() {
        let (dem, s) = proxy(3, 4e-3);
        let cfg = GhostConfig::default();
        let p = PatientDecoder::new(&dem, &s, PatienceConfig::new(3), &cfg).unwrap();
        assert_eq!(p.delay, 0);
        let base = WindowedDecoder::new(&dem, &s, 1, &cfg).unwrap();
        let sampler = DemSampler::new(&dem, 4);
        for shot in 0..200 {
            let syn = sampler.sample(shot).detectors;
            let (dec, _, stats) = p.decode(&syn).unwrap();
            assert_eq!(dec, base.decode(&syn).unwrap());
            assert_eq!(stats.total_delay, 0);
        }
    }

    #[test]
    fn extension_needs_rounds() {
        let (c, s) = build_tproxy_circuit(&TProxyParams::new(9, 1)).unwrap();
        let noisy = apply_noise_model(&c, &NoiseParams::uniform(1e-3)).unwrap();
        let dem = extract_dem(&noisy).unwrap();
        assert!(matches!(
            PatientDecoder::new(&dem, &s, PatienceConfig::new(9), &GhostConfig::default()),
            Err(DecodeError::HorizonTooLong { .. })
        ));
    }
}
