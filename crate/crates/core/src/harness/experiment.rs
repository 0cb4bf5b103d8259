use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Family, Mode};
use super::stats::likelihood_interval;
use crate::circuit::{
    apply_noise_model, build_deep_clifford_circuit, build_memory_circuit, build_tproxy_circuit, Basis, Circuit,
    DeepCliffordParams, NoiseParams, TProxyParams, TProxySchedule,
};
use crate::dem::{extract_dem, DemSampler, DetectorErrorModel};
use crate::error::{DecodeError, HarnessError};
use crate::ghost::{select_schedule, CircuitFamily, GhostConfig, PassSchedule};
use crate::patience::{PatienceConfig, PatientDecoder};
use crate::window::{decode_memory_sliding, GlobalDecoder, WindowConfig, WindowedDecoder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub shots: u64,
    /// Decisions checked: shots x T gates for tproxy, shots otherwise.
    pub gates: u64,
    /// Wrong decisions (tproxy) or failing shots.
    pub failures: u64,
    pub failures_per_observable: Vec<u64>,
    /// Shots with any observable wrong.
    pub failures_any: u64,
    /// Per-gate (tproxy), per-shot (memory) or per-layer (deep-clifford) rate.
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Shots where the global pipeline disagrees on some gate.
    pub tw_disagreements: Option<u64>,
    pub tw_rate: Option<f64>,
    /// Wrong decisions of the global pipeline, when it was run alongside.
    pub global_failures: Option<u64>,
    /// Wrong decisions of the unextended windows in patient mode.
    pub base_failures: Option<u64>,
    pub heralds: u64,
    pub heralds_w: u64,
    pub heralds_c: u64,
    pub total_delay: u64,
    pub avg_delay: f64,
    pub wall_secs: f64,
    pub secs_per_shot: f64,
}

enum Pipeline {
    Global(GlobalDecoder),
    MemorySliding(WindowConfig),
    Windowed(WindowedDecoder),
    Patient(PatientDecoder),
}

/// Circuit, model and observables of an experiment, built once.
pub struct Prepared {
    pub circuit: Circuit,
    pub dem: DetectorErrorModel,
    pub schedule: Option<TProxySchedule>,
    /// Observables scored, in decision order.
    pub observables: Vec<u32>,
    pub ghost: GhostConfig,
}

fn circuit_family(f: Family) -> CircuitFamily {
    match f {
        Family::Memory => CircuitFamily::Memory,
        Family::DeepClifford => CircuitFamily::DeepClifford,
        Family::Tproxy => CircuitFamily::TProxy,
    }
}

/// Ghost protocol settings: the default schedule for the family unless
/// `passes` / `gs_passes` override it.
pub fn ghost_config(config: &ExperimentConfig) -> Result<GhostConfig, HarnessError> {
    let base = select_schedule(config.d, config.n_r, circuit_family(config.family));
    let schedule = match (config.passes, &config.gs_passes) {
        (None, None) => base,
        (p, g) => PassSchedule::new(
            p.unwrap_or(base.passes),
            g.clone().unwrap_or_else(|| base.expose_gs_on.iter().copied().collect()),
        )?,
    };
    Ok(GhostConfig {
        schedule,
        ..GhostConfig::default()
    })
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, HarnessError> {
    config.validate()?;
    let (circuit, schedule) = match config.family {
        Family::Memory => (build_memory_circuit(config.d, config.n_r, Basis::Z)?, None),
        Family::DeepClifford => (
            build_deep_clifford_circuit(&DeepCliffordParams::new(config.d, config.n_r, config.layers, config.circuit_seed))?,
            None,
        ),
        Family::Tproxy => {
            let params = TProxyParams {
                n_buf: config.n_buf,
                n_sep: config.n_sep,
                ..TProxyParams::new(config.d, config.gates)
            };
            let (c, s) = build_tproxy_circuit(&params)?;
            (c, Some(s))
        }
    };
    let dem = extract_dem(&apply_noise_model(&circuit, &NoiseParams::uniform(config.p))?)?;
    let observables = match &schedule {
        Some(s) => s.gates.iter().map(|g| g.observable).collect(),
        None => (0..dem.num_observables as u32).collect(),
    };
    Ok(Prepared {
        circuit,
        dem,
        schedule,
        observables,
        ghost: ghost_config(config)?,
    })
}

#[derive(Debug, Clone, Default)]
struct Tally {
    failures: u64,
    per_observable: Vec<u64>,
    any: u64,
    tw: u64,
    global: u64,
    base: u64,
    heralds: u64,
    heralds_w: u64,
    heralds_c: u64,
    delay: u64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.failures += o.failures;
        if self.per_observable.len() < o.per_observable.len() {
            self.per_observable.resize(o.per_observable.len(), 0);
        }
        for (a, b) in self.per_observable.iter_mut().zip(&o.per_observable) {
            *a += b;
        }
        self.any += o.any;
        self.tw += o.tw;
        self.global += o.global;
        self.base += o.base;
        self.heralds += o.heralds;
        self.heralds_w += o.heralds_w;
        self.heralds_c += o.heralds_c;
        self.delay += o.delay;
        self
    }
}

fn wrong(decisions: &[bool], truth: &[bool]) -> u64 {
    decisions.iter().zip(truth).filter(|(a, b)| a != b).count() as u64
}

/// Runs the configured experiment. Shot `k` is drawn from stream `k` of the
/// seed, so results do not depend on `workers`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    let prep = prepare(config)?;
    run_prepared(config, &prep)
}

pub fn run_prepared(config: &ExperimentConfig, prep: &Prepared) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    let dem = &prep.dem;
    let start = Instant::now();
    let tproxy = || {
        prep.schedule
            .as_ref()
            .ok_or_else(|| HarnessError::Invalid("missing T-proxy schedule".into()))
    };
    let pipeline = match (config.family, config.mode) {
        (_, Mode::Global) => Pipeline::Global(GlobalDecoder::new(dem, prep.observables.clone(), &prep.ghost)?),
        (Family::Memory, Mode::Windowed) => Pipeline::MemorySliding(WindowConfig::default()),
        (Family::Tproxy, Mode::Windowed) => {
            Pipeline::Windowed(WindowedDecoder::new(dem, tproxy()?, config.n_buf, &prep.ghost)?)
        }
        (Family::Tproxy, Mode::Patient) => {
            let pc = PatienceConfig {
                base_n_buf: config.n_buf,
                ..PatienceConfig::new(config.d)
            };
            Pipeline::Patient(PatientDecoder::new(dem, tproxy()?, pc, &prep.ghost)?)
        }
        (f, m) => return Err(HarnessError::Invalid(format!("mode {m} is not defined for {f}"))),
    };
    let compare = config.compare_global && config.family == Family::Tproxy && config.mode != Mode::Global;
    let reference = if compare {
        Some(GlobalDecoder::new(dem, prep.observables.clone(), &prep.ghost)?)
    } else {
        None
    };
    let sampler = DemSampler::new(dem, config.seed);
    let n_obs = prep.observables.len();

    let one = |k: u64| -> Result<Tally, DecodeError> {
        let shot = sampler.sample(k);
        let truth: Vec<bool> = prep.observables.iter().map(|&o| shot.observables[o as usize]).collect();
        let mut t = Tally {
            per_observable: vec![0; n_obs],
            ..Tally::default()
        };
        let decisions = match &pipeline {
            Pipeline::Global(g) => g.decode(&shot.detectors)?,
            Pipeline::MemorySliding(w) => {
                let all = decode_memory_sliding(dem, &shot.detectors, w.commit_rounds, w.buffer_rounds, w.artificial_defects)?;
                prep.observables.iter().map(|&o| all[o as usize]).collect()
            }
            Pipeline::Windowed(w) => w.decode(&shot.detectors)?,
            Pipeline::Patient(p) => {
                let (dec, heralds, stats) = p.decode(&shot.detectors)?;
                let base: Vec<bool> = heralds.iter().map(|h| h.base_decision).collect();
                t.base = wrong(&base, &truth);
                t.heralds = stats.heralds;
                t.heralds_w = stats.heralds_weight;
                t.heralds_c = stats.heralds_complementary;
                t.delay = stats.total_delay;
                dec
            }
        };
        for (i, (a, b)) in decisions.iter().zip(&truth).enumerate() {
            if a != b {
                t.per_observable[i] += 1;
            }
        }
        let w = wrong(&decisions, &truth);
        t.any = (w > 0) as u64;
        t.failures = if config.family == Family::Tproxy { w } else { t.any };
        if let Some(g) = &reference {
            let gd = g.decode(&shot.detectors)?;
            t.global = wrong(&gd, &truth);
            t.tw = (gd != decisions) as u64;
        }
        Ok(t)
    };

    let run = || -> Result<Tally, DecodeError> {
        (0..config.shots)
            .into_par_iter()
            .map(one)
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
    };
    let tally = if config.workers == 1 {
        (0..config.shots).try_fold(Tally::default(), |acc, k| one(k).map(|t| acc.merge(t)))?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| HarnessError::Invalid(e.to_string()))?;
        pool.install(run)?
    };
    let wall = start.elapsed().as_secs_f64();

    let gates_per_shot = if config.family == Family::Tproxy { n_obs as u64 } else { 1 };
    let gates = config.shots * gates_per_shot;
    let (mut rate, (mut lo, mut hi)) = (tally.failures as f64 / gates as f64, likelihood_interval(tally.failures, gates, 1000.0)?);
    if config.family == Family::DeepClifford && config.layers > 0 {
        let per_layer = |x: f64| 1.0 - (1.0 - x).powf(1.0 / config.layers as f64);
        rate = per_layer(rate);
        lo = per_layer(lo);
        hi = per_layer(hi);
    }
    let mut per_observable = tally.per_observable;
    per_observable.resize(n_obs, 0);
    let patient = config.mode == Mode::Patient;
    Ok(ExperimentResult {
        config: config.clone(),
        shots: config.shots,
        gates,
        failures: tally.failures,
        failures_per_observable: per_observable,
        failures_any: tally.any,
        rate,
        ci_lo: lo,
        ci_hi: hi,
        tw_disagreements: compare.then_some(tally.tw),
        tw_rate: compare.then(|| tally.tw as f64 / config.shots as f64),
        global_failures: compare.then_some(tally.global),
        base_failures: patient.then_some(tally.base),
        heralds: tally.heralds,
        heralds_w: tally.heralds_w,
        heralds_c: tally.heralds_c,
        total_delay: tally.delay,
        avg_delay: if patient { tally.delay as f64 / gates as f64 } else { 0.0 },
        wall_secs: wall,
        secs_per_shot: wall / config.shots as f64,
    })
}
