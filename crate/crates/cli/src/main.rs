use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ghostlab::circuit::{apply_noise_model, serialize_circuit, NoiseParams};
use ghostlab::dem::{ghost_decompose, ghost_decompose_flagged, DetectorErrorModel};
use ghostlab::error::DecodeError;
use ghostlab::ghost::GhostDecoder;
use ghostlab::harness::{
    prepare, render_report, run_experiment, ExperimentConfig, Family, Mode, Prepared, ReportFormat,
};
use ghostlab::patience::{PatienceConfig, PatientDecoder};
use ghostlab::verify::{brute_force_dem, compare_dems, frame_sim_crosscheck, min_failure_weight_search, window_candidates};
use ghostlab::window::{decode_memory_sliding, window_dem, WindowConfig, WindowDecoder};
use serde_json::json;

#[derive(Parser)]
#[command(name = "ghostlab", version, about = "Circuits, error models and ghost-protocol decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Setup {
    /// memory | deep-clifford | tproxy
    #[arg(long, default_value = "tproxy")]
    family: Family,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 0.001)]
    p: f64,
    /// windowed | global | patient
    #[arg(long, default_value = "windowed")]
    mode: Mode,
    /// Memory rounds, or rounds per deep-Clifford layer.
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long, default_value_t = 1)]
    n_buf: usize,
    #[arg(long, default_value_t = 3)]
    n_sep: usize,
    /// T gates per tproxy shot.
    #[arg(long, default_value_t = 1)]
    gates: usize,
    #[arg(long, default_value_t = 32)]
    layers: usize,
    /// Seed of the random deep-Clifford layers.
    #[arg(long, default_value_t = 0)]
    circuit_seed: u64,
    #[arg(long)]
    passes: Option<u32>,
    /// Comma list of passes exposing ghost singletons.
    #[arg(long, value_delimiter = ',')]
    gs_passes: Option<Vec<u32>>,
}

impl Setup {
    fn config(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(self.family, self.mode, self.d, self.p, 1);
        if let Some(n) = self.n_r {
            c.n_r = n;
        }
        c.n_buf = self.n_buf;
        c.n_sep = self.n_sep;
        c.gates = self.gates;
        c.layers = self.layers;
        c.circuit_seed = self.circuit_seed;
        c.passes = self.passes;
        c.gs_passes = self.gs_passes.clone();
        c
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the (noisy, when p > 0) circuit text.
    Build {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the detector error model.
    Dem {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode one syndrome given as defect indices (`3 17` or `D3 D17`).
    Decode {
        #[command(flatten)]
        setup: Setup,
        /// Syndrome file; `-` reads stdin.
        #[arg(long)]
        syndrome: PathBuf,
        /// Write the ghost-protocol trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Monte Carlo experiment from flags or a key-value config file.
    Run {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Also decode every shot globally and report the TW rate.
        #[arg(long)]
        compare_global: bool,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Write `secs_per_shot` as 0 for reproducible output.
        #[arg(long)]
        no_timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive minimum-weight failure search.
    Search {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value_t = 3)]
        w_max: usize,
        /// Rounds around the severance that candidates must touch (tproxy).
        #[arg(long, default_value_t = 4)]
        radius: u32,
        /// Exit with status 2 unless the minimum failing weight equals this.
        #[arg(long)]
        expect: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the extracted model against Pauli-frame simulation.
    Crosscheck {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value_t = 1000)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also compare with exhaustive single-fault enumeration.
        #[arg(long)]
        exhaustive: bool,
    },
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_syndrome(path: &PathBuf, n: usize) -> Result<Vec<bool>> {
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())?
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    };
    let mut syn = vec![false; n];
    for tok in text.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
        let i: usize = tok
            .trim_start_matches('D')
            .parse()
            .with_context(|| format!("bad detector `{tok}`"))?;
        if i >= n {
            bail!("detector {i} out of range ({n} detectors)");
        }
        syn[i] ^= true;
    }
    Ok(syn)
}

/// Maps a full syndrome to the scored observables with the configured pipeline.
type Pipeline<'a> = Box<dyn Fn(&[bool]) -> Result<Vec<bool>, DecodeError> + 'a>;

fn pipeline<'a>(cfg: &ExperimentConfig, prep: &'a Prepared) -> Result<Pipeline<'a>> {
    let dem = &prep.dem;
    let obs = prep.observables.clone();
    Ok(match (cfg.mode, &prep.schedule) {
        (Mode::Global, _) => {
            let dec = GhostDecoder::new(ghost_decompose(dem)?, prep.ghost.clone())?;
            Box::new(move |s| {
                let out = dec.decode(s)?;
                dec.check_outcome(s, &out)?;
                Ok(obs.iter().map(|&o| out.logical[o as usize]).collect())
            })
        }
        (Mode::Windowed, Some(sched)) => {
            let wins = (0..sched.gates.len())
                .map(|g| WindowDecoder::new(window_dem(dem, sched, g, cfg.n_buf)?, prep.ghost.clone()))
                .collect::<Result<Vec<_>, _>>()?;
            Box::new(move |s| {
                wins.iter()
                    .map(|w| {
                        let local = w.window.cut.restrict(s);
                        let out = w.decoder.decode(&local)?;
                        w.decoder.check_outcome(&local, &out)?;
                        Ok(out.logical[w.window.observable as usize])
                    })
                    .collect()
            })
        }
        (Mode::Patient, Some(sched)) => {
            let pc = PatienceConfig {
                base_n_buf: cfg.n_buf,
                ..PatienceConfig::new(cfg.d)
            };
            let p = PatientDecoder::new(dem, sched, pc, &prep.ghost)?;
            Box::new(move |s| Ok(p.decode(s)?.0))
        }
        (Mode::Windowed, None) if cfg.family == Family::Memory => {
            let w = WindowConfig::default();
            Box::new(move |s| {
                let all = decode_memory_sliding(dem, s, w.commit_rounds, w.buffer_rounds, w.artificial_defects)?;
                Ok(obs.iter().map(|&o| all[o as usize]).collect())
            })
        }
        (m, _) => bail!("mode {m} is not defined for {}", cfg.family),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Build { setup, out } => {
            let cfg = setup.config();
            cfg.validate()?;
            let prep = prepare(&cfg)?;
            let c = if cfg.p > 0.0 {
                apply_noise_model(&prep.circuit, &NoiseParams::uniform(cfg.p))?
            } else {
                prep.circuit
            };
            emit(&serialize_circuit(&c), &out)?;
        }
        Command::Dem { setup, out } => {
            let prep = prepare(&setup.config())?;
            prep.dem.validate()?;
            emit(&prep.dem.to_text(), &out)?;
        }
        Command::Decode { setup, syndrome, trace } => {
            let cfg = setup.config();
            let prep = prepare(&cfg)?;
            let syn = read_syndrome(&syndrome, prep.dem.num_detectors)?;
            let decisions = pipeline(&cfg, &prep)?(&syn)?;
            if let Some(path) = trace {
                let (dec, local) = match (&prep.schedule, cfg.mode) {
                    (Some(s), Mode::Windowed | Mode::Patient) => {
                        let w = window_dem(&prep.dem, s, 0, cfg.n_buf)?;
                        let local = w.cut.restrict(&syn);
                        (GhostDecoder::new(ghost_decompose_flagged(&w.cut.dem, &w.cut.open)?, prep.ghost.clone())?, local)
                    }
                    _ => (GhostDecoder::new(ghost_decompose(&prep.dem)?, prep.ghost.clone())?, syn.clone()),
                };
                let out = dec.decode(&local)?;
                let file = std::fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
                out.write_trace(std::io::BufWriter::new(file))?;
            }
            let report = json!({ "observables": prep.observables, "decisions": decisions });
            println!("{report}");
        }
        Command::Run {
            setup,
            config,
            shots,
            seed,
            workers,
            compare_global,
            format,
            no_timing,
            out,
        } => {
            let cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    ExperimentConfig::from_kv(&text)?
                }
                None => ExperimentConfig {
                    shots,
                    seed,
                    workers,
                    compare_global,
                    ..setup.config()
                },
            };
            let result = run_experiment(&cfg)?;
            emit(&render_report(&[result], format, !no_timing), &out)?;
        }
        Command::Search {
            setup,
            w_max,
            radius,
            expect,
            out,
        } => {
            let cfg = setup.config();
            let prep = prepare(&cfg)?;
            let candidates: Vec<u32> = match &prep.schedule {
                Some(s) => window_candidates(&prep.dem, &window_dem(&prep.dem, s, 0, cfg.n_buf)?, radius),
                None => (0..prep.dem.mechanisms.len() as u32).collect(),
            };
            let decode = pipeline(&cfg, &prep)?;
            let report = min_failure_weight_search(decode, &prep.dem, &prep.observables, &candidates, w_max)?;
            emit(&format!("{}\n", serde_json::to_string_pretty(&report)?), &out)?;
            if let Some(w) = expect {
                if report.min_weight() != Some(w) {
                    eprintln!("expected minimum failing weight {w}, found {:?}", report.min_weight());
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Command::Crosscheck {
            setup,
            shots,
            seed,
            exhaustive,
        } => {
            let cfg = setup.config();
            let prep = prepare(&cfg)?;
            let noisy = apply_noise_model(&prep.circuit, &NoiseParams::uniform(cfg.p))?;
            let report = frame_sim_crosscheck(&noisy, &prep.dem, seed, shots);
            let mut ok = report.passed();
            let mut exhaustive_result = None;
            if exhaustive {
                let oracle: DetectorErrorModel = brute_force_dem(&noisy);
                let r = compare_dems(&prep.dem, &oracle, 1e-12);
                ok &= r.is_ok();
                exhaustive_result = Some(r.err().unwrap_or_else(|| "ok".into()));
            }
            let summary = json!({
                "shots": report.shots,
                "faults_sampled": report.faults_sampled,
                "mismatches": report.mismatches,
                "exhaustive": exhaustive_result,
                "passed": ok,
            });
            println!("{summary}");
            if !ok {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
