use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Memory,
    DeepClifford,
    Tproxy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Windowed,
    Global,
    Patient,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Memory => "memory",
            Family::DeepClifford => "deep-clifford",
            Family::Tproxy => "tproxy",
        }
    }
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Windowed => "windowed",
            Mode::Global => "global",
            Mode::Patient => "patient",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "memory" => Ok(Family::Memory),
            "deep-clifford" => Ok(Family::DeepClifford),
            "tproxy" => Ok(Family::Tproxy),
            _ => Err(format!("unknown family `{s}`")),
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "windowed" => Ok(Mode::Windowed),
            "global" => Ok(Mode::Global),
            "patient" => Ok(Mode::Patient),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

/// One Monte Carlo experiment.
///
/// Flat key-value file form, one `key = value` per line, `#` comments:
///
/// ```text
/// family = tproxy        # memory | deep-clifford | tproxy
/// mode = windowed       # windowed | global | patient
/// d = 5
/// p = 0.001
/// shots = 100000
/// seed = 1
/// n_r = 1               # memory: rounds; deep-clifford: rounds per layer
/// n_buf = 1             # tproxy
/// n_sep = 3             # tproxy
/// gates = 1             # tproxy: T gates per shot
/// layers = 32           # deep-clifford
/// circuit_seed = 0      # deep-clifford: random Clifford layers
/// passes = 4            # ghost protocol override
/// gs_passes = 1         # comma list of passes exposing ghost singletons
/// compare_global = true # tproxy windowed/patient: also decode globally
/// workers = 1           # 0 uses the rayon default
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: Family,
    pub mode: Mode,
    pub d: usize,
    pub p: f64,
    pub shots: u64,
    pub seed: u64,
    pub n_r: usize,
    pub n_buf: usize,
    pub n_sep: usize,
    pub gates: usize,
    pub layers: usize,
    pub circuit_seed: u64,
    pub passes: Option<u32>,
    pub gs_passes: Option<Vec<u32>>,
    pub compare_global: bool,
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(family: Family, mode: Mode, d: usize, p: f64, shots: u64) -> Self {
        ExperimentConfig {
            family,
            mode,
            d,
            p,
            shots,
            seed: 0,
            n_r: if family == Family::Memory { d } else { 1 },
            n_buf: 1,
            n_sep: 3,
            gates: 1,
            layers: 32,
            circuit_seed: 0,
            passes: None,
            gs_passes: None,
            compare_global: false,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Invalid(m));
        if self.shots < 1 {
            return bad("shots must be at least 1".into());
        }
        if !(0.0..0.5).contains(&self.p) {
            return bad(format!("p = {} outside [0, 0.5)", self.p));
        }
        match (self.family, self.mode) {
            (Family::DeepClifford, Mode::Windowed | Mode::Patient) => {
                bad(format!("mode {} is not defined for deep-clifford", self.mode))
            }
            (Family::Memory, Mode::Patient) => bad("mode patient is not defined for memory".into()),
            _ => Ok(()),
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse `{v}`"))
        }
        match key {
            "family" => self.family = value.parse()?,
            "mode" => self.mode = value.parse()?,
            "d" => self.d = num(value)?,
            "p" => self.p = num(value)?,
            "shots" => self.shots = num(value)?,
            "seed" => self.seed = num(value)?,
            "n_r" => self.n_r = num(value)?,
            "n_buf" => self.n_buf = num(value)?,
            "n_sep" => self.n_sep = num(value)?,
            "gates" => self.gates = num(value)?,
            "layers" => self.layers = num(value)?,
            "circuit_seed" => self.circuit_seed = num(value)?,
            "passes" => self.passes = Some(num(value)?),
            "gs_passes" => {
                self.gs_passes = Some(
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(num)
                        .collect::<Result<_, _>>()?,
                )
            }
            "compare_global" => self.compare_global = num(value)?,
            "workers" => self.workers = num(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Parses the flat key-value form. `family` and `d` are required; other
    /// keys default as in [`ExperimentConfig::new`].
    pub fn from_kv(text: &str) -> Result<Self, HarnessError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| HarnessError::Config {
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let find = |key: &str| pairs.iter().find(|(_, k, _)| k == key);
        let missing = |key: &str| HarnessError::Config {
            line: 0,
            message: format!("missing `{key}`"),
        };
        let (l, _, fam) = find("family").ok_or_else(|| missing("family"))?;
        let family: Family = fam.parse().map_err(|message| HarnessError::Config { line: *l, message })?;
        let (l, _, d) = find("d").ok_or_else(|| missing("d"))?;
        let d: usize = d.parse().map_err(|_| HarnessError::Config {
            line: *l,
            message: format!("cannot parse `{d}`"),
        })?;
        let mut cfg = ExperimentConfig::new(family, Mode::Global, d, 0.0, 1);
        for (line, k, v) in &pairs {
            cfg.set(k, v).map_err(|message| HarnessError::Config { line: *line, message })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "family = {}\nmode = {}\nd = {}\np = {}\nshots = {}\nseed = {}\nn_r = {}\nn_buf = {}\nn_sep = {}\ngates = {}\nlayers = {}\ncircuit_seed = {}\ncompare_global = {}\nworkers = {}\n",
            self.family,
            self.mode,
            self.d,
            self.p,
            self.shots,
            self.seed,
            self.n_r,
            self.n_buf,
            self.n_sep,
            self.gates,
            self.layers,
            self.circuit_seed,
            self.compare_global,
            self.workers
        );
        if let Some(p) = self.passes {
            s.push_str(&format!("passes = {p}\n"));
        }
        if let Some(g) = &self.gs_passes {
            let list: Vec<String> = g.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("gs_passes = {}\n", list.join(",")));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_roundtrip() {
        let mut c = ExperimentConfig::new(Family::Tproxy, Mode::Patient, 5, 0.001, 1000);
        c.passes = Some(6);
        c.gs_passes = Some(vec![1, 4]);
        c.compare_global = true;
        assert_eq!(ExperimentConfig::from_kv(&c.to_kv()).unwrap(), c);
    }

    #[test]
    fn defaults_and_comments() {
        let c = ExperimentConfig::from_kv("# memory run\nfamily = memory\nd = 3 # small\np=0.01\nshots=10\n").unwrap();
        assert_eq!(c.mode, Mode::Global);
        assert_eq!(c.n_r, 3);
        assert_eq!(c.shots, 10);
    }

    #[test]
    fn reports_bad_lines() {
        match ExperimentConfig::from_kv("family = memory\nd = 3\nbogus = 1\n") {
            Err(HarnessError::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::from_kv("family = memory\nd = 3\np = 0.5\n").is_err());
        assert!(ExperimentConfig::from_kv("family = deep-clifford\nd = 3\nmode = windowed\n").is_err());
        assert!(ExperimentConfig::from_kv("family = tproxy\nd = 3\nshots = 0\n").is_err());
    }
}
