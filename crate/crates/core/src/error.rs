use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("code distance must be an odd integer >= 3, got {0}")]
    BadDistance(usize),
    #[error("at least one syndrome-extraction round is required")]
    NoRounds,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("patches {0} and {1} have different distances")]
    DistanceMismatch(usize, usize),
    #[error("patch {0} is not initialized")]
    PatchNotInitialized(usize),
    #[error("patch {0} has already been measured out")]
    PatchMeasured(usize),
    #[error("noise probability {0} outside [0, 0.5)")]
    BadProbability(f64),
    #[error("circuit already carries noise channels")]
    AlreadyNoisy,
    #[error("record offset rec[{offset}] out of range at measurement count {available}")]
    RecordOutOfRange { offset: i64, available: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message} (token `{token}`)")]
pub struct ParseError {
    pub line: usize,
    pub token: String,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, token: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError {
            line,
            token: token.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DemError {
    #[error("detector {index} is not deterministic under noiseless execution")]
    NondeterministicDetector { index: usize },
    #[error("observable {index} is not deterministic under noiseless execution")]
    NondeterministicObservable { index: usize },
    #[error("mechanism {mechanism} spans {patches} patches")]
    TooManyPatches { mechanism: usize, patches: usize },
    #[error("mechanism {mechanism} flips {count} detectors in one sector of patch {patch}")]
    TooManyDetectors {
        mechanism: usize,
        patch: u32,
        count: usize,
    },
    #[error("detector index {0} out of range")]
    DetectorOutOfRange(usize),
    #[error("mechanism probability {0} outside (0, 0.5]")]
    BadProbability(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("detector {0} is lit but has no incident edges")]
    IsolatedDetector(u32),
    #[error("syndrome is not correctable: odd defect count in a component without boundary")]
    Infeasible,
    #[error("syndrome length {got} does not match detector count {expected}")]
    SyndromeLength { expected: usize, got: usize },
    #[error("message targets detector {0} which is not owned by the target patch")]
    BadMessage(u32),
    #[error("invalid pass schedule: {0}")]
    BadSchedule(String),
    #[error("window horizon {requested} exceeds the {available} rounds available")]
    HorizonTooLong { requested: u32, available: u32 },
    #[error("no consistent explanation within weight cap {0}")]
    NoExplanation(usize),
    #[error("mismatched shot counts: {0} vs {1}")]
    ShotMismatch(usize, usize),
    #[error("decoder invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Dem(#[from] DemError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("at least one shot is required")]
    ZeroShots,
    #[error("failure count {k} exceeds shot count {n}")]
    BadCount { k: u64, n: u64 },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Dem(#[from] DemError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}
