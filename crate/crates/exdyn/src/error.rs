use thiserror::Error;

/// Crate-wide error type.
///
/// Errors split into two broad classes surfaced as process exit codes by the
/// CLI: configuration problems (bad parameters, malformed input, IO) and
/// numerical failures (divergence, degenerate samples, solver breakdown).
#[derive(Debug, Error)]
pub enum Error {
    #[error("state has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires a discrete-time map")]
    MapExpected,

    #[error("operation requires a continuous-time flow")]
    FlowExpected,

    #[error("non-finite state component")]
    NonFiniteState,

    #[error("non-finite state after integrator substep {substep}")]
    NonFiniteSubstep { substep: u32 },

    #[error("orbit diverged to a non-finite state at step {step}")]
    Divergence { step: u64 },

    #[error("Jacobian undefined on the switching line x = 0")]
    JacobianUndefined,

    #[error("tangent basis degenerated during QR accumulation")]
    TangentDegenerate,

    #[error("invalid system parameters: {0}")]
    InvalidParams(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("unknown parameter `{name}`")]
    UnknownParam { name: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: u64 },

    #[error("series too short: need at least {needed} values, got {got}")]
    SeriesTooShort { needed: u64, got: u64 },

    #[error("{n} values cannot be split into {parts} equal parts")]
    NotDivisible { n: u64, parts: u64 },

    #[error("degenerate sample: zero second L-moment")]
    DegenerateSample,

    #[error("L-skewness {tau3} outside the solvable range ({lo:.6}, {hi:.6})")]
    SkewnessOutOfRange { tau3: f64, lo: f64, hi: f64 },

    #[error("shape parameter {xi} outside the supported range (requires xi < 1)")]
    ShapeOutOfRange { xi: f64 },

    #[error("probability {p} outside the open interval (0, 1)")]
    InvalidProbability { p: f64 },

    #[error("no convergence: {what}")]
    NoConvergence { what: &'static str },

    #[error("subsample {index} failed: {source}")]
    SubsampleFit {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep failed in {} row(s): {}", failures.len(), describe_failures(failures))]
    SweepFailed { failures: Vec<(usize, Box<Error>)> },

    #[error("line {line}: cannot parse `{text}` as a number")]
    ParseValue { line: usize, text: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn describe_failures(failures: &[(usize, Box<Error>)]) -> String {
    failures
        .iter()
        .map(|(i, e)| format!("row {i}: {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// Attach the pipeline stage at which the error surfaced.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code class: 1 for configuration errors, 2 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            DimensionMismatch { .. } | MapExpected | FlowExpected | InvalidParams(_)
            | InvalidObservable(_) | UnknownParam { .. } | InvalidConfig(_)
            | SeriesTooShort { .. } | NotDivisible { .. } | InvalidProbability { .. }
            | ParseValue { .. } | Io(_) | Json(_) => 1,
            NonFiniteState | NonFiniteSubstep { .. } | Divergence { .. }
            | JacobianUndefined | TangentDegenerate | NonFiniteSample { .. }
            | DegenerateSample | SkewnessOutOfRange { .. } | ShapeOutOfRange { .. }
            | NoConvergence { .. } => 2,
            SubsampleFit { source, .. } | Stage { source, .. } => source.exit_code(),
            SweepFailed { failures } => failures
                .first()
                .map(|(_, e)| e.exit_code())
                .unwrap_or(2),
        }
    }
}
