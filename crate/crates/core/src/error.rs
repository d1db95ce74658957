use thiserror::Error;

/// Errors raised by the simulation, extraction and scenario layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("integration diverged at t = {t}")]
    IntegrationDiverged { t: f64 },

    #[error("time {t} is not on the sample grid (t0 = {t0}, step = {step})")]
    OffGrid { t: f64, t0: f64, step: f64 },

    #[error("trajectory horizon exceeded: need t_end >= {required_t_end}, have {available_t_end}")]
    HorizonExceeded {
        required_t_end: f64,
        available_t_end: f64,
    },

    #[error("degenerate samples: {0}")]
    DegenerateSamples(&'static str),

    #[error("g = {0} admits no real decay factor")]
    InvalidG(f64),

    #[error("extracted value {0} lies outside (0, 1)")]
    ExtractionOutOfRange(f64),

    #[error("closed-form solution is singular at t = {t} (denominator {denominator:e})")]
    SingularSolution { t: f64, denominator: f64 },

    #[error("averaging window [0, {window}] holds no valid samples")]
    EmptyWindow { window: f64 },

    #[error("no root found near the seed (residual at seed {residual:e})")]
    RootNotFound { residual: f64 },

    #[error("hypothesis violated: max residual {max_residual:e}")]
    HypothesisViolated { max_residual: f64 },

    #[error("{key} (line {line}): {message}")]
    ScenarioParse {
        key: String,
        line: usize,
        message: String,
    },

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Attaches a scenario name to a numeric failure.
    pub fn in_scenario(self, scenario: &str) -> Self {
        match self {
            e @ Error::Scenario { .. } => e,
            e => Error::Scenario {
                scenario: scenario.to_string(),
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, with scenario context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Scenario { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_parse_error(&self) -> bool {
        matches!(self.root(), Error::ScenarioParse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
