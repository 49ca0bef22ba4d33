use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample at x = {x}")]
    NonFiniteSample { x: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("interpolation: {0}")]
    Interpolation(String),

    #[error("non-finite value in term `{term}`")]
    NonFiniteTerm { term: String },

    #[error("non-finite value in Runge-Kutta stage {stage}")]
    NonFiniteStage { stage: usize },

    #[error("possible blow-up at t = {t}: sup norm {sup} exceeds {threshold}")]
    BlowUp { t: f64, sup: f64, threshold: f64 },

    #[error("the {0:?} form is diagnostic-only and cannot drive a simulation")]
    DiagnosticOnlyForm(crate::dynamics::RhsForm),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("profile undefined at t=0; use initial-data formula")]
    ProfileAtTimeZero,

    #[error("insufficient decay for profile integral (boundary integrand {value:e})")]
    InsufficientDecay { value: f64 },

    #[error("tail signal below floor")]
    TailSignalBelowFloor,

    #[error("spectrum too narrow: {usable} usable modes")]
    SpectrumTooNarrow { usable: usize },

    #[error("E_s scaling overflow at k = {k}")]
    EsOverflow { k: usize },

    #[error("weight hypothesis not satisfied: v·exp(-|x|) is not in L^p")]
    HypothesisNotSatisfied,

    #[error("i/o: {0}")]
    Io(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
