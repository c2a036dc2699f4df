use alloc::string::String;

/// Errors produced by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid recording: {0}")]
    InvalidRecording(String),
    #[error("invalid patient record {patient_id}: {reason}")]
    InvalidPatient { patient_id: String, reason: String },
    #[error("recording shorter than transient window ({duration_s:.3} s <= {trim_s:.3} s)")]
    RecordingTooShort { duration_s: f64, trim_s: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("signal too short: need at least {needed} samples, got {got}")]
    SignalTooShort { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("missing scene {0}")]
    MissingScene(&'static str),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("cohort too small: {0}")]
    CohortTooSmall(String),
    #[error("all {count} search trials failed: {diagnostics}")]
    AllTrialsFailed { count: usize, diagnostics: String },
    #[error("training diverged: {0}")]
    Diverged(String),
}

pub type Result<T> = core::result::Result<T, Error>;
