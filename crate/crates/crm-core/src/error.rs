use thiserror::Error;

/// Errors raised by model construction, sampling and density evaluation.
#[derive(Debug, Error)]
pub enum CrmError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two atoms share a location, which breaks the one-to-one
    /// correspondence between configurations and discrete measures.
    #[error("pinpointing violation: {0}")]
    Pinpointing(String),

    /// The requested quantity needs a finite Levy mass and the model has none.
    #[error("infinite mass: {0}")]
    InfiniteMass(String),

    /// Mass classification is only known in closed form for the named families.
    #[error("unsupported classification: {0}")]
    UnsupportedClassification(String),

    /// The transformed and reference laws are mutually singular on this input.
    #[error("singular measure pair: {0}")]
    Singular(String),

    /// The correction integral failed to converge, which indicates a
    /// violation of the small-weight integrability condition.
    #[error("integrability violation: {0}")]
    IntegrabilityViolation(String),

    /// A structural invariant of a value type failed at runtime.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// Bad configuration: inconsistent keys, thresholds or preconditions.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical kernel reported failure (non-finite value, tabulation, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CrmError>;
