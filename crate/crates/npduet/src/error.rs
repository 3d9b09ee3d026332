use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("degenerate contrast: k = 1 describes no inclusion")]
    DegenerateContrast,
    #[error("resonant mode n = {n}: |4λ₁λ₂ − ρ^(2n)| = {value:e} (plasmonic regime unsupported)")]
    Resonance { n: usize, value: f64 },
    #[error("truncation insufficient at N = {n}: tail ratio {tail:e}; try N = {suggested}")]
    TruncationInsufficient {
        n: usize,
        tail: f64,
        suggested: usize,
    },
    #[error("compatibility error: {0}")]
    Compatibility(String),
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code class: 1 for invalid input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::DegenerateContrast
            | Error::Compatibility(_)
            | Error::Geometry(_)
            | Error::Config(_) => 1,
            Error::Pole(_)
            | Error::Resonance { .. }
            | Error::TruncationInsufficient { .. }
            | Error::Accuracy(_)
            | Error::LinearAlgebra(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
