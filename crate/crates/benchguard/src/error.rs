use thiserror::Error;

/// Crate-wide error type.
///
/// Variants map onto the CLI exit-code scheme: everything here exits 1;
/// lint findings are not errors (the CLI maps a dirty report to exit 2).
#[derive(Debug, Error)]
pub enum BgError {
    /// Input file failed validation; message names the file/row where possible.
    #[error("load error: {0}")]
    Load(String),

    /// A value violated a declared schema invariant.
    #[error("schema error: {0}")]
    Schema(String),

    /// A metric has no defined value on this input (e.g. single-class AUROC).
    /// Never silently mapped to 0.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Cross-row inconsistency, e.g. one subject under two labels.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Caller-supplied parameter out of contract.
    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BgError>;
