use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("norm exponent must satisfy p >= 1, got p = {p}")]
    InvalidNormExponent { p: f64 },

    #[error("exact operator norm is only available for p in {{1, 2, inf}}, got p = {p}; request estimate mode instead")]
    ExactNormUnavailable { p: f64 },

    #[error("{operation} requires a discrete (finite-support) perturbation law; use mc_expected_semigroup for continuous laws")]
    DiscreteLawRequired { operation: &'static str },

    #[error("{what} too large: requested {requested}, limit {limit}")]
    TooLarge {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("singular linear system in {context}")]
    SingularSystem { context: &'static str },

    #[error("empty input: {context}")]
    EmptyInput { context: &'static str },
}
