use thiserror::Error;

/// Errors raised by game construction, evaluation and the dynamics drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("a lending game needs at least one lender")]
    NoLenders,

    #[error("a lending game needs at least one borrower")]
    NoBorrowers,

    #[error("budget of lender {index} must be positive and finite, got {value}")]
    InvalidBudget { index: usize, value: f64 },

    #[error("demand of borrower {index} must be positive and finite, got {value}")]
    InvalidDemand { index: usize, value: f64 },

    #[error("rate corridor requires 0 < rate_min < rate_max, got rate_min={rate_min}, rate_max={rate_max}")]
    InvalidCorridor { rate_min: f64, rate_max: f64 },

    #[error("profile shape {found:?} does not match game shape {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("lender index {index} out of range for {count} lenders")]
    LenderOutOfRange { index: usize, count: usize },

    #[error("borrower index {index} out of range for {count} borrowers")]
    BorrowerOutOfRange { index: usize, count: usize },

    #[error("prefix length {z} out of range 0..={count}")]
    PrefixOutOfRange { z: usize, count: usize },

    #[error("lending amount s[{lender}][{borrower}] must be non-negative and finite, got {value}")]
    InvalidAmount {
        lender: usize,
        borrower: usize,
        value: f64,
    },

    #[error("lender {lender} lends {total} which exceeds its budget {budget}")]
    BudgetExceeded {
        lender: usize,
        total: f64,
        budget: f64,
    },

    #[error("vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("pseudo-gradient step {step} exceeds the stability bound {bound}")]
    UnstableStep { step: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, GameError>;
