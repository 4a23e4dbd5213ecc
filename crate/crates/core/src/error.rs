use thiserror::Error;

use crate::channel::{MessageId, User};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("channel gains must satisfy n1 >= n2 >= n3, got {0:?} (relabel users first)")]
    NotDescending([u32; 3]),
    #[error("invalid SNR {0}: must be a finite value >= 1")]
    InvalidSnr(f64),
    #[error("invalid user {0}: must be 1, 2 or 3")]
    InvalidUser(u32),
    #[error("a private message from user {0} cannot be addressed to itself")]
    SelfAddressed(User),
    #[error("malformed number {0:?}")]
    BadNumber(String),
    #[error("expected {expected} comma-separated values, found {found}")]
    WrongArity { expected: usize, found: usize },
    #[error("malformed message id {0:?} (expected p:j>i or c:j)")]
    BadMessageId(String),
    #[error("roles must be a permutation of users 1, 2, 3")]
    InvalidRoles,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("plan references unknown message {0}")]
    UnknownMessage(MessageId),
    #[error("plan references bit {bit} of {message}, which has only {len} bits")]
    BitOutOfRange {
        message: MessageId,
        bit: u32,
        len: usize,
    },
    #[error("downlink level {0} is computed from uplink level {1}, which is not in the plan")]
    MissingSource(u32, u32),
    #[error("user {user} would read level {level}, outside its accessible range")]
    InaccessibleLevel { user: User, level: u32 },
    #[error("duplicate message {0} in the message set")]
    DuplicateMessage(MessageId),
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep of {requested} tuples exceeds the budget of {cap}")]
    BudgetExceeded { requested: u64, cap: u64 },
    #[error("sweep file: {0}")]
    Csv(#[from] csv::Error),
    #[error("sweep file row {row}: {msg}")]
    BadRow { row: usize, msg: String },
}
