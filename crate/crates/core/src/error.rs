use thiserror::Error;

use crate::value::ValueKind;

/// Errors raised while building or evaluating constraint problems.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CspError {
    #[error("invalid decimal number {0:?}")]
    InvalidNumber(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("variable {0:?} is not assigned")]
    Unassigned(String),
    #[error("duplicate variable {0:?}")]
    DuplicateVariable(String),
    #[error("duplicate constraint id {0:?}")]
    DuplicateConstraint(String),
    #[error("variable {0:?} has an empty domain")]
    EmptyDomain(String),
    #[error("variable {var:?}: domain value {value} appears more than once")]
    DuplicateDomainValue { var: String, value: String },
    #[error("variable {var:?}: domain mixes numeric and categorical values")]
    MixedDomain { var: String },
    #[error("operator {op} needs numeric operands but {var:?} is {kind}")]
    TypeMismatch { var: String, op: String, kind: ValueKind },
    #[error("value {value} is {found} but variable {var:?} is {expected}")]
    ValueKindMismatch {
        var: String,
        value: String,
        expected: ValueKind,
        found: ValueKind,
    },
    #[error("table row {row} has {found} values, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("table row {row}: value {value} is outside the domain of {var:?}")]
    ValueOutsideDomain { row: usize, var: String, value: String },
    #[error("malformed constraint: {0}")]
    Malformed(String),
}
