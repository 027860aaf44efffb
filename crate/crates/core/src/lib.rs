//! Counterfactual explanations for over-constrained finite-domain problems.

pub mod catalog;
pub mod csp;
pub mod error;
pub mod explain;
pub mod relaxation;
pub mod report;
pub mod value;

pub use catalog::{
    assemble_problem, assemble_problem_unvalidated, load_catalog, load_problem_file, Assembled, Catalog, CatalogError,
    CatalogFormat, ConstraintDescriptor, ProblemSpec, SpaceDescriptor,
};
pub use csp::{
    eval_constraint, is_consistent, solve, Assignment, Body, CompareOp, Constraint, Problem, Role, Variable,
};
pub use error::CspError;
pub use explain::{
    brute_force_relaxation_oracle, counterfactual_xplain, maximal_relaxation, minimal_conflict, render_explanation,
    ExplainError, Explained, Explanation, ExplanationEntry, Outcome, RenderFormat, Spaces, Substitution, Trace,
    TraceRecord,
};
pub use relaxation::{
    build_chain_space, build_membership_space, build_operator_space, validate_space, Direction, RelaxationSpace,
    RelaxationState, SpaceError, Violation,
};
pub use report::{OutcomeReport, TraceEntry};
pub use value::{AttributeValue, Decimal, ValueKind};
