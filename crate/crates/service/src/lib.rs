//! Session service for interactive counterfactual configuration.
//!
//! A client registers a catalog, opens a session over it, and posts user
//! constraints one at a time. After every change the session is
//! re-evaluated: a satisfiable request returns matching items, an
//! over-constrained one returns the counterfactual explanation, which the
//! client can apply back to the session.

pub mod error;
pub mod http;
pub mod store;

pub use error::ServiceError;
pub use http::{router, serve};
pub use store::{
    ApplyRequest, CatalogInfo, CatalogUpload, ConstraintKind, CreateSession, OutcomeView, PostConstraint,
    SessionSnapshot, SessionStore, SessionView, SolutionsView, SubstitutionRequest, TraceView, DEFAULT_SOLUTION_LIMIT,
};
