//! Triple graph grammars: rule sets, search plans, batch transformation
//! and incremental synchronisation.
//!
//! A [`RuleSet`] relates a source metamodel to a target metamodel through
//! correspondence types. [`transform_forward`] and [`transform_backward`]
//! derive one side from the other; a [`SyncSession`] keeps a derived view
//! up to date from journal batches and records every rule application in
//! its [`CorrespondenceModel`].

mod consistency;
mod corr;
mod engine;
mod expr;
mod matcher;
mod plan;
mod rule;
mod sync;
mod triple;

use thiserror::Error;

pub use consistency::{check as check_consistency, ConsistencyFinding, ConsistencyReport, FindingKind};
pub use corr::{AppDoc, AppId, CorrDoc, CorrNode, CorrespondenceModel, RuleApplication};
pub use engine::{transform_backward, transform_forward, SyncReport};
pub use expr::{parse_slot, Expr, Slot};
pub use matcher::{match_at, match_rule, Binding, Graphs, Touched};
pub use plan::{Lookup, SearchPlan, Step};
pub use rule::{
    AttributeConstraint, ConstraintDirection, ConstraintRole, CorrType, Direction, Directionality, Domain, ElementKind,
    Marking, PatternElement, RuleDoc, RuleSet, RuleSetDoc, TggRule,
};
pub use sync::SyncSession;
pub use triple::{mapped_projection, triple_model};

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("malformed rule set document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid rule set: {0}")]
    Invalid(String),
    #[error("rule `{rule}`, variable `{var}`: {message}")]
    IllFormed { rule: String, var: String, message: String },
    #[error("rule `{rule}`: uncoverable pattern in {direction} direction, `{var}` is unreachable")]
    Uncoverable { rule: String, direction: Direction, var: String },
    #[error("invalid correspondence document: {0}")]
    Correspondence(String),
}

#[derive(Debug, Error)]
pub enum SyncError {
    #[error("rule set `{0}` is forward-only")]
    ForwardOnly(String),
    #[error("batch belongs to model `{found}`, session expects `{expected}`")]
    ForeignBatch { expected: String, found: String },
    #[error("batch starts at {found}, session cursor is {expected}")]
    CursorMismatch { expected: u64, found: u64 },
    #[error("source has advanced to {head} beyond batch end {batch_end}")]
    StaleSource { batch_end: u64, head: u64 },
    #[error("session has consumed source up to {cursor} but source head is {head}")]
    SessionBehind { cursor: u64, head: u64 },
    #[error("model conforms to `{found}`, rule set expects `{expected}`")]
    MetaModelMismatch { expected: String, found: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[cfg(test)]
mod engine_tests;
