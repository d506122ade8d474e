//! Typed attributed graph models.
//!
//! A [`Model`] is a set of typed nodes and edges conforming to a
//! [`MetaModel`]. All mutations go through [`Model::apply_change`], which
//! keeps the model conformant (except for lower multiplicity bounds, which
//! only [`validate`] reports) and appends fine-grained records to the
//! model's [`ChangeJournal`].

mod conformance;
mod digest;
mod graph;
mod io;
mod iso;
mod journal;
mod meta;
mod value;

use thiserror::Error;

pub use conformance::{validate, ConformanceReport, Finding as ConformanceFinding};
pub use digest::digest;
pub use graph::{ChangeRequest, Edge, ElementId, Model, Node};
pub use io::{ModelDoc, NodeDoc, EdgeDoc};
pub use iso::{isomorphic, Witness};
pub use journal::{Change, ChangeBatch, ChangeJournal, ChangeRecord};
pub use meta::{AttributeDecl, EdgeType, MetaModel, MetaModelDoc, NodeType, Upper};
pub use value::{Value, ValueKind};

#[derive(Debug, Error)]
pub enum MetaModelError {
    #[error("malformed metamodel document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate node type `{0}`")]
    DuplicateNodeType(String),
    #[error("duplicate edge type `{0}`")]
    DuplicateEdgeType(String),
    #[error("node type `{node_type}` names unknown supertype `{supertype}`")]
    UnknownSupertype { node_type: String, supertype: String },
    #[error("supertype cycle through `{0}`")]
    SupertypeCycle(String),
    #[error("node type `{node_type}` declares attribute `{attribute}` more than once after flattening")]
    DuplicateAttribute { node_type: String, attribute: String },
    #[error("edge type `{edge_type}` references unknown node type `{node_type}`")]
    DanglingEdgeEndpoint { edge_type: String, node_type: String },
    #[error("edge type `{0}` has lower bound above upper bound")]
    InvalidBounds(String),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown element {0}")]
    UnknownElement(ElementId),
    #[error("type violation: {0}")]
    TypeViolation(String),
    #[error("multiplicity violation: node {node} already has {count} outgoing `{edge_type}` edge(s), upper bound {upper}")]
    Multiplicity {
        node: ElementId,
        edge_type: String,
        count: usize,
        upper: Upper,
    },
    #[error("containment violation: {0}")]
    Containment(String),
    #[error("journal cursor {cursor} is beyond next sequence number {next_seq}")]
    CursorOutOfRange { cursor: u64, next_seq: u64 },
    #[error("models conform to different metamodels (`{0}` vs `{1}`)")]
    MetaModelMismatch(String, String),
    #[error("malformed model document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid model document: {0}")]
    Document(String),
}
