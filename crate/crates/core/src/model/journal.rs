use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::graph::{Edge, ElementId, Node};
use super::value::Value;
use super::ModelError;

/// One journaled mutation. Deletions carry a full snapshot of the element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Change {
    NodeCreated { node: Node },
    NodeDeleted { node: Node },
    EdgeCreated { edge: Edge },
    EdgeDeleted { edge: Edge },
    AttributeSet {
        id: ElementId,
        name: String,
        old: Value,
        new: Value,
    },
}

impl Change {
    /// Id of the element the change is about.
    pub fn element(&self) -> ElementId {
        match self {
            Change::NodeCreated { node } | Change::NodeDeleted { node } => node.id,
            Change::EdgeCreated { edge } | Change::EdgeDeleted { edge } => edge.id,
            Change::AttributeSet { id, .. } => *id,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Change::NodeCreated { .. } => "node-created",
            Change::NodeDeleted { .. } => "node-deleted",
            Change::EdgeCreated { .. } => "edge-created",
            Change::EdgeDeleted { .. } => "edge-deleted",
            Change::AttributeSet { .. } => "attribute-set",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeRecord {
    pub seq: u64,
    #[serde(flatten)]
    pub change: Change,
}

/// Append-only mutation log. Sequence numbers start at 1 and have no gaps.
#[derive(Clone, Debug, Default)]
pub struct ChangeJournal {
    records: Vec<ChangeRecord>,
}

impl ChangeJournal {
    pub fn records(&self) -> &[ChangeRecord] {
        &self.records
    }

    /// Sequence number of the last record, 0 for an empty journal.
    pub fn head(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn next_seq(&self) -> u64 {
        self.head() + 1
    }

    pub(crate) fn append(&mut self, change: Change) -> ChangeRecord {
        let record = ChangeRecord {
            seq: self.next_seq(),
            change,
        };
        self.records.push(record.clone());
        record
    }

    pub(crate) fn since(&self, cursor: u64) -> Result<&[ChangeRecord], ModelError> {
        if cursor > self.next_seq() {
            return Err(ModelError::CursorOutOfRange {
                cursor,
                next_seq: self.next_seq(),
            });
        }
        let start = (cursor as usize).min(self.records.len());
        Ok(&self.records[start..])
    }
}

/// An immutable slice of a model's journal: every record with
/// `from < seq <= to`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChangeBatch {
    pub model_token: u64,
    pub model_id: String,
    pub from: u64,
    pub to: u64,
    pub records: Arc<[ChangeRecord]>,
}

impl ChangeBatch {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// The new cursor after consuming this batch.
    pub fn cursor(&self) -> u64 {
        self.to
    }
}
