//! Long-lived synchronisation between one source model and one view.

use std::sync::Arc;

use super::consistency::{check, ConsistencyReport};
use super::corr::CorrespondenceModel;
use super::engine::{Engine, SyncReport};
use super::rule::{Direction, RuleSet};
use super::SyncError;
use crate::model::{ChangeBatch, Model};

/// Owns a target model and its correspondence to a source model that
/// lives elsewhere. Cursors only ever move forward.
#[derive(Debug)]
pub struct SyncSession {
    rules: Arc<RuleSet>,
    corr: CorrespondenceModel,
    target: Model,
    source_token: u64,
    source_id: String,
    source_cursor: u64,
    target_cursor: u64,
}

impl SyncSession {
    /// Starts a session by transforming `source` from scratch.
    pub fn new(rules: Arc<RuleSet>, source: &Model) -> Result<(Self, SyncReport), SyncError> {
        let mut target = Model::new(format!("{}-{}", source.id(), rules.target_meta.name()), rules.target_meta.clone());
        let mut corr = CorrespondenceModel::new();
        let report = Engine::new(&rules, Direction::Forward, source, &mut target, &mut corr)?.transform()?;
        let target_cursor = target.head_seq();
        Ok((
            SyncSession {
                rules,
                corr,
                target,
                source_token: source.token(),
                source_id: source.id().to_owned(),
                source_cursor: source.head_seq(),
                target_cursor,
            },
            report,
        ))
    }

    /// Resumes a session from persisted parts. Cursors start at the
    /// current heads.
    pub fn resume(rules: Arc<RuleSet>, source: &Model, target: Model, corr: CorrespondenceModel) -> Result<Self, SyncError> {
        if target.meta().name() != rules.target_meta.name() {
            return Err(SyncError::MetaModelMismatch {
                expected: rules.target_meta.name().to_owned(),
                found: target.meta().name().to_owned(),
            });
        }
        Ok(SyncSession {
            rules,
            corr,
            target_cursor: target.head_seq(),
            target,
            source_token: source.token(),
            source_id: source.id().to_owned(),
            source_cursor: source.head_seq(),
        })
    }

    pub fn rules(&self) -> &Arc<RuleSet> {
        &self.rules
    }

    pub fn target(&self) -> &Model {
        &self.target
    }

    /// Direct access for view edits that are later pushed back with
    /// [`SyncSession::sync_backward`].
    pub fn target_mut(&mut self) -> &mut Model {
        &mut self.target
    }

    pub fn corr(&self) -> &CorrespondenceModel {
        &self.corr
    }

    pub fn source_cursor(&self) -> u64 {
        self.source_cursor
    }

    pub fn target_cursor(&self) -> u64 {
        self.target_cursor
    }

    /// Unconsumed view edits since the last sync.
    pub fn pending_target_batch(&self) -> ChangeBatch {
        self.target.snapshot(self.target_cursor).expect("cursor within journal")
    }

    fn check_batch(&self, batch: &ChangeBatch, token: u64, id: &str, cursor: u64) -> Result<(), SyncError> {
        if batch.model_token != token {
            return Err(SyncError::ForeignBatch {
                expected: id.to_owned(),
                found: batch.model_id.clone(),
            });
        }
        if batch.from != cursor {
            return Err(SyncError::CursorMismatch {
                expected: cursor,
                found: batch.from,
            });
        }
        Ok(())
    }

    /// Applies a source batch to the view. `source` must be the state right
    /// after the batch.
    pub fn sync_forward(&mut self, source: &Model, batch: &ChangeBatch) -> Result<SyncReport, SyncError> {
        self.check_batch(batch, self.source_token, &self.source_id, self.source_cursor)?;
        if source.token() != self.source_token {
            return Err(SyncError::ForeignBatch {
                expected: self.source_id.clone(),
                found: source.id().to_owned(),
            });
        }
        if source.head_seq() != batch.to {
            return Err(SyncError::StaleSource {
                batch_end: batch.to,
                head: source.head_seq(),
            });
        }
        let contiguous = self.target_cursor == self.target.head_seq();
        let report = Engine::new(&self.rules, Direction::Forward, source, &mut self.target, &mut self.corr)?.sync(&batch.records)?;
        self.source_cursor = batch.to;
        if contiguous {
            self.target_cursor = self.target.head_seq();
        }
        Ok(report)
    }

    /// Pushes a batch of view edits into the source. The session must be
    /// caught up with `source`; all source mutations form one contiguous
    /// journal segment.
    pub fn sync_backward(&mut self, source: &mut Model, batch: &ChangeBatch) -> Result<SyncReport, SyncError> {
        if !self.rules.supports(Direction::Backward) {
            return Err(SyncError::ForwardOnly(self.rules.name.clone()));
        }
        self.check_batch(batch, self.target.token(), self.target.id(), self.target_cursor)?;
        if source.token() != self.source_token {
            return Err(SyncError::ForeignBatch {
                expected: self.source_id.clone(),
                found: source.id().to_owned(),
            });
        }
        if self.source_cursor != source.head_seq() {
            return Err(SyncError::SessionBehind {
                cursor: self.source_cursor,
                head: source.head_seq(),
            });
        }
        let report = Engine::new(&self.rules, Direction::Backward, &self.target, source, &mut self.corr)?.sync(&batch.records)?;
        self.target_cursor = batch.to;
        self.source_cursor = source.head_seq();
        Ok(report)
    }

    pub fn check_consistency(&self, source: &Model) -> ConsistencyReport {
        check(&self.rules, source, &self.target, &self.corr)
    }
}
