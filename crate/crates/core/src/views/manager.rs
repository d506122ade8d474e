//! Autonomic managers: one view, one sync session, on-demand triggers.

use std::sync::RwLock;

use super::analysis::{
    analyze_performance, check_arch_constraints, detect_failures, propose_adaptation, AdaptError, Finding,
    ManagerConfig,
};
use super::catalog::{catalog, ViewKind};
use crate::model::{ChangeBatch, Model};
use crate::tgg::{SyncError, SyncReport, SyncSession};

/// Outcome of one trigger. `from..=to` is the consumed source range.
#[derive(Clone, Debug)]
pub struct Trigger {
    pub seq: u64,
    pub from: u64,
    pub to: u64,
    pub report: SyncReport,
}

/// Outcome of one adaptation: the view edit, the backward sync and the
/// source segment it wrote.
#[derive(Clone, Debug)]
pub struct Adaptation {
    pub view_batch: ChangeBatch,
    pub report: SyncReport,
    pub source_batch: ChangeBatch,
}

pub struct Manager {
    name: String,
    kind: ViewKind,
    config: ManagerConfig,
    session: SyncSession,
    sync_seq: u64,
}

impl Manager {
    /// Builds the initial view from the current source state.
    pub fn new(
        name: impl Into<String>,
        kind: ViewKind,
        config: ManagerConfig,
        source: &RwLock<Model>,
    ) -> Result<Self, SyncError> {
        let src = source.read().expect("source lock");
        let (session, _) = SyncSession::new(catalog().rules(kind).clone(), &src)?;
        Ok(Manager {
            name: name.into(),
            kind,
            config,
            session,
            sync_seq: 0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ViewKind {
        self.kind
    }

    pub fn config(&self) -> &ManagerConfig {
        &self.config
    }

    pub fn view(&self) -> &Model {
        self.session.target()
    }

    pub fn session(&self) -> &SyncSession {
        &self.session
    }

    pub fn sync_seq(&self) -> u64 {
        self.sync_seq
    }

    /// Consumes everything journaled since the last trigger as one batch.
    /// The source read lock is held for the whole sync, so the batch and
    /// the matched source state agree.
    pub fn trigger(&mut self, source: &RwLock<Model>) -> Result<Trigger, SyncError> {
        let src = source.read().expect("source lock");
        self.trigger_locked(&src)
    }

    fn trigger_locked(&mut self, src: &Model) -> Result<Trigger, SyncError> {
        let batch = src.snapshot(self.session.source_cursor())?;
        let report = self.session.sync_forward(src, &batch)?;
        self.sync_seq += 1;
        Ok(Trigger {
            seq: self.sync_seq,
            from: batch.from,
            to: batch.to,
            report,
        })
    }

    /// Findings over the view as of the last trigger. `now` is the
    /// logical time used by the failure window.
    pub fn analyze(&self, now: u64) -> Vec<Finding> {
        let view = self.session.target();
        let mut findings = match self.kind {
            ViewKind::Arch => check_arch_constraints(view, &self.config),
            ViewKind::Perf => analyze_performance(view, &self.config),
            ViewKind::Fail => detect_failures(view, &self.config, now),
        };
        for f in &mut findings {
            f.manager = self.name.clone();
            f.at_sync_seq = self.sync_seq;
        }
        findings
    }

    /// Applies the tactic for `finding` to the view and propagates it to
    /// `source`. The caller holds the source write lock, so the written
    /// segment is contiguous.
    pub fn adapt(&mut self, finding: &Finding, source: &mut Model) -> Result<Adaptation, AdaptError> {
        self.trigger_locked(source)?;
        let view_batch = propose_adaptation(finding, self.session.target_mut())?;
        let pending = self.session.pending_target_batch();
        let start = source.head_seq();
        let report = self.session.sync_backward(source, &pending)?;
        let source_batch = source.snapshot(start)?;
        debug_assert_eq!(report.segment.map_or(start, |(_, b)| b), source_batch.to);
        Ok(Adaptation {
            view_batch,
            report,
            source_batch,
        })
    }
}
