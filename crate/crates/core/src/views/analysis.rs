//! Read-only analyses over the three views, and the single adaptation
//! tactic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ChangeBatch, ElementId, Model, ModelError, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArchConstraint {
    #[serde(rename = "no-dangling-required-port", alias = "C1")]
    NoDanglingRequiredPort,
    #[serde(rename = "acyclic-connectors", alias = "C2")]
    AcyclicConnectors,
}

impl ArchConstraint {
    pub fn label(self) -> &'static str {
        match self {
            ArchConstraint::NoDanglingRequiredPort => "C1",
            ArchConstraint::AcyclicConnectors => "C2",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ManagerConfig {
    pub perf_threshold_ms: f64,
    pub failure_window_ms: u64,
    pub failure_count_threshold: u32,
    pub constraints: BTreeSet<ArchConstraint>,
}

impl Default for ManagerConfig {
    fn default() -> Self {
        ManagerConfig {
            perf_threshold_ms: 100.0,
            failure_window_ms: 1000,
            failure_count_threshold: 3,
            constraints: BTreeSet::from([ArchConstraint::NoDanglingRequiredPort, ArchConstraint::AcyclicConnectors]),
        }
    }
}

impl ManagerConfig {
    pub fn check(&self) -> Result<(), String> {
        if !(self.perf_threshold_ms > 0.0 && self.perf_threshold_ms.is_finite()) {
            return Err(format!("perfThresholdMs must be positive, got {}", self.perf_threshold_ms));
        }
        if self.failure_window_ms == 0 {
            return Err("failureWindowMs must be positive".into());
        }
        if self.failure_count_threshold == 0 {
            return Err("failureCountThreshold must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Violation,
}

/// What a finding is about; not part of the exported record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FindingCode {
    Arch(ArchConstraint),
    SlowComponent,
    FailureBurst,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Finding {
    pub manager: String,
    pub severity: Severity,
    pub subjects: Vec<ElementId>,
    pub message: String,
    pub at_sync_seq: u64,
    #[serde(skip)]
    pub code: FindingCode,
}

impl Finding {
    fn new(code: FindingCode, severity: Severity, subjects: Vec<ElementId>, message: String) -> Self {
        Finding {
            manager: String::new(),
            severity,
            subjects,
            message,
            at_sync_seq: 0,
            code,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("finding serializes")
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}] {}: {}", self.severity, self.manager, self.message)
    }
}

fn text(view: &Model, id: ElementId, attr: &str) -> String {
    view.attr(id, attr).and_then(Value::as_str).unwrap_or_default().to_string()
}

fn sorted(mut findings: Vec<Finding>) -> Vec<Finding> {
    findings.sort_by(|a, b| a.subjects.cmp(&b.subjects).then_with(|| a.message.cmp(&b.message)));
    findings
}

/// Component-level connector graph: `(from component, to component,
/// connector)` for every connector with both ends attached.
fn connector_arcs(view: &Model) -> Vec<(ElementId, ElementId, ElementId)> {
    view.nodes()
        .filter(|n| n.ty == "Connector")
        .filter_map(|cn| {
            let end = |ty: &str| {
                let port = view.out_edges(cn.id).find(|e| e.ty == ty)?.dst;
                view.container_of(port)
            };
            Some((end("from")?, end("to")?, cn.id))
        })
        .collect()
}

/// Every elementary cycle, each starting at its smallest component id.
fn elementary_cycles(arcs: &[(ElementId, ElementId, ElementId)]) -> Vec<Vec<ElementId>> {
    let mut adj: BTreeMap<ElementId, BTreeSet<ElementId>> = BTreeMap::new();
    for &(a, b, _) in arcs {
        adj.entry(a).or_default().insert(b);
    }
    let mut cycles = Vec::new();
    for &start in adj.keys() {
        let mut path = vec![start];
        extend(&adj, start, &mut path, &mut cycles);
    }
    cycles
}

fn extend(
    adj: &BTreeMap<ElementId, BTreeSet<ElementId>>,
    start: ElementId,
    path: &mut Vec<ElementId>,
    out: &mut Vec<Vec<ElementId>>,
) {
    let last = *path.last().unwrap();
    for &next in adj.get(&last).into_iter().flatten() {
        if next == start {
            out.push(path.clone());
        } else if next > start && !path.contains(&next) {
            path.push(next);
            extend(adj, start, path, out);
            path.pop();
        }
    }
}

/// C1 and C2 over an architecture view.
pub fn check_arch_constraints(view: &Model, config: &ManagerConfig) -> Vec<Finding> {
    let mut out = Vec::new();
    if config.constraints.contains(&ArchConstraint::NoDanglingRequiredPort) {
        for p in view.nodes().filter(|n| n.ty == "Port") {
            if p.attr("direction").and_then(Value::as_str) != Some("required") {
                continue;
            }
            if view.in_edges(p.id).any(|e| e.ty == "from") {
                continue;
            }
            let owner = view.container_of(p.id).map(|c| text(view, c, "name")).unwrap_or_default();
            out.push(Finding::new(
                FindingCode::Arch(ArchConstraint::NoDanglingRequiredPort),
                Severity::Violation,
                vec![p.id],
                format!(
                    "C1: required port `{}` of component `{owner}` has no connector",
                    text(view, p.id, "interfaceName")
                ),
            ));
        }
    }
    if config.constraints.contains(&ArchConstraint::AcyclicConnectors) {
        for cycle in elementary_cycles(&connector_arcs(view)) {
            let names: Vec<String> = cycle.iter().chain(&cycle[..1]).map(|&c| text(view, c, "name")).collect();
            out.push(Finding::new(
                FindingCode::Arch(ArchConstraint::AcyclicConnectors),
                Severity::Violation,
                cycle,
                format!("C2: connector cycle {}", names.join(" -> ")),
            ));
        }
    }
    sorted(out)
}

/// A warning per component whose average response time strictly exceeds
/// the threshold. Components never invoked are skipped.
pub fn analyze_performance(view: &Model, config: &ManagerConfig) -> Vec<Finding> {
    let out = view
        .nodes()
        .filter(|n| n.ty == "PerfComponent")
        .filter_map(|n| {
            let calls = n.attr("invocationCount").and_then(Value::as_i64).unwrap_or(0);
            let avg = n.attr("avgResponseTimeMs").and_then(Value::as_f64).unwrap_or(0.0);
            (calls > 0 && avg > config.perf_threshold_ms).then(|| {
                Finding::new(
                    FindingCode::SlowComponent,
                    Severity::Warning,
                    vec![n.id],
                    format!(
                        "component `{}` averages {avg} ms over {calls} call(s), threshold {} ms",
                        text(view, n.id, "name"),
                        config.perf_threshold_ms
                    ),
                )
            })
        })
        .collect();
    sorted(out)
}

/// A violation per unit with at least `failureCountThreshold` events in
/// the half-open window `(now - failureWindowMs, now]`.
pub fn detect_failures(view: &Model, config: &ManagerConfig, now: u64) -> Vec<Finding> {
    let hi = now as i128;
    let lo = hi - config.failure_window_ms as i128;
    let out = view
        .nodes()
        .filter(|n| n.ty == "FaultyUnit")
        .filter_map(|u| {
            let recent = view
                .out_edges(u.id)
                .filter(|e| view.type_of(e.dst) == Some("FailureEvent"))
                .filter_map(|e| view.attr(e.dst, "atMs").and_then(Value::as_i64))
                .filter(|&t| lo < t as i128 && t as i128 <= hi)
                .count();
            (recent >= config.failure_count_threshold as usize).then(|| {
                Finding::new(
                    FindingCode::FailureBurst,
                    Severity::Violation,
                    vec![u.id],
                    format!(
                        "unit `{}` failed {recent} time(s) in ({lo}, {hi}] ms",
                        text(view, u.id, "name")
                    ),
                )
            })
        })
        .collect();
    sorted(out)
}

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("no adaptation tactic for this finding ({0})")]
    UnsupportedKind(String),
    #[error("finding no longer matches the view: {0}")]
    Stale(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sync(#[from] crate::tgg::SyncError),
}

/// Breaks a connector cycle by deleting the connector with the smallest
/// `(from component name, to component name)` pair on the cycle. Returns
/// the view's change batch.
pub fn propose_adaptation(finding: &Finding, view: &mut Model) -> Result<ChangeBatch, AdaptError> {
    if finding.code != FindingCode::Arch(ArchConstraint::AcyclicConnectors) {
        return Err(AdaptError::UnsupportedKind(finding.message.clone()));
    }
    let cycle = &finding.subjects;
    let on_cycle: BTreeSet<(ElementId, ElementId)> = (0..cycle.len())
        .map(|i| (cycle[i], cycle[(i + 1) % cycle.len()]))
        .collect();
    let victim = connector_arcs(view)
        .into_iter()
        .filter(|(a, b, _)| on_cycle.contains(&(*a, *b)))
        .map(|(a, b, cn)| (text(view, a, "name"), text(view, b, "name"), cn))
        .min()
        .ok_or_else(|| AdaptError::Stale(finding.message.clone()))?;
    let cursor = view.head_seq();
    view.delete_node(victim.2)?;
    Ok(view.snapshot(cursor)?)
}
