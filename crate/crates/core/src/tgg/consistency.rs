//! Read-only audit of a triple against its rule applications.

use std::collections::HashMap;

use serde::Serialize;

use super::corr::{AppId, CorrespondenceModel};
use super::matcher::{constraint_holds, Graphs};
use super::rule::{Domain, ElementKind, RuleSet};
use crate::model::{ElementId, Model};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    MissingElement,
    TypeMismatch,
    AttributeConstraint,
    CorrLink,
    DuplicateCoverage,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConsistencyFinding {
    pub application: AppId,
    pub rule: String,
    pub kind: FindingKind,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub findings: Vec<ConsistencyFinding>,
}

impl ConsistencyReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Verifies every application's binding, links and attribute constraints,
/// and that no element is created by two applications.
pub fn check(rules: &RuleSet, source: &Model, target: &Model, corr: &CorrespondenceModel) -> ConsistencyReport {
    let g = Graphs { source, target, corr };
    let mut findings = Vec::new();
    let mut creators: HashMap<(Domain, ElementId), AppId> = HashMap::new();

    for app in corr.applications() {
        let mut push = |kind, detail: String| {
            findings.push(ConsistencyFinding {
                application: app.id,
                rule: app.rule.clone(),
                kind,
                detail,
            })
        };
        for d in [Domain::Source, Domain::Target, Domain::Corr] {
            for &id in app.created(d) {
                if let Some(other) = creators.insert((d, id), app.id) {
                    push(
                        FindingKind::DuplicateCoverage,
                        format!("{} element {id} is also created by {other}", format!("{d:?}").to_lowercase()),
                    );
                }
            }
        }
        let Some(rule) = rules.rule(&app.rule) else {
            push(FindingKind::TypeMismatch, format!("unknown rule `{}`", app.rule));
            continue;
        };
        if app.binding.len() != rule.elements.len() {
            push(FindingKind::TypeMismatch, "binding does not match rule variables".into());
            continue;
        }
        let mut intact = true;
        for (e, &id) in rule.elements.iter().zip(&app.binding) {
            let exists = match (e.domain, e.kind) {
                (Domain::Corr, _) => corr.node(id).is_some(),
                (d, ElementKind::Node) => g.model(d).unwrap().node(id).is_some(),
                (d, ElementKind::Edge) => g.model(d).unwrap().edge(id).is_some(),
            };
            if !exists {
                let what = if e.is_created() { "created" } else { "context" };
                push(FindingKind::MissingElement, format!("{what} element `{}` ({id}) no longer exists", e.var));
                intact = false;
            } else if !g.fits(e.domain, e.kind, &e.ty, id) {
                push(FindingKind::TypeMismatch, format!("`{}` ({id}) is not a `{}`", e.var, e.ty));
                intact = false;
            }
        }
        if !intact {
            continue;
        }
        for (v, e) in rule.elements.iter().enumerate() {
            let (Some(s), Some(t)) = (e.src, e.dst) else { continue };
            let id = app.binding[v];
            let (bs, bt) = (app.binding[s], app.binding[t]);
            match e.domain {
                Domain::Corr => {
                    let n = corr.node(id).unwrap();
                    if n.source != bs || n.target != bt || (e.is_created() && n.app != app.id) {
                        push(
                            FindingKind::CorrLink,
                            format!("`{}` ({id}) no longer links `{}` and `{}`", e.var, rule.elements[s].var, rule.elements[t].var),
                        );
                    }
                }
                d => {
                    let x = g.model(d).unwrap().edge(id).unwrap();
                    if x.src != bs || x.dst != bt {
                        push(FindingKind::TypeMismatch, format!("edge `{}` ({id}) changed endpoints", e.var));
                    }
                }
            }
        }
        for (ci, c) in rule.constraints.iter().enumerate() {
            if !constraint_holds(rule, ci, &g, |v| Some(app.binding[v])) {
                push(FindingKind::AttributeConstraint, format!("attribute constraint violated at `{}`", rule.slot_name(&c.slot)));
            }
        }
    }
    findings.sort_by(|a, b| (a.application, a.kind, &a.detail).cmp(&(b.application, b.kind, &b.detail)));
    ConsistencyReport { findings }
}
