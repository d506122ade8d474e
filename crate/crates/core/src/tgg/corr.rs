//! The correspondence graph and rule application bookkeeping.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::rule::{Direction, Domain, RuleSet};
use super::RuleError;
use crate::model::ElementId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AppId(pub u64);

impl fmt::Display for AppId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "app{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrNode {
    pub id: ElementId,
    #[serde(rename = "type")]
    pub ty: String,
    pub source: ElementId,
    pub target: ElementId,
    pub app: AppId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleApplication {
    pub id: AppId,
    pub rule: String,
    pub direction: Direction,
    /// Indexed by rule variable; every variable is bound once applied.
    pub binding: Vec<ElementId>,
    pub created_source: Vec<ElementId>,
    pub created_target: Vec<ElementId>,
    pub created_corr: Vec<ElementId>,
    pub depends_on: BTreeSet<AppId>,
}

impl RuleApplication {
    pub fn created(&self, domain: Domain) -> &[ElementId] {
        match domain {
            Domain::Source => &self.created_source,
            Domain::Target => &self.created_target,
            Domain::Corr => &self.created_corr,
        }
    }
}

/// Correspondence nodes plus the applications that produced them.
#[derive(Clone, Debug, Default)]
pub struct CorrespondenceModel {
    nodes: BTreeMap<ElementId, CorrNode>,
    by_source: HashMap<ElementId, BTreeSet<ElementId>>,
    by_target: HashMap<ElementId, BTreeSet<ElementId>>,
    apps: BTreeMap<AppId, RuleApplication>,
    creator: HashMap<(Domain, ElementId), AppId>,
    users: HashMap<(Domain, ElementId), BTreeSet<AppId>>,
    dependents: HashMap<AppId, BTreeSet<AppId>>,
    context_keys: HashMap<(String, Vec<ElementId>), AppId>,
    key_of: HashMap<AppId, (String, Vec<ElementId>)>,
    next_node: u64,
    next_app: u64,
}

impl CorrespondenceModel {
    pub fn new() -> Self {
        CorrespondenceModel {
            next_node: 1,
            next_app: 1,
            ..Default::default()
        }
    }

    pub fn node(&self, id: ElementId) -> Option<&CorrNode> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &CorrNode> + '_ {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn of_source(&self, id: ElementId) -> impl Iterator<Item = &CorrNode> + '_ {
        self.by_source.get(&id).into_iter().flatten().map(|c| &self.nodes[c])
    }

    pub fn of_target(&self, id: ElementId) -> impl Iterator<Item = &CorrNode> + '_ {
        self.by_target.get(&id).into_iter().flatten().map(|c| &self.nodes[c])
    }

    pub fn application(&self, id: AppId) -> Option<&RuleApplication> {
        self.apps.get(&id)
    }

    pub fn applications(&self) -> impl Iterator<Item = &RuleApplication> + '_ {
        self.apps.values()
    }

    pub fn application_count(&self) -> usize {
        self.apps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apps.is_empty()
    }

    /// The application that created `id` in `domain`, if any.
    pub fn creator(&self, domain: Domain, id: ElementId) -> Option<AppId> {
        self.creator.get(&(domain, id)).copied()
    }

    pub fn is_covered(&self, domain: Domain, id: ElementId) -> bool {
        self.creator.contains_key(&(domain, id))
    }

    /// Applications whose binding contains `id`.
    pub fn users(&self, domain: Domain, id: ElementId) -> impl Iterator<Item = AppId> + '_ {
        self.users.get(&(domain, id)).into_iter().flatten().copied()
    }

    pub fn dependents(&self, app: AppId) -> impl Iterator<Item = AppId> + '_ {
        self.dependents.get(&app).into_iter().flatten().copied()
    }

    pub fn context_key_used(&self, rule: &str, key: &[ElementId]) -> bool {
        self.context_keys.contains_key(&(rule.to_owned(), key.to_vec()))
    }

    pub(crate) fn next_corr_id(&mut self) -> ElementId {
        let id = ElementId(self.next_node);
        self.next_node += 1;
        id
    }

    pub(crate) fn next_app_id(&mut self) -> AppId {
        let id = AppId(self.next_app);
        self.next_app += 1;
        id
    }

    pub(crate) fn insert_corr(&mut self, node: CorrNode) {
        self.next_node = self.next_node.max(node.id.0 + 1);
        self.by_source.entry(node.source).or_default().insert(node.id);
        self.by_target.entry(node.target).or_default().insert(node.id);
        self.nodes.insert(node.id, node);
    }

    pub(crate) fn remove_corr(&mut self, id: ElementId) -> Option<CorrNode> {
        let node = self.nodes.remove(&id)?;
        for (index, key) in [(&mut self.by_source, node.source), (&mut self.by_target, node.target)] {
            if let Some(set) = index.get_mut(&key) {
                set.remove(&id);
                if set.is_empty() {
                    index.remove(&key);
                }
            }
        }
        Some(node)
    }

    /// Registers an application whose corr nodes are already inserted.
    /// `domains[v]` is the domain of rule variable `v`; `context_key` is
    /// set for materialising rules.
    pub(crate) fn register(&mut self, app: RuleApplication, domains: &[Domain], context_key: Option<Vec<ElementId>>) {
        self.next_app = self.next_app.max(app.id.0 + 1);
        for d in [Domain::Source, Domain::Target, Domain::Corr] {
            for &id in app.created(d) {
                let prev = self.creator.insert((d, id), app.id);
                debug_assert!(prev.is_none(), "{d:?} {id} created twice");
            }
        }
        for (v, &id) in app.binding.iter().enumerate() {
            self.users.entry((domains[v], id)).or_default().insert(app.id);
        }
        for &dep in &app.depends_on {
            self.dependents.entry(dep).or_default().insert(app.id);
        }
        if let Some(key) = context_key {
            self.context_keys.insert((app.rule.clone(), key.clone()), app.id);
            self.key_of.insert(app.id, (app.rule.clone(), key));
        }
        self.apps.insert(app.id, app);
    }

    /// Removes an application and its corr nodes from every index.
    pub(crate) fn unregister(&mut self, id: AppId, domains: &[Domain]) -> Option<RuleApplication> {
        let app = self.apps.remove(&id)?;
        for &c in &app.created_corr {
            self.remove_corr(c);
        }
        for d in [Domain::Source, Domain::Target, Domain::Corr] {
            for &e in app.created(d) {
                if self.creator.get(&(d, e)) == Some(&id) {
                    self.creator.remove(&(d, e));
                }
            }
        }
        for (v, &e) in app.binding.iter().enumerate() {
            let key = (domains[v], e);
            if let Some(set) = self.users.get_mut(&key) {
                set.remove(&id);
                if set.is_empty() {
                    self.users.remove(&key);
                }
            }
        }
        for dep in &app.depends_on {
            if let Some(set) = self.dependents.get_mut(dep) {
                set.remove(&id);
                if set.is_empty() {
                    self.dependents.remove(dep);
                }
            }
        }
        self.dependents.remove(&id);
        if let Some(key) = self.key_of.remove(&id) {
            self.context_keys.remove(&key);
        }
        Some(app)
    }

    pub fn to_doc(&self, rules: &RuleSet) -> CorrDoc {
        CorrDoc {
            rule_set: rules.name.clone(),
            corr_nodes: self.nodes.values().cloned().collect(),
            applications: self
                .apps
                .values()
                .map(|a| {
                    let rule = rules.rule(&a.rule).expect("application of a known rule");
                    AppDoc {
                        id: a.id,
                        rule: a.rule.clone(),
                        direction: a.direction,
                        binding: rule
                            .elements
                            .iter()
                            .zip(&a.binding)
                            .map(|(e, id)| (e.var.clone(), *id))
                            .collect(),
                        created_source: a.created_source.clone(),
                        created_target: a.created_target.clone(),
                        created_corr: a.created_corr.clone(),
                        depends_on: a.depends_on.iter().copied().collect(),
                    }
                })
                .collect(),
        }
    }

    pub fn to_json(&self, rules: &RuleSet) -> String {
        serde_json::to_string_pretty(&self.to_doc(rules)).expect("correspondence model serializes")
    }

    pub fn from_json(text: &str, rules: &RuleSet) -> Result<Self, RuleError> {
        let doc: CorrDoc = serde_json::from_str(text)?;
        Self::from_doc(doc, rules)
    }

    pub fn from_doc(doc: CorrDoc, rules: &RuleSet) -> Result<Self, RuleError> {
        let bad = |m: String| RuleError::Correspondence(m);
        if doc.rule_set != rules.name {
            return Err(bad(format!("document belongs to rule set `{}`, not `{}`", doc.rule_set, rules.name)));
        }
        let mut corr = CorrespondenceModel::new();
        for n in doc.corr_nodes {
            if corr.nodes.contains_key(&n.id) {
                return Err(bad(format!("duplicate correspondence node {}", n.id)));
            }
            corr.insert_corr(n);
        }
        for a in doc.applications {
            let rule = rules
                .rule(&a.rule)
                .ok_or_else(|| bad(format!("{} applies unknown rule `{}`", a.id, a.rule)))?;
            let mut binding = Vec::with_capacity(rule.elements.len());
            for e in &rule.elements {
                let id = a
                    .binding
                    .get(&e.var)
                    .ok_or_else(|| bad(format!("{} does not bind `{}`", a.id, e.var)))?;
                binding.push(*id);
            }
            if a.binding.len() != binding.len() {
                return Err(bad(format!("{} binds variables unknown to `{}`", a.id, a.rule)));
            }
            let domains: Vec<Domain> = rule.elements.iter().map(|e| e.domain).collect();
            let key = rule.is_materializing(a.direction).then(|| {
                rule.context_vars().map(|v| binding[v]).collect()
            });
            if corr.apps.contains_key(&a.id) {
                return Err(bad(format!("duplicate application {}", a.id)));
            }
            corr.register(
                RuleApplication {
                    id: a.id,
                    rule: a.rule,
                    direction: a.direction,
                    binding,
                    created_source: a.created_source,
                    created_target: a.created_target,
                    created_corr: a.created_corr,
                    depends_on: a.depends_on.into_iter().collect(),
                },
                &domains,
                key,
            );
        }
        for n in corr.nodes.values() {
            if !corr.apps.contains_key(&n.app) {
                return Err(bad(format!("correspondence node {} names unknown application {}", n.id, n.app)));
            }
        }
        Ok(corr)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorrDoc {
    pub rule_set: String,
    pub corr_nodes: Vec<CorrNode>,
    pub applications: Vec<AppDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AppDoc {
    pub id: AppId,
    pub rule: String,
    pub direction: Direction,
    pub binding: BTreeMap<String, ElementId>,
    pub created_source: Vec<ElementId>,
    pub created_target: Vec<ElementId>,
    pub created_corr: Vec<ElementId>,
    pub depends_on: Vec<AppId>,
}
