//! Rule application, revocation and the deterministic work queue shared by
//! batch transformation and incremental synchronisation.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;

use super::corr::{AppId, CorrNode, CorrespondenceModel, RuleApplication};
use super::matcher::{constraint_holds, match_at, Binding, Graphs, Touched};
use super::rule::{ConstraintRole, Direction, Domain, ElementKind, RuleSet, TggRule};
use super::SyncError;
use crate::model::{Change, ChangeRecord, ElementId, Model, Value};

/// Outcome of one transformation or synchronisation call.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SyncReport {
    pub direction: Option<Direction>,
    pub added: Vec<AppId>,
    pub revoked: Vec<AppId>,
    pub created: usize,
    pub deleted: usize,
    pub attributes_updated: usize,
    pub uncovered: Vec<ElementId>,
    pub touched: usize,
    /// Journal range `(first, last)` written to the output model.
    pub segment: Option<(u64, u64)>,
}

impl SyncReport {
    pub fn is_noop(&self) -> bool {
        self.added.is_empty()
            && self.revoked.is_empty()
            && self.created == 0
            && self.deleted == 0
            && self.attributes_updated == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    rule: usize,
    created: Vec<ElementId>,
    binding: Binding,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum AnchorAt {
    CreatedInput,
    Context,
    /// Every matched variable of rules with check constraints.
    Checked,
}

fn graphs_of<'x>(dir: Direction, input: &'x Model, output: &'x Model, corr: &'x CorrespondenceModel) -> Graphs<'x> {
    match dir {
        Direction::Forward => Graphs {
            source: input,
            target: output,
            corr,
        },
        Direction::Backward => Graphs {
            source: output,
            target: input,
            corr,
        },
    }
}

pub(crate) struct Engine<'a> {
    rules: &'a RuleSet,
    dir: Direction,
    input: &'a Model,
    output: &'a mut Model,
    corr: &'a mut CorrespondenceModel,
    touched: Touched,
    queue: BTreeSet<Candidate>,
    added: Vec<AppId>,
    revoked: Vec<AppId>,
    has_check: Vec<bool>,
    domains: Vec<Vec<Domain>>,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(
        rules: &'a RuleSet,
        dir: Direction,
        input: &'a Model,
        output: &'a mut Model,
        corr: &'a mut CorrespondenceModel,
    ) -> Result<Self, SyncError> {
        if !rules.supports(dir) {
            return Err(SyncError::ForwardOnly(rules.name.clone()));
        }
        let (in_meta, out_meta) = match dir {
            Direction::Forward => (&rules.source_meta, &rules.target_meta),
            Direction::Backward => (&rules.target_meta, &rules.source_meta),
        };
        for (m, meta) in [(input, in_meta), (&*output, out_meta)] {
            if m.meta().name() != meta.name() {
                return Err(SyncError::MetaModelMismatch {
                    expected: meta.name().to_owned(),
                    found: m.meta().name().to_owned(),
                });
            }
        }
        let has_check = rules
            .rules
            .iter()
            .map(|r| r.constraints.iter().any(|c| r.role(c, dir) == ConstraintRole::Check))
            .collect();
        let domains = rules
            .rules
            .iter()
            .map(|r| r.elements.iter().map(|e| e.domain).collect())
            .collect();
        Ok(Engine {
            rules,
            dir,
            input,
            output,
            corr,
            touched: Touched::default(),
            queue: BTreeSet::new(),
            added: Vec::new(),
            revoked: Vec::new(),
            has_check,
            domains,
        })
    }

    fn graphs(&self) -> Graphs<'_> {
        graphs_of(self.dir, self.input, self.output, self.corr)
    }

    fn input_domain(&self) -> Domain {
        self.dir.input()
    }

    fn output_domain(&self) -> Domain {
        self.dir.output()
    }

    /// Queues every candidate that binds `id` (of `domain`) at a variable
    /// selected by `at`.
    fn discover(&mut self, domain: Domain, id: ElementId, at: AnchorAt) {
        let rules = self.rules;
        for (ri, rule) in rules.rules.iter().enumerate() {
            if at == AnchorAt::Checked && !self.has_check[ri] {
                continue;
            }
            for v in rule.matched_vars(self.dir) {
                let e = &rule.elements[v];
                if e.domain != domain {
                    continue;
                }
                let wanted = match at {
                    AnchorAt::CreatedInput => e.is_created(),
                    AnchorAt::Context => !e.is_created(),
                    AnchorAt::Checked => true,
                };
                if !wanted {
                    continue;
                }
                if self.graphs().fits(domain, e.kind, &e.ty, id) {
                    self.discover_rule(ri, v, id);
                }
            }
        }
    }

    fn context_key(rule: &TggRule, binding: &Binding) -> Vec<ElementId> {
        rule.context_vars().map(|v| binding[v].unwrap()).collect()
    }

    /// Re-checks a queued candidate against the current state.
    fn still_admissible(&self, c: &Candidate) -> bool {
        let rule = &self.rules.rules[c.rule];
        let g = self.graphs();
        for v in rule.matched_vars(self.dir) {
            let e = &rule.elements[v];
            let id = c.binding[v].unwrap();
            if !g.fits(e.domain, e.kind, &e.ty, id) {
                return false;
            }
            if e.domain != Domain::Corr && e.is_created() == g.corr.is_covered(e.domain, id) {
                return false;
            }
        }
        if rule.is_materializing(self.dir) && self.corr.context_key_used(&rule.name, &Self::context_key(rule, &c.binding)) {
            return false;
        }
        self.output_fits(rule, &c.binding)
    }

    /// Whether the produced edges respect upper bounds, endpoint types and
    /// single containers in the output model.
    fn output_fits(&self, rule: &TggRule, b: &Binding) -> bool {
        let meta = self.output.meta();
        let mut added: BTreeMap<(usize, &str), usize> = BTreeMap::new();
        for (v, e) in rule.elements.iter().enumerate() {
            if !(rule.is_produced(v, self.dir) && e.kind == ElementKind::Edge && e.domain != Domain::Corr) {
                continue;
            }
            let et = meta.edge_type(&e.ty).expect("resolved at load");
            let (s, t) = (e.src.unwrap(), e.dst.unwrap());
            for (end, want) in [(s, &et.source), (t, &et.target)] {
                if let Some(id) = b[end] {
                    let ty = self.output.type_of(id).unwrap_or("");
                    if !meta.conforms(ty, want) {
                        return false;
                    }
                }
            }
            if let Some(src) = b[s] {
                let n = added.entry((s, e.ty.as_str())).or_insert(0);
                *n += 1;
                let existing = self.output.out_edges(src).filter(|x| x.ty == e.ty).count();
                if !et.upper.admits(existing + *n) {
                    return false;
                }
            }
            if et.containment {
                if let Some(dst) = b[t] {
                    if self.output.container_of(dst).is_some() {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Pops candidates in order until the queue is empty.
    pub(crate) fn run(&mut self) -> Result<(), SyncError> {
        while let Some(c) = self.queue.pop_first() {
            if self.still_admissible(&c) {
                self.apply(c)?;
            }
        }
        Ok(())
    }

    fn apply(&mut self, c: Candidate) -> Result<AppId, SyncError> {
        let rules = self.rules;
        let rule = &rules.rules[c.rule];
        let dir = self.dir;
        let (in_d, out_d) = (self.input_domain(), self.output_domain());
        let mut b = c.binding;
        let app_id = self.corr.next_app_id();

        let mut depends_on = BTreeSet::new();
        for v in rule.context_vars() {
            let id = b[v].unwrap();
            let creator = match rule.elements[v].domain {
                Domain::Corr => self.corr.node(id).map(|n| n.app),
                d => self.corr.creator(d, id),
            };
            depends_on.extend(creator);
        }
        let context_key = rule.is_materializing(dir).then(|| Self::context_key(rule, &b));

        let out_meta = self.output.meta().clone();
        for (v, e) in rule.elements.iter().enumerate() {
            if !(rule.is_produced(v, dir) && e.domain == out_d && e.kind == ElementKind::Node) {
                continue;
            }
            let kinds = out_meta.attributes(&e.ty).expect("resolved at load");
            let mut attrs: BTreeMap<String, Value> = BTreeMap::new();
            if dir == Direction::Backward {
                for (dv, attr, value) in &rule.backward_defaults {
                    if *dv == v {
                        attrs.insert(attr.clone(), value.clone());
                    }
                }
            }
            let g = self.graphs();
            let get = |s: &super::expr::Slot<usize>| g.attr(rule.elements[s.var].domain, b[s.var]?, &s.attr);
            for con in &rule.constraints {
                match rule.role(con, dir) {
                    ConstraintRole::Assign if con.slot.var == v => {
                        if let Some(value) = con.expr.eval(kinds[&con.slot.attr], get) {
                            attrs.insert(con.slot.attr.clone(), value);
                        }
                    }
                    ConstraintRole::AssignInverse => {
                        let op = con.expr.operands()[0];
                        if op.var == v {
                            if let Some(value) = get(&con.slot).and_then(|x| x.coerce(kinds[&op.attr])) {
                                attrs.insert(op.attr.clone(), value);
                            }
                        }
                    }
                    _ => {}
                }
            }
            let id = self.output.create_node(&e.ty, attrs)?;
            self.touched.insert(out_d, id);
            b[v] = Some(id);
        }
        for (v, e) in rule.elements.iter().enumerate() {
            if rule.is_produced(v, dir) && e.domain == out_d && e.kind == ElementKind::Edge {
                let id = self.output.create_edge(&e.ty, b[e.src.unwrap()].unwrap(), b[e.dst.unwrap()].unwrap())?;
                self.touched.insert(out_d, id);
                b[v] = Some(id);
            }
        }
        let mut created_corr = Vec::new();
        for (v, e) in rule.elements.iter().enumerate() {
            if e.domain == Domain::Corr && e.is_created() {
                let id = self.corr.next_corr_id();
                self.corr.insert_corr(CorrNode {
                    id,
                    ty: e.ty.clone(),
                    source: b[e.src.unwrap()].unwrap(),
                    target: b[e.dst.unwrap()].unwrap(),
                    app: app_id,
                });
                self.touched.insert(Domain::Corr, id);
                b[v] = Some(id);
                created_corr.push(id);
            }
        }
        let created_in = |d: Domain| -> Vec<ElementId> {
            rule.elements
                .iter()
                .enumerate()
                .filter(|(_, e)| e.domain == d && e.is_created())
                .map(|(v, _)| b[v].unwrap())
                .collect()
        };
        let app = RuleApplication {
            id: app_id,
            rule: rule.name.clone(),
            direction: dir,
            binding: b.iter().map(|x| x.unwrap()).collect(),
            created_source: created_in(Domain::Source),
            created_target: created_in(Domain::Target),
            created_corr,
            depends_on,
        };
        let newly: Vec<(Domain, ElementId)> = [in_d, out_d, Domain::Corr]
            .into_iter()
            .flat_map(|d| app.created(d).iter().map(move |&id| (d, id)))
            .collect();
        self.corr.register(app, &self.domains[c.rule], context_key);
        self.added.push(app_id);
        for (d, id) in newly {
            self.discover(d, id, AnchorAt::Context);
        }
        Ok(app_id)
    }

    /// Revokes `roots` and everything depending on them, dependents first.
    /// Returns input elements that lost their coverage and still exist.
    fn revoke(&mut self, roots: &BTreeSet<AppId>) -> Result<Vec<ElementId>, SyncError> {
        let mut order = Vec::new();
        let mut seen = HashSet::new();
        for &r in roots {
            self.post_order(r, &mut seen, &mut order);
        }
        let (in_d, out_d) = (self.input_domain(), self.output_domain());
        let mut orphans = Vec::new();
        for id in order {
            let Some(app) = self.corr.application(id).cloned() else {
                continue;
            };
            let rule_idx = self.rules.rule_index(&app.rule).expect("known rule");
            let mut edges: Vec<ElementId> = app.created(out_d).iter().copied().filter(|&x| self.output.edge(x).is_some()).collect();
            let mut nodes: Vec<ElementId> = app.created(out_d).iter().copied().filter(|&x| self.output.node(x).is_some()).collect();
            edges.sort_unstable();
            nodes.sort_unstable();
            for e in edges {
                if self.output.edge(e).is_some() {
                    self.output.delete_edge(e)?;
                    self.touched.insert(out_d, e);
                }
            }
            for n in nodes {
                if self.output.node(n).is_some() {
                    self.output.delete_node(n)?;
                    self.touched.insert(out_d, n);
                }
            }
            self.corr.unregister(id, &self.domains[rule_idx]);
            for &c in &app.created_corr {
                self.touched.insert(Domain::Corr, c);
            }
            self.revoked.push(id);
            orphans.extend(app.created(in_d).iter().copied().filter(|&x| self.input.contains(x)));
            // Materialising rules may fire again on surviving context.
            for (ri, rule) in self.rules.rules.iter().enumerate() {
                if ri == rule_idx && rule.is_materializing(self.dir) {
                    if let Some(anchor) = rule.default_anchor(self.dir) {
                        let x = app.binding[anchor];
                        if self.graphs().fits(rule.elements[anchor].domain, rule.elements[anchor].kind, &rule.elements[anchor].ty, x) {
                            self.discover_rule(ri, anchor, x);
                        }
                    }
                }
            }
        }
        Ok(orphans)
    }

    fn discover_rule(&mut self, ri: usize, var: usize, id: ElementId) {
        let rule = &self.rules.rules[ri];
        let g = graphs_of(self.dir, self.input, self.output, self.corr);
        let found = match_at(rule, self.dir, &g, var, id, &mut self.touched);
        for binding in found {
            let mut created: Vec<ElementId> = rule.created_input(self.dir).map(|c| binding[c].unwrap()).collect();
            created.sort_unstable();
            self.queue.insert(Candidate {
                rule: ri,
                created,
                binding,
            });
        }
    }

    fn post_order(&self, id: AppId, seen: &mut HashSet<AppId>, out: &mut Vec<AppId>) {
        if !seen.insert(id) {
            return;
        }
        let deps: Vec<AppId> = self.corr.dependents(id).collect();
        for d in deps {
            self.post_order(d, seen, out);
        }
        out.push(id);
    }

    /// Batch mode: cover everything reachable from scratch.
    pub(crate) fn transform(mut self) -> Result<SyncReport, SyncError> {
        let out_head = self.output.head_seq();
        let in_d = self.input_domain();
        let ids: Vec<ElementId> = self.input.element_ids().collect();
        for id in ids {
            self.discover(in_d, id, AnchorAt::CreatedInput);
        }
        self.run()?;
        let uncovered = self.input.element_ids().filter(|&id| !self.corr.is_covered(in_d, id)).collect();
        Ok(self.finish(out_head, uncovered))
    }

    /// Incremental mode: propagate, revoke, re-cover.
    pub(crate) fn sync(mut self, records: &[ChangeRecord]) -> Result<SyncReport, SyncError> {
        let out_head = self.output.head_seq();
        let (in_d, out_d) = (self.input_domain(), self.output_domain());
        let mut created = BTreeSet::new();
        let mut deleted = BTreeSet::new();
        let mut attr_changes: BTreeSet<(ElementId, String)> = BTreeSet::new();
        for r in records {
            let id = r.change.element();
            self.touched.insert(in_d, id);
            match &r.change {
                Change::NodeCreated { .. } | Change::EdgeCreated { .. } => {
                    created.insert(id);
                }
                Change::NodeDeleted { .. } | Change::EdgeDeleted { .. } => {
                    deleted.insert(id);
                }
                Change::AttributeSet { name, .. } => {
                    attr_changes.insert((id, name.clone()));
                }
            }
        }

        let mut roots: BTreeSet<AppId> = BTreeSet::new();
        for &id in &deleted {
            if !self.input.contains(id) {
                roots.extend(self.corr.users(in_d, id));
            }
        }

        // Attribute propagation.
        for (id, attr) in &attr_changes {
            if !self.input.contains(*id) {
                continue;
            }
            let users: Vec<AppId> = self.corr.users(in_d, *id).collect();
            for app_id in users {
                if roots.contains(&app_id) {
                    continue;
                }
                let app = self.corr.application(app_id).expect("indexed").clone();
                let rule = self.rules.rule(&app.rule).expect("known rule");
                let Some(var) = (0..rule.elements.len()).find(|&v| rule.elements[v].domain == in_d && app.binding[v] == *id)
                else {
                    continue;
                };
                for (ci, con) in rule.constraints.iter().enumerate() {
                    let on_slot = con.slot.var == var && con.slot.attr == *attr;
                    let on_operand = con.expr.operands().iter().any(|s| s.var == var && s.attr == *attr);
                    match rule.role(con, self.dir) {
                        ConstraintRole::Assign if on_operand => {
                            let target = app.binding[con.slot.var];
                            let g = self.graphs();
                            let get = |s: &super::expr::Slot<usize>| g.attr(rule.elements[s.var].domain, app.binding[s.var], &s.attr);
                            let kind = self
                                .output
                                .meta()
                                .attributes(self.output.type_of(target).unwrap_or(""))
                                .and_then(|k| k.get(&con.slot.attr).copied());
                            let value = kind.and_then(|k| con.expr.eval(k, get));
                            if let Some(value) = value {
                                if self.output.attr(target, &con.slot.attr) != Some(&value) {
                                    self.output.set_attr(target, &con.slot.attr, value)?;
                                    self.touched.insert(out_d, target);
                                }
                            }
                        }
                        ConstraintRole::AssignInverse if on_slot => {
                            let op = con.expr.operands()[0];
                            let target = app.binding[op.var];
                            let value = self.input.attr(*id, attr).cloned();
                            let kind = self
                                .output
                                .meta()
                                .attributes(self.output.type_of(target).unwrap_or(""))
                                .and_then(|k| k.get(&op.attr).copied());
                            if let Some(value) = value.zip(kind).and_then(|(v, k)| v.coerce(k)) {
                                if self.output.attr(target, &op.attr) != Some(&value) {
                                    self.output.set_attr(target, &op.attr, value)?;
                                    self.touched.insert(out_d, target);
                                }
                            }
                        }
                        ConstraintRole::Check if on_slot || on_operand => {
                            let g = self.graphs();
                            if !constraint_holds(rule, ci, &g, |v| Some(app.binding[v])) {
                                roots.insert(app_id);
                            }
                        }
                        _ => {}
                    }
                }
            }
        }

        let orphans = self.revoke(&roots)?;

        let mut seeds: BTreeSet<ElementId> = created.iter().copied().filter(|&id| self.input.contains(id)).collect();
        seeds.extend(orphans.iter().copied());
        for &id in &seeds {
            self.discover(in_d, id, AnchorAt::CreatedInput);
        }
        for (id, _) in &attr_changes {
            if self.input.contains(*id) {
                self.discover(in_d, *id, AnchorAt::Checked);
            }
        }
        self.run()?;
        let uncovered = seeds.into_iter().filter(|&id| !self.corr.is_covered(in_d, id)).collect();
        Ok(self.finish(out_head, uncovered))
    }

    fn finish(self, out_head: u64, mut uncovered: Vec<ElementId>) -> SyncReport {
        uncovered.sort_unstable();
        uncovered.dedup();
        let delta = &self.output.journal().records()[out_head as usize..];
        let mut report = SyncReport {
            direction: Some(self.dir),
            added: self.added,
            revoked: self.revoked,
            uncovered,
            touched: self.touched.count(),
            ..Default::default()
        };
        for r in delta {
            match r.change {
                Change::NodeCreated { .. } | Change::EdgeCreated { .. } => report.created += 1,
                Change::NodeDeleted { .. } | Change::EdgeDeleted { .. } => report.deleted += 1,
                Change::AttributeSet { .. } => report.attributes_updated += 1,
            }
        }
        if let (Some(first), Some(last)) = (delta.first(), delta.last()) {
            report.segment = Some((first.seq, last.seq));
        }
        report
    }
}

/// Derives a target model and correspondence from `source`. The source is
/// not modified.
pub fn transform_forward(source: &Model, rules: &RuleSet) -> Result<(Model, CorrespondenceModel, SyncReport), SyncError> {
    let mut target = Model::new(format!("{}-view", source.id()), rules.target_meta.clone());
    let mut corr = CorrespondenceModel::new();
    let report = Engine::new(rules, Direction::Forward, source, &mut target, &mut corr)?.transform()?;
    Ok((target, corr, report))
}

/// Derives a source model and correspondence from `target`; requires a
/// bidirectional rule set.
pub fn transform_backward(target: &Model, rules: &RuleSet) -> Result<(Model, CorrespondenceModel, SyncReport), SyncError> {
    let mut source = Model::new(format!("{}-source", target.id()), rules.source_meta.clone());
    let mut corr = CorrespondenceModel::new();
    let report = Engine::new(rules, Direction::Backward, target, &mut source, &mut corr)?.transform()?;
    Ok((source, corr, report))
}
