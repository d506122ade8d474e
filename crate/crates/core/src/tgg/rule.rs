//! Triple graph grammar rules and rule sets.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr::{parse_slot, Expr, Slot};
use super::plan::SearchPlan;
use super::RuleError;
use crate::model::{MetaModel, Value, ValueKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Corr,
    Target,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marking {
    Context,
    Created,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Node,
    Edge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    /// The domain that is matched and covered.
    pub fn input(self) -> Domain {
        match self {
            Direction::Forward => Domain::Source,
            Direction::Backward => Domain::Target,
        }
    }

    /// The domain that is produced.
    pub fn output(self) -> Domain {
        match self {
            Direction::Forward => Domain::Target,
            Direction::Backward => Domain::Source,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Directionality {
    Bidirectional,
    ForwardOnly,
}

// ---------------------------------------------------------------------------
// Documents

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleSetDoc {
    pub name: String,
    pub source_meta_model: String,
    pub target_meta_model: String,
    pub direction: Directionality,
    #[serde(default)]
    pub corr_types: Vec<CorrType>,
    pub rules: Vec<RuleDoc>,
}

/// A correspondence node type linking one source element to one target
/// element. Either end may name a node type or an edge type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrType {
    pub name: String,
    pub source: String,
    pub target: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleDoc {
    pub name: String,
    #[serde(default)]
    pub priority: i64,
    pub elements: Vec<ElementDoc>,
    #[serde(default)]
    pub attributes: Vec<ConstraintDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub backward_defaults: Vec<DefaultDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementDoc {
    pub var: String,
    pub kind: ElementKind,
    #[serde(rename = "type")]
    pub ty: String,
    pub domain: Domain,
    pub marking: Marking,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dst: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintDoc {
    pub slot: String,
    pub expr: String,
    #[serde(default = "bidirectional")]
    pub direction: ConstraintDirection,
}

fn bidirectional() -> ConstraintDirection {
    ConstraintDirection::Bidirectional
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefaultDoc {
    pub var: String,
    pub attr: String,
    pub value: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintDirection {
    Bidirectional,
    ForwardOnly,
}

// ---------------------------------------------------------------------------
// Compiled rules

#[derive(Clone, Debug, PartialEq)]
pub struct PatternElement {
    pub var: String,
    pub kind: ElementKind,
    pub ty: String,
    pub domain: Domain,
    pub marking: Marking,
    /// Edge endpoints, or for correspondence nodes the linked source element.
    pub src: Option<usize>,
    /// Edge endpoints, or for correspondence nodes the linked target element.
    pub dst: Option<usize>,
}

impl PatternElement {
    pub fn is_created(&self) -> bool {
        self.marking == Marking::Created
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributeConstraint {
    pub slot: Slot<usize>,
    pub expr: Expr<usize>,
    pub direction: ConstraintDirection,
}

/// How a constraint is used when a rule runs in one direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintRole {
    /// The slot belongs to a produced element and is computed.
    Assign,
    /// The copied operand belongs to a produced element and takes the
    /// slot's value.
    AssignInverse,
    /// Both sides are matched; the constraint filters matches.
    Check,
}

#[derive(Debug)]
pub struct TggRule {
    pub name: String,
    pub priority: i64,
    pub elements: Vec<PatternElement>,
    pub constraints: Vec<AttributeConstraint>,
    pub backward_defaults: Vec<(usize, String, Value)>,
    var_index: HashMap<String, usize>,
    plans: HashMap<(Direction, usize), SearchPlan>,
    default_anchor: HashMap<Direction, usize>,
}

impl TggRule {
    pub fn var(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn is_axiom(&self) -> bool {
        self.elements.iter().all(PatternElement::is_created)
    }

    /// Elements bound by matching in `dir`: the whole input domain plus
    /// every context element.
    pub fn is_matched(&self, var: usize, dir: Direction) -> bool {
        let e = &self.elements[var];
        e.domain == dir.input() || !e.is_created()
    }

    pub fn is_produced(&self, var: usize, dir: Direction) -> bool {
        let e = &self.elements[var];
        e.is_created() && e.domain != dir.input()
    }

    pub fn matched_vars(&self, dir: Direction) -> impl Iterator<Item = usize> + '_ {
        (0..self.elements.len()).filter(move |&v| self.is_matched(v, dir))
    }

    pub fn created_input(&self, dir: Direction) -> impl Iterator<Item = usize> + '_ {
        (0..self.elements.len()).filter(move |&v| self.elements[v].is_created() && self.elements[v].domain == dir.input())
    }

    pub fn context_vars(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.elements.len()).filter(move |&v| !self.elements[v].is_created())
    }

    /// Rules without created input elements only materialise output
    /// structure; they fire once per distinct context match.
    pub fn is_materializing(&self, dir: Direction) -> bool {
        self.created_input(dir).next().is_none()
    }

    pub fn role(&self, c: &AttributeConstraint, dir: Direction) -> ConstraintRole {
        if self.is_produced(c.slot.var, dir) {
            ConstraintRole::Assign
        } else if matches!(&c.expr, Expr::Copy(s) if self.is_produced(s.var, dir)) {
            ConstraintRole::AssignInverse
        } else {
            ConstraintRole::Check
        }
    }

    pub fn plan(&self, dir: Direction) -> Option<&SearchPlan> {
        self.default_anchor.get(&dir).and_then(|a| self.plans.get(&(dir, *a)))
    }

    pub fn plan_from(&self, dir: Direction, anchor: usize) -> Option<&SearchPlan> {
        self.plans.get(&(dir, anchor))
    }

    pub fn default_anchor(&self, dir: Direction) -> Option<usize> {
        self.default_anchor.get(&dir).copied()
    }

    pub fn slot_name(&self, s: &Slot<usize>) -> String {
        format!("{}.{}", self.elements[s.var].var, s.attr)
    }
}

#[derive(Debug)]
pub struct RuleSet {
    pub name: String,
    pub source_meta: Arc<MetaModel>,
    pub target_meta: Arc<MetaModel>,
    pub directionality: Directionality,
    pub corr_types: BTreeMap<String, CorrType>,
    /// Ordered by (priority, name).
    pub rules: Vec<TggRule>,
    doc: RuleSetDoc,
}

impl RuleSet {
    pub fn from_json(text: &str, src: Arc<MetaModel>, tgt: Arc<MetaModel>) -> Result<Self, RuleError> {
        let doc: RuleSetDoc = serde_json::from_str(text)?;
        Self::from_doc(doc, src, tgt)
    }

    pub fn doc(&self) -> &RuleSetDoc {
        &self.doc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("rule set serializes")
    }

    pub fn rule(&self, name: &str) -> Option<&TggRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn rule_index(&self, name: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.name == name)
    }

    pub fn supports(&self, dir: Direction) -> bool {
        dir == Direction::Forward || self.directionality == Directionality::Bidirectional
    }

    pub fn directions(&self) -> Vec<Direction> {
        match self.directionality {
            Directionality::Bidirectional => vec![Direction::Forward, Direction::Backward],
            Directionality::ForwardOnly => vec![Direction::Forward],
        }
    }

    pub fn meta(&self, domain: Domain) -> Option<&MetaModel> {
        match domain {
            Domain::Source => Some(&self.source_meta),
            Domain::Target => Some(&self.target_meta),
            Domain::Corr => None,
        }
    }

    pub fn from_doc(doc: RuleSetDoc, src: Arc<MetaModel>, tgt: Arc<MetaModel>) -> Result<Self, RuleError> {
        if doc.source_meta_model != src.name() {
            return Err(RuleError::Invalid(format!(
                "rule set expects source metamodel `{}`, got `{}`",
                doc.source_meta_model,
                src.name()
            )));
        }
        if doc.target_meta_model != tgt.name() {
            return Err(RuleError::Invalid(format!(
                "rule set expects target metamodel `{}`, got `{}`",
                doc.target_meta_model,
                tgt.name()
            )));
        }
        let mut corr_types = BTreeMap::new();
        for ct in &doc.corr_types {
            if !type_exists(&src, &ct.source) {
                return Err(RuleError::Invalid(format!(
                    "correspondence type `{}` links unknown source type `{}`",
                    ct.name, ct.source
                )));
            }
            if !type_exists(&tgt, &ct.target) {
                return Err(RuleError::Invalid(format!(
                    "correspondence type `{}` links unknown target type `{}`",
                    ct.name, ct.target
                )));
            }
            if corr_types.insert(ct.name.clone(), ct.clone()).is_some() {
                return Err(RuleError::Invalid(format!("duplicate correspondence type `{}`", ct.name)));
            }
        }
        let mut set = RuleSet {
            name: doc.name.clone(),
            source_meta: src,
            target_meta: tgt,
            directionality: doc.direction,
            corr_types,
            rules: Vec::new(),
            doc: doc.clone(),
        };
        let mut names = HashSet::new();
        for rd in &doc.rules {
            if !names.insert(rd.name.clone()) {
                return Err(RuleError::Invalid(format!("duplicate rule `{}`", rd.name)));
            }
            let rule = compile_rule(&set, rd)?;
            set.rules.push(rule);
        }
        let axioms: Vec<&str> = set.rules.iter().filter(|r| r.is_axiom()).map(|r| r.name.as_str()).collect();
        if axioms.len() > 1 {
            return Err(RuleError::Invalid(format!("more than one axiom rule: {}", axioms.join(", "))));
        }
        set.rules.sort_by(|a, b| (a.priority, &a.name).cmp(&(b.priority, &b.name)));
        Ok(set)
    }
}

fn type_exists(meta: &MetaModel, name: &str) -> bool {
    meta.node_type(name).is_some() || meta.edge_type(name).is_some()
}

fn related(meta: &MetaModel, a: &str, b: &str) -> bool {
    meta.conforms(a, b) || meta.conforms(b, a)
}

fn compile_rule(set: &RuleSet, rd: &RuleDoc) -> Result<TggRule, RuleError> {
    let err = |var: &str, msg: String| RuleError::IllFormed {
        rule: rd.name.clone(),
        var: var.to_owned(),
        message: msg,
    };

    let mut var_index = HashMap::new();
    for (i, e) in rd.elements.iter().enumerate() {
        if var_index.insert(e.var.clone(), i).is_some() {
            return Err(err(&e.var, "duplicate variable".into()));
        }
    }
    let lookup = |name: &Option<String>, owner: &str, what: &str| -> Result<usize, RuleError> {
        let name = name.as_ref().ok_or_else(|| err(owner, format!("missing `{what}`")))?;
        var_index
            .get(name)
            .copied()
            .ok_or_else(|| err(owner, format!("`{what}` references unknown variable `{name}`")))
    };

    let mut elements = Vec::with_capacity(rd.elements.len());
    for e in &rd.elements {
        let (src, dst) = match (e.domain, e.kind) {
            (Domain::Corr, ElementKind::Edge) => {
                return Err(err(&e.var, "correspondence elements must be nodes".into()));
            }
            (Domain::Corr, ElementKind::Node) | (_, ElementKind::Edge) => {
                (Some(lookup(&e.src, &e.var, "src")?), Some(lookup(&e.dst, &e.var, "dst")?))
            }
            (_, ElementKind::Node) => {
                if e.src.is_some() || e.dst.is_some() {
                    return Err(err(&e.var, "only edges and correspondence nodes take src/dst".into()));
                }
                (None, None)
            }
        };
        elements.push(PatternElement {
            var: e.var.clone(),
            kind: e.kind,
            ty: e.ty.clone(),
            domain: e.domain,
            marking: e.marking,
            src,
            dst,
        });
    }

    // Type resolution and endpoint compatibility.
    for e in &elements {
        match (e.domain, e.kind) {
            (Domain::Corr, _) => {
                let ct = set
                    .corr_types
                    .get(&e.ty)
                    .ok_or_else(|| err(&e.var, format!("unknown correspondence type `{}`", e.ty)))?;
                let s = &elements[e.src.unwrap()];
                let t = &elements[e.dst.unwrap()];
                if s.domain != Domain::Source || t.domain != Domain::Target {
                    return Err(err(&e.var, "correspondence must link a source element to a target element".into()));
                }
                let s_ok = s.ty == ct.source || (s.kind == ElementKind::Node && related(&set.source_meta, &s.ty, &ct.source));
                let t_ok = t.ty == ct.target || (t.kind == ElementKind::Node && related(&set.target_meta, &t.ty, &ct.target));
                if !s_ok || !t_ok {
                    return Err(err(&e.var, format!("linked elements do not fit correspondence type `{}`", ct.name)));
                }
            }
            (d, ElementKind::Node) => {
                let meta = set.meta(d).unwrap();
                if meta.node_type(&e.ty).is_none() {
                    return Err(err(&e.var, format!("unknown node type `{}`", e.ty)));
                }
            }
            (d, ElementKind::Edge) => {
                let meta = set.meta(d).unwrap();
                let et = meta
                    .edge_type(&e.ty)
                    .ok_or_else(|| err(&e.var, format!("unknown edge type `{}`", e.ty)))?;
                for (end, expected) in [(e.src.unwrap(), &et.source), (e.dst.unwrap(), &et.target)] {
                    let n = &elements[end];
                    if n.domain != d || n.kind != ElementKind::Node {
                        return Err(err(&e.var, format!("endpoint `{}` must be a {d:?} node", n.var)));
                    }
                    if !related(meta, &n.ty, expected) {
                        return Err(err(&e.var, format!("endpoint `{}` of type `{}` cannot carry `{}`", n.var, n.ty, e.ty)));
                    }
                }
            }
        }
    }

    // Context elements may only touch context elements.
    for e in elements.iter().filter(|e| !e.is_created()) {
        for end in [e.src, e.dst].into_iter().flatten() {
            if elements[end].is_created() {
                return Err(err(&e.var, format!("context element links created element `{}`", elements[end].var)));
            }
        }
    }

    let has_context = elements.iter().any(|e| !e.is_created());
    if has_context {
        // Union-find over pattern connections.
        let mut parent: Vec<usize> = (0..elements.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for (i, e) in elements.iter().enumerate() {
            for end in [e.src, e.dst].into_iter().flatten() {
                let (a, b) = (find(&mut parent, i), find(&mut parent, end));
                parent[a] = b;
            }
        }
        let context_roots: HashSet<usize> = (0..elements.len())
            .filter(|&i| !elements[i].is_created())
            .map(|i| find(&mut parent, i))
            .collect();
        for (i, e) in elements.iter().enumerate() {
            if e.domain == Domain::Source && e.is_created() && !context_roots.contains(&find(&mut parent, i)) {
                return Err(err(&e.var, "disconnected created source element".into()));
            }
        }
    }

    for (i, e) in elements.iter().enumerate() {
        if e.domain == Domain::Target && e.kind == ElementKind::Node && e.is_created() {
            let linked = elements.iter().any(|c| {
                c.domain == Domain::Corr && c.is_created() && c.dst == Some(i) && elements[c.src.unwrap()].is_created()
            });
            if !linked {
                return Err(err(&e.var, "unlinked created target".into()));
            }
        }
    }

    let attr_kind = |var: usize, attr: &str, owner: &str| -> Result<ValueKind, RuleError> {
        let e = &elements[var];
        if e.kind != ElementKind::Node || e.domain == Domain::Corr {
            return Err(err(owner, format!("`{}` has no attributes", e.var)));
        }
        set.meta(e.domain)
            .unwrap()
            .attributes(&e.ty)
            .and_then(|a| a.get(attr).copied())
            .ok_or_else(|| err(owner, format!("`{}` of type `{}` has no attribute `{attr}`", e.var, e.ty)))
    };
    let resolve = |s: Slot, owner: &str| -> Result<Slot<usize>, RuleError> {
        let var = *var_index
            .get(&s.var)
            .ok_or_else(|| err(owner, format!("unknown variable `{}`", s.var)))?;
        attr_kind(var, &s.attr, owner)?;
        Ok(Slot { var, attr: s.attr })
    };

    let mut constraints = Vec::new();
    for cd in &rd.attributes {
        let slot = parse_slot(&cd.slot).map_err(|m| err(&cd.slot, m))?;
        let slot = resolve(slot, &cd.slot)?;
        let expr: Expr = cd.expr.parse().map_err(|m: String| err(&cd.slot, m))?;
        let expr = expr.map_vars(|v| {
            var_index
                .get(&v)
                .copied()
                .ok_or_else(|| err(&cd.slot, format!("unknown variable `{v}`")))
        })?;
        let slot_kind = attr_kind(slot.var, &slot.attr, &cd.slot)?;
        for op in expr.operands() {
            let k = attr_kind(op.var, &op.attr, &cd.slot)?;
            let ok = match &expr {
                Expr::Copy(_) => k == slot_kind || (k == ValueKind::Integer && slot_kind == ValueKind::Real),
                _ => matches!(k, ValueKind::Integer | ValueKind::Real),
            };
            if !ok {
                return Err(err(&cd.slot, format!("operand `{}.{}` has incompatible kind {k}", elements[op.var].var, op.attr)));
            }
        }
        if let Expr::Const(v) = &expr {
            if v.clone().coerce(slot_kind).is_none() {
                return Err(err(&cd.slot, format!("constant {v} does not fit {slot_kind}")));
            }
        }
        if cd.direction == ConstraintDirection::Bidirectional && !expr.is_invertible() {
            return Err(err(&cd.slot, "non-invertible bidirectional constraint".into()));
        }
        if cd.direction == ConstraintDirection::ForwardOnly && set.directionality == Directionality::Bidirectional {
            return Err(err(&cd.slot, "forward-only constraint in a bidirectional rule set".into()));
        }
        if let Expr::Copy(op) = &expr {
            if cd.direction == ConstraintDirection::Bidirectional && attr_kind(op.var, &op.attr, &cd.slot)? != slot_kind {
                return Err(err(&cd.slot, "bidirectional copy between different kinds".into()));
            }
        }
        constraints.push(AttributeConstraint {
            slot,
            expr,
            direction: cd.direction,
        });
    }

    let mut backward_defaults = Vec::new();
    for d in &rd.backward_defaults {
        let var = *var_index
            .get(&d.var)
            .ok_or_else(|| err(&d.var, "backward default for unknown variable".into()))?;
        let e = &elements[var];
        if e.domain != Domain::Source || !e.is_created() || e.kind != ElementKind::Node {
            return Err(err(&d.var, "backward defaults apply to created source nodes".into()));
        }
        let kind = attr_kind(var, &d.attr, &d.var)?;
        let value = d
            .value
            .clone()
            .coerce(kind)
            .ok_or_else(|| err(&d.var, format!("default for `{}` does not fit {kind}", d.attr)))?;
        backward_defaults.push((var, d.attr.clone(), value));
    }

    let mut rule = TggRule {
        name: rd.name.clone(),
        priority: rd.priority,
        elements,
        constraints,
        backward_defaults,
        var_index,
        plans: HashMap::new(),
        default_anchor: HashMap::new(),
    };

    for dir in set.directions() {
        for (i, e) in rule.elements.iter().enumerate() {
            if rule.is_produced(i, dir) && e.kind == ElementKind::Node && e.domain != Domain::Corr {
                let abstract_ = set.meta(e.domain).unwrap().node_type(&e.ty).is_some_and(|t| t.is_abstract);
                if abstract_ {
                    return Err(err(&e.var, format!("{dir} direction would instantiate abstract type `{}`", e.ty)));
                }
            }
        }
        for c in &rule.constraints {
            let role = rule.role(c, dir);
            let inputs: Vec<usize> = match role {
                ConstraintRole::Assign => c.expr.operands().iter().map(|s| s.var).collect(),
                ConstraintRole::AssignInverse => vec![c.slot.var],
                ConstraintRole::Check => c.expr.operands().iter().map(|s| s.var).chain([c.slot.var]).collect(),
            };
            if let Some(v) = inputs.iter().find(|&&v| rule.is_produced(v, dir)) {
                let name = rule.slot_name(&c.slot);
                return Err(err(&name, format!("{dir} evaluation depends on produced element `{}`", rule.elements[*v].var)));
            }
        }

        let anchor = rule
            .created_input(dir)
            .find(|&v| rule.elements[v].kind == ElementKind::Node)
            .or_else(|| rule.created_input(dir).next())
            .or_else(|| {
                rule.matched_vars(dir)
                    .find(|&v| rule.elements[v].domain == dir.input() && rule.elements[v].kind == ElementKind::Node)
            })
            .or_else(|| rule.matched_vars(dir).next());
        let Some(anchor) = anchor else {
            return Err(err(&rule.name, format!("nothing to match in {dir} direction")));
        };
        let plan = SearchPlan::build(&rule, dir, anchor).map_err(|var| RuleError::Uncoverable {
            rule: rule.name.clone(),
            direction: dir,
            var,
        })?;
        rule.plans.insert((dir, anchor), plan);
        rule.default_anchor.insert(dir, anchor);
        for v in rule.matched_vars(dir).collect::<Vec<_>>() {
            if v != anchor {
                let plan = SearchPlan::build(&rule, dir, v).expect("pattern connected from default anchor");
                rule.plans.insert((dir, v), plan);
            }
        }
    }
    Ok(rule)
}
