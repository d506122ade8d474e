use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::journal::{Change, ChangeBatch, ChangeJournal, ChangeRecord};
use super::meta::MetaModel;
use super::value::Value;
use super::ModelError;

/// Model-scoped element id. Nodes and edges share one id space; ids are
/// assigned monotonically and never reused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u64);

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: ElementId,
    #[serde(rename = "type")]
    pub ty: String,
    pub attrs: BTreeMap<String, Value>,
}

impl Node {
    pub fn attr(&self, name: &str) -> Option<&Value> {
        self.attrs.get(name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: ElementId,
    #[serde(rename = "type")]
    pub ty: String,
    pub src: ElementId,
    pub dst: ElementId,
}

/// A mutation request accepted by [`Model::apply_change`].
#[derive(Clone, Debug, PartialEq)]
pub enum ChangeRequest {
    /// Attributes not listed take the default value of their kind.
    CreateNode {
        ty: String,
        attrs: BTreeMap<String, Value>,
    },
    DeleteNode(ElementId),
    CreateEdge {
        ty: String,
        src: ElementId,
        dst: ElementId,
    },
    DeleteEdge(ElementId),
    SetAttribute {
        id: ElementId,
        name: String,
        value: Value,
    },
}

static NEXT_TOKEN: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Debug)]
pub struct Model {
    id: String,
    token: u64,
    meta: Arc<MetaModel>,
    nodes: BTreeMap<ElementId, Node>,
    edges: BTreeMap<ElementId, Edge>,
    out_edges: HashMap<ElementId, BTreeSet<ElementId>>,
    in_edges: HashMap<ElementId, BTreeSet<ElementId>>,
    next_id: u64,
    journal: ChangeJournal,
}

impl Model {
    pub fn new(id: impl Into<String>, meta: Arc<MetaModel>) -> Self {
        Model {
            id: id.into(),
            token: NEXT_TOKEN.fetch_add(1, Ordering::Relaxed),
            meta,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            out_edges: HashMap::new(),
            in_edges: HashMap::new(),
            next_id: 1,
            journal: ChangeJournal::default(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Process-unique identity used to tie journal batches to their model.
    pub fn token(&self) -> u64 {
        self.token
    }

    pub fn meta(&self) -> &Arc<MetaModel> {
        &self.meta
    }

    pub fn journal(&self) -> &ChangeJournal {
        &self.journal
    }

    pub fn node(&self, id: ElementId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn edge(&self, id: ElementId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.nodes.contains_key(&id) || self.edges.contains_key(&id)
    }

    /// Type name of a node or edge.
    pub fn type_of(&self, id: ElementId) -> Option<&str> {
        self.nodes
            .get(&id)
            .map(|n| n.ty.as_str())
            .or_else(|| self.edges.get(&id).map(|e| e.ty.as_str()))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> + '_ {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn element_count(&self) -> usize {
        self.nodes.len() + self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    /// All element ids, nodes then edges, each ascending.
    pub fn element_ids(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.nodes.keys().chain(self.edges.keys()).copied()
    }

    pub fn out_edges(&self, node: ElementId) -> impl Iterator<Item = &Edge> + '_ {
        self.out_edges
            .get(&node)
            .into_iter()
            .flatten()
            .map(move |e| &self.edges[e])
    }

    pub fn in_edges(&self, node: ElementId) -> impl Iterator<Item = &Edge> + '_ {
        self.in_edges
            .get(&node)
            .into_iter()
            .flatten()
            .map(move |e| &self.edges[e])
    }

    pub fn attr(&self, node: ElementId, name: &str) -> Option<&Value> {
        self.nodes.get(&node).and_then(|n| n.attrs.get(name))
    }

    /// Container of a node, via its incoming containment edge.
    pub fn container_of(&self, node: ElementId) -> Option<ElementId> {
        self.in_edges(node)
            .find(|e| self.is_containment(&e.ty))
            .map(|e| e.src)
    }

    fn is_containment(&self, edge_type: &str) -> bool {
        self.meta.edge_type(edge_type).is_some_and(|t| t.containment)
    }

    pub fn head_seq(&self) -> u64 {
        self.journal.head()
    }

    /// Immutable batch of every journal record after `cursor`.
    pub fn snapshot(&self, cursor: u64) -> Result<ChangeBatch, ModelError> {
        let records = self.journal.since(cursor)?;
        Ok(ChangeBatch {
            model_token: self.token,
            model_id: self.id.clone(),
            from: cursor,
            to: cursor.max(self.journal.head()),
            records: records.into(),
        })
    }

    pub fn apply_change(&mut self, request: ChangeRequest) -> Result<ChangeRecord, ModelError> {
        match request {
            ChangeRequest::CreateNode { ty, attrs } => self.do_create_node(ty, attrs),
            ChangeRequest::DeleteNode(id) => self.do_delete_node(id),
            ChangeRequest::CreateEdge { ty, src, dst } => self.do_create_edge(ty, src, dst),
            ChangeRequest::DeleteEdge(id) => self.do_delete_edge(id),
            ChangeRequest::SetAttribute { id, name, value } => self.do_set_attribute(id, name, value),
        }
    }

    pub fn create_node<K, V, I>(&mut self, ty: &str, attrs: I) -> Result<ElementId, ModelError>
    where
        K: Into<String>,
        V: Into<Value>,
        I: IntoIterator<Item = (K, V)>,
    {
        let attrs = attrs.into_iter().map(|(k, v)| (k.into(), v.into())).collect();
        let rec = self.apply_change(ChangeRequest::CreateNode {
            ty: ty.to_owned(),
            attrs,
        })?;
        Ok(rec.change.element())
    }

    pub fn create_edge(&mut self, ty: &str, src: ElementId, dst: ElementId) -> Result<ElementId, ModelError> {
        let rec = self.apply_change(ChangeRequest::CreateEdge {
            ty: ty.to_owned(),
            src,
            dst,
        })?;
        Ok(rec.change.element())
    }

    pub fn delete_node(&mut self, id: ElementId) -> Result<ChangeRecord, ModelError> {
        self.apply_change(ChangeRequest::DeleteNode(id))
    }

    pub fn delete_edge(&mut self, id: ElementId) -> Result<ChangeRecord, ModelError> {
        self.apply_change(ChangeRequest::DeleteEdge(id))
    }

    pub fn set_attr(&mut self, id: ElementId, name: &str, value: impl Into<Value>) -> Result<ChangeRecord, ModelError> {
        self.apply_change(ChangeRequest::SetAttribute {
            id,
            name: name.to_owned(),
            value: value.into(),
        })
    }

    fn fresh_id(&mut self) -> ElementId {
        let id = ElementId(self.next_id);
        self.next_id += 1;
        id
    }

    fn do_create_node(&mut self, ty: String, attrs: BTreeMap<String, Value>) -> Result<ChangeRecord, ModelError> {
        let nt = self
            .meta
            .node_type(&ty)
            .ok_or_else(|| ModelError::TypeViolation(format!("unknown node type `{ty}`")))?;
        if nt.is_abstract {
            return Err(ModelError::TypeViolation(format!("node type `{ty}` is abstract")));
        }
        let decl = self.meta.attributes(&ty).expect("declared type has attributes");
        let mut values = BTreeMap::new();
        for (name, kind) in decl {
            values.insert(name.clone(), kind.default_value());
        }
        for (name, value) in attrs {
            let kind = *decl
                .get(&name)
                .ok_or_else(|| ModelError::TypeViolation(format!("node type `{ty}` has no attribute `{name}`")))?;
            let found = value.kind();
            let value = value.coerce(kind).ok_or_else(|| {
                ModelError::TypeViolation(format!("attribute `{name}` expects {kind}, got {found}"))
            })?;
            values.insert(name, value);
        }
        let node = Node {
            id: self.fresh_id(),
            ty,
            attrs: values,
        };
        self.nodes.insert(node.id, node.clone());
        Ok(self.journal.append(Change::NodeCreated { node }))
    }

    fn do_create_edge(&mut self, ty: String, src: ElementId, dst: ElementId) -> Result<ChangeRecord, ModelError> {
        let et = self
            .meta
            .edge_type(&ty)
            .ok_or_else(|| ModelError::TypeViolation(format!("unknown edge type `{ty}`")))?
            .clone();
        let src_ty = &self.nodes.get(&src).ok_or(ModelError::UnknownElement(src))?.ty;
        let dst_ty = &self.nodes.get(&dst).ok_or(ModelError::UnknownElement(dst))?.ty;
        if !self.meta.conforms(src_ty, &et.source) {
            return Err(ModelError::TypeViolation(format!(
                "`{ty}` source must be `{}`, node {src} is `{src_ty}`",
                et.source
            )));
        }
        if !self.meta.conforms(dst_ty, &et.target) {
            return Err(ModelError::TypeViolation(format!(
                "`{ty}` target must be `{}`, node {dst} is `{dst_ty}`",
                et.target
            )));
        }
        let count = self.out_edges(src).filter(|e| e.ty == ty).count();
        if !et.upper.admits(count + 1) {
            return Err(ModelError::Multiplicity {
                node: src,
                edge_type: ty,
                count,
                upper: et.upper,
            });
        }
        if et.containment {
            if let Some(c) = self.container_of(dst) {
                return Err(ModelError::Containment(format!("node {dst} is already contained by {c}")));
            }
            let mut cur = Some(src);
            while let Some(n) = cur {
                if n == dst {
                    return Err(ModelError::Containment(format!(
                        "containing {dst} in {src} would form a cycle"
                    )));
                }
                cur = self.container_of(n);
            }
        }
        let edge = Edge {
            id: self.fresh_id(),
            ty,
            src,
            dst,
        };
        self.link(edge.clone());
        Ok(self.journal.append(Change::EdgeCreated { edge }))
    }

    fn do_delete_edge(&mut self, id: ElementId) -> Result<ChangeRecord, ModelError> {
        let edge = self.unlink(id).ok_or(ModelError::UnknownElement(id))?;
        Ok(self.journal.append(Change::EdgeDeleted { edge }))
    }

    fn do_delete_node(&mut self, id: ElementId) -> Result<ChangeRecord, ModelError> {
        if !self.nodes.contains_key(&id) {
            return Err(ModelError::UnknownElement(id));
        }
        // Contained subtree first, children in edge-id order.
        let children: Vec<ElementId> = self
            .out_edges(id)
            .filter(|e| self.is_containment(&e.ty))
            .map(|e| e.dst)
            .collect();
        for child in children {
            if self.nodes.contains_key(&child) {
                self.do_delete_node(child)?;
            }
        }
        let mut incident: Vec<ElementId> = self
            .out_edges
            .get(&id)
            .into_iter()
            .flatten()
            .chain(self.in_edges.get(&id).into_iter().flatten())
            .copied()
            .collect();
        incident.sort_unstable();
        incident.dedup();
        for e in incident {
            self.do_delete_edge(e)?;
        }
        let node = self.nodes.remove(&id).expect("checked above");
        self.out_edges.remove(&id);
        self.in_edges.remove(&id);
        Ok(self.journal.append(Change::NodeDeleted { node }))
    }

    fn do_set_attribute(&mut self, id: ElementId, name: String, value: Value) -> Result<ChangeRecord, ModelError> {
        let node = self.nodes.get(&id).ok_or_else(|| {
            if self.edges.contains_key(&id) {
                ModelError::TypeViolation(format!("element {id} is an edge and has no attributes"))
            } else {
                ModelError::UnknownElement(id)
            }
        })?;
        let kind = *self
            .meta
            .attributes(&node.ty)
            .and_then(|a| a.get(&name))
            .ok_or_else(|| ModelError::TypeViolation(format!("node type `{}` has no attribute `{name}`", node.ty)))?;
        let found = value.kind();
        let value = value
            .coerce(kind)
            .ok_or_else(|| ModelError::TypeViolation(format!("attribute `{name}` expects {kind}, got {found}")))?;
        let node = self.nodes.get_mut(&id).expect("checked above");
        let old = node
            .attrs
            .insert(name.clone(), value.clone())
            .unwrap_or_else(|| kind.default_value());
        Ok(self.journal.append(Change::AttributeSet {
            id,
            name,
            old,
            new: value,
        }))
    }

    fn link(&mut self, edge: Edge) {
        self.out_edges.entry(edge.src).or_default().insert(edge.id);
        self.in_edges.entry(edge.dst).or_default().insert(edge.id);
        self.edges.insert(edge.id, edge);
    }

    fn unlink(&mut self, id: ElementId) -> Option<Edge> {
        let edge = self.edges.remove(&id)?;
        if let Some(s) = self.out_edges.get_mut(&edge.src) {
            s.remove(&id);
        }
        if let Some(s) = self.in_edges.get_mut(&edge.dst) {
            s.remove(&id);
        }
        Some(edge)
    }

    /// Inserts a node verbatim: no conformance checks, no journal record.
    /// Intended for loading documents and for building deliberately broken
    /// fixtures; run [`validate`](super::validate) afterwards.
    pub fn insert_node_unchecked(&mut self, node: Node) {
        self.next_id = self.next_id.max(node.id.0 + 1);
        self.nodes.insert(node.id, node);
    }

    /// Edge counterpart of [`Model::insert_node_unchecked`]. Endpoints need
    /// not exist.
    pub fn insert_edge_unchecked(&mut self, edge: Edge) {
        self.next_id = self.next_id.max(edge.id.0 + 1);
        self.link(edge);
    }

    /// Replays `records` onto a fresh model. Ids are reassigned; the
    /// returned map sends original ids to replayed ones.
    pub fn replay(
        id: impl Into<String>,
        meta: Arc<MetaModel>,
        records: &[ChangeRecord],
    ) -> Result<(Model, HashMap<ElementId, ElementId>), ModelError> {
        let mut model = Model::new(id, meta);
        let mut map: HashMap<ElementId, ElementId> = HashMap::new();
        let lookup = |map: &HashMap<ElementId, ElementId>, id: ElementId| {
            map.get(&id).copied().ok_or(ModelError::UnknownElement(id))
        };
        for rec in records {
            match &rec.change {
                Change::NodeCreated { node } => {
                    let new = model.create_node(&node.ty, node.attrs.clone())?;
                    map.insert(node.id, new);
                }
                Change::EdgeCreated { edge } => {
                    let new = model.create_edge(&edge.ty, lookup(&map, edge.src)?, lookup(&map, edge.dst)?)?;
                    map.insert(edge.id, new);
                }
                Change::NodeDeleted { node } => {
                    let id = lookup(&map, node.id)?;
                    if model.nodes.contains_key(&id) {
                        model.delete_node(id)?;
                    }
                }
                Change::EdgeDeleted { edge } => {
                    let id = lookup(&map, edge.id)?;
                    if model.edges.contains_key(&id) {
                        model.delete_edge(id)?;
                    }
                }
                Change::AttributeSet { id, name, new, .. } => {
                    model.set_attr(lookup(&map, *id)?, name, new.clone())?;
                }
            }
        }
        Ok((model, map))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, MetaModel};

    fn meta() -> Arc<MetaModel> {
        Arc::new(
            MetaModel::from_json(
                r#"{"name":"ejb","nodeTypes":[
                {"name":"EjbModule","attributes":[{"name":"name","kind":"string"}]},
                {"name":"SessionBean","attributes":[{"name":"name","kind":"string"},{"name":"callCount","kind":"integer"},{"name":"avg","kind":"real"}]},
                {"name":"Abstract","abstract":true}
            ],"edgeTypes":[
                {"name":"beans","source":"EjbModule","target":"SessionBean","containment":true,"lower":0,"upper":"*"},
                {"name":"uses","source":"SessionBean","target":"SessionBean","containment":false,"lower":0,"upper":1}
            ]}"#,
            )
            .unwrap(),
        )
    }

    #[test]
    fn first_mutation_gets_seq_one() {
        let mut m = Model::new("m", meta());
        let rec = m
            .apply_change(ChangeRequest::CreateNode {
                ty: "SessionBean".into(),
                attrs: [("name".to_string(), Value::from("Billing"))].into(),
            })
            .unwrap();
        assert_eq!(rec.seq, 1);
        assert_eq!(m.node_count(), 1);
        let node = m.node(rec.change.element()).unwrap();
        assert_eq!(node.attr("name"), Some(&Value::from("Billing")));
        assert_eq!(node.attr("callCount"), Some(&Value::Int(0)));
        // integer literals widen into real attributes
        m.set_attr(node.id, "avg", 3i64).unwrap();
        assert_eq!(m.attr(ElementId(1), "avg"), Some(&Value::Real(3.0)));
    }

    #[test]
    fn type_errors_leave_journal_unchanged() {
        let mut m = Model::new("m", meta());
        let module = m.create_node("EjbModule", [("name", "m")]).unwrap();
        let bean = m.create_node("SessionBean", [("name", "b")]).unwrap();
        let head = m.head_seq();
        assert!(matches!(m.create_edge("beans", bean, module), Err(ModelError::TypeViolation(_))));
        assert!(matches!(m.create_node("Abstract", Vec::<(String, Value)>::new()), Err(ModelError::TypeViolation(_))));
        assert!(matches!(m.create_node("SessionBean", [("nope", 1i64)]), Err(ModelError::TypeViolation(_))));
        assert!(matches!(m.create_node("SessionBean", [("name", 1i64)]), Err(ModelError::TypeViolation(_))));
        assert!(matches!(m.set_attr(bean, "callCount", "x"), Err(ModelError::TypeViolation(_))));
        assert!(matches!(m.delete_node(ElementId(99)), Err(ModelError::UnknownElement(_))));
        assert_eq!(m.head_seq(), head);
    }

    #[test]
    fn multiplicity_and_containment_are_enforced() {
        let mut m = Model::new("m", meta());
        let m1 = m.create_node("EjbModule", [("name", "m1")]).unwrap();
        let m2 = m.create_node("EjbModule", [("name", "m2")]).unwrap();
        let a = m.create_node("SessionBean", [("name", "a")]).unwrap();
        let b = m.create_node("SessionBean", [("name", "b")]).unwrap();
        m.create_edge("uses", a, b).unwrap();
        assert!(matches!(m.create_edge("uses", a, a), Err(ModelError::Multiplicity { .. })));
        m.create_edge("beans", m1, a).unwrap();
        assert!(matches!(m.create_edge("beans", m2, a), Err(ModelError::Containment(_))));
        assert!(validate(&m).is_empty());
    }

    #[test]
    fn delete_cascades_in_order() {
        // m contains b1, b2 through e1, e2; b1 uses b2 through u.
        let mut m = Model::new("m", meta());
        let module = m.create_node("EjbModule", [("name", "m")]).unwrap();
        let b1 = m.create_node("SessionBean", [("name", "b1")]).unwrap();
        let b2 = m.create_node("SessionBean", [("name", "b2")]).unwrap();
        let e1 = m.create_edge("beans", module, b1).unwrap();
        let e2 = m.create_edge("beans", module, b2).unwrap();
        let u = m.create_edge("uses", b1, b2).unwrap();
        let before = m.head_seq();
        let rec = m.delete_node(module).unwrap();
        assert_eq!(rec.change, Change::NodeDeleted { node: Node { id: module, ty: "EjbModule".into(), attrs: [("name".to_string(), Value::from("m"))].into() } });
        let kinds: Vec<(&str, ElementId)> = m.journal().records()[before as usize..]
            .iter()
            .map(|r| (r.change.kind_name(), r.change.element()))
            .collect();
        assert_eq!(
            kinds,
            vec![
                ("edge-deleted", e1),
                ("edge-deleted", u),
                ("node-deleted", b1),
                ("edge-deleted", e2),
                ("node-deleted", b2),
                ("node-deleted", module),
            ]
        );
        assert!(m.is_empty());
    }

    #[test]
    fn snapshots_are_stable() {
        let mut m = Model::new("m", meta());
        for i in 0..3 {
            m.create_node("EjbModule", [("name", format!("m{i}"))]).unwrap();
        }
        let a = m.snapshot(0).unwrap();
        let b = m.snapshot(0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.iter().map(|r| r.seq).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(a.cursor(), 3);
        assert!(m.snapshot(3).unwrap().is_empty());
        assert!(m.snapshot(m.journal().next_seq()).unwrap().is_empty());
        assert!(matches!(m.snapshot(9), Err(ModelError::CursorOutOfRange { .. })));
    }
}
