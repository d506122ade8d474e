//! Flattening of (source, corr, target) into one model so that whole
//! triples can be compared with [`isomorphic`](crate::model::isomorphic).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use super::corr::CorrespondenceModel;
use super::rule::{Domain, RuleSet};
use crate::model::{
    AttributeDecl, EdgeType, ElementId, MetaModel, MetaModelDoc, Model, Node, NodeType, Upper, Value,
};

fn triple_meta(rules: &RuleSet) -> MetaModel {
    let mut node_types = vec![NodeType {
        name: "Any".into(),
        supertype: None,
        is_abstract: true,
        attributes: vec![],
    }];
    for (prefix, meta) in [("S", &rules.source_meta), ("T", &rules.target_meta)] {
        for nt in meta.node_types() {
            let attributes = meta
                .attributes(&nt.name)
                .unwrap()
                .iter()
                .map(|(name, kind)| AttributeDecl {
                    name: name.clone(),
                    kind: *kind,
                })
                .collect();
            node_types.push(NodeType {
                name: format!("{prefix}:{}", nt.name),
                supertype: Some("Any".into()),
                is_abstract: false,
                attributes,
            });
        }
        for et in meta.edge_types() {
            node_types.push(NodeType {
                name: format!("{prefix}:{}", et.name),
                supertype: Some("Any".into()),
                is_abstract: false,
                attributes: vec![],
            });
        }
    }
    for ct in rules.corr_types.keys() {
        node_types.push(NodeType {
            name: format!("C:{ct}"),
            supertype: Some("Any".into()),
            is_abstract: false,
            attributes: vec![],
        });
    }
    let link = |name: &str| EdgeType {
        name: name.into(),
        source: "Any".into(),
        target: "Any".into(),
        containment: false,
        lower: 0,
        upper: Upper::Unbounded,
    };
    MetaModel::from_doc(MetaModelDoc {
        name: format!("triple:{}", rules.name),
        node_types,
        edge_types: vec![link("src"), link("dst")],
    })
    .expect("derived metamodel is well formed")
}

/// One model holding every source, target and correspondence element.
/// Edges become nodes with `src`/`dst` links so that correspondence nodes
/// can point at them.
pub fn triple_model(rules: &RuleSet, source: &Model, target: &Model, corr: &CorrespondenceModel) -> Model {
    let meta = Arc::new(triple_meta(rules));
    let mut out = Model::new("triple", meta);
    let mut next = 1u64;
    let mut fresh = || {
        let id = ElementId(next);
        next += 1;
        id
    };
    let mut map: HashMap<(Domain, ElementId), ElementId> = HashMap::new();
    let mut links = Vec::new();
    for (prefix, d, m) in [("S", Domain::Source, source), ("T", Domain::Target, target)] {
        for n in m.nodes() {
            let id = fresh();
            map.insert((d, n.id), id);
            out.insert_node_unchecked(Node {
                id,
                ty: format!("{prefix}:{}", n.ty),
                attrs: n.attrs.clone(),
            });
        }
        for e in m.edges() {
            let id = fresh();
            map.insert((d, e.id), id);
            out.insert_node_unchecked(Node {
                id,
                ty: format!("{prefix}:{}", e.ty),
                attrs: BTreeMap::new(),
            });
            links.push(("src", id, (d, e.src)));
            links.push(("dst", id, (d, e.dst)));
        }
    }
    for c in corr.nodes() {
        let id = fresh();
        out.insert_node_unchecked(Node {
            id,
            ty: format!("C:{}", c.ty),
            attrs: BTreeMap::new(),
        });
        links.push(("src", id, (Domain::Source, c.source)));
        links.push(("dst", id, (Domain::Target, c.target)));
    }
    for (ty, from, to) in links {
        if let Some(&to) = map.get(&to) {
            let id = fresh();
            out.insert_edge_unchecked(crate::model::Edge {
                id,
                ty: ty.into(),
                src: from,
                dst: to,
            });
        }
    }
    out
}

/// The part of `source` that a bidirectional rule set can reproduce from
/// a view: elements created by applications whose rule also creates
/// target elements, edges only between kept nodes, and attributes that no
/// constraint of the creating rule mentions reset to their defaults.
pub fn mapped_projection(rules: &RuleSet, source: &Model, corr: &CorrespondenceModel) -> Model {
    let mut keep: HashMap<ElementId, HashSet<String>> = HashMap::new();
    for app in corr.applications() {
        let Some(rule) = rules.rule(&app.rule) else { continue };
        if app.created_target.is_empty() {
            continue;
        }
        for (v, e) in rule.elements.iter().enumerate() {
            if e.domain != Domain::Source || !e.is_created() {
                continue;
            }
            let mapped: HashSet<String> = rule
                .constraints
                .iter()
                .flat_map(|c| std::iter::once(&c.slot).chain(c.expr.operands()))
                .filter(|s| s.var == v)
                .map(|s| s.attr.clone())
                .collect();
            keep.entry(app.binding[v]).or_default().extend(mapped);
        }
    }
    let mut out = Model::new(format!("{}-mapped", source.id()), source.meta().clone());
    for n in source.nodes() {
        let Some(mapped) = keep.get(&n.id) else { continue };
        let kinds = source.meta().attributes(&n.ty).cloned().unwrap_or_default();
        let attrs: BTreeMap<String, Value> = kinds
            .iter()
            .map(|(name, kind)| {
                let v = if mapped.contains(name) {
                    n.attrs.get(name).cloned().unwrap_or_else(|| kind.default_value())
                } else {
                    kind.default_value()
                };
                (name.clone(), v)
            })
            .collect();
        out.insert_node_unchecked(Node {
            id: n.id,
            ty: n.ty.clone(),
            attrs,
        });
    }
    for e in source.edges() {
        if keep.contains_key(&e.id) && out.node(e.src).is_some() && out.node(e.dst).is_some() {
            out.insert_edge_unchecked(e.clone());
        }
    }
    out
}
