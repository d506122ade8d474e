use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::graph::{ElementId, Model};
use super::meta::Upper;

/// One violated model invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub element: ElementId,
    pub rule: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConformanceReport {
    pub findings: Vec<Finding>,
}

impl ConformanceReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }

    fn push(&mut self, element: ElementId, rule: &str, message: String) {
        self.findings.push(Finding {
            element,
            rule: rule.to_owned(),
            message,
        });
    }
}

/// Checks every model invariant and reports each violation as data.
pub fn validate(model: &Model) -> ConformanceReport {
    let meta = model.meta();
    let mut report = ConformanceReport::default();

    for node in model.nodes() {
        let Some(nt) = meta.node_type(&node.ty) else {
            report.push(node.id, "node-type", format!("unknown node type `{}`", node.ty));
            continue;
        };
        if nt.is_abstract {
            report.push(node.id, "node-type", format!("node type `{}` is abstract", node.ty));
        }
        let decl = meta.attributes(&node.ty).expect("known type");
        for (name, kind) in decl {
            match node.attrs.get(name) {
                None => report.push(node.id, "attribute", format!("missing attribute `{name}`")),
                Some(v) if v.kind() != *kind => {
                    report.push(node.id, "attribute", format!("attribute `{name}` expects {kind}, has {}", v.kind()))
                }
                Some(_) => {}
            }
        }
        for name in node.attrs.keys().filter(|n| !decl.contains_key(*n)) {
            report.push(node.id, "attribute", format!("undeclared attribute `{name}`"));
        }
    }

    let mut containers: BTreeMap<ElementId, Vec<ElementId>> = BTreeMap::new();
    for edge in model.edges() {
        let Some(et) = meta.edge_type(&edge.ty) else {
            report.push(edge.id, "edge-type", format!("unknown edge type `{}`", edge.ty));
            continue;
        };
        for (end, expected, rule) in [(edge.src, &et.source, "source"), (edge.dst, &et.target, "target")] {
            match model.node(end) {
                None => report.push(edge.id, "endpoint", format!("{rule} node {end} does not exist")),
                Some(n) if !meta.conforms(&n.ty, expected) => report.push(
                    edge.id,
                    "endpoint",
                    format!("{rule} node {end} is `{}`, expected `{expected}`", n.ty),
                ),
                Some(_) => {}
            }
        }
        if et.containment {
            containers.entry(edge.dst).or_default().push(edge.src);
        }
    }

    for (node, parents) in &containers {
        if parents.len() > 1 {
            report.push(*node, "containment", format!("node has {} containers", parents.len()));
        }
    }

    // Containment cycles: follow the (first) container chain from each node.
    let mut reported: BTreeSet<ElementId> = BTreeSet::new();
    for &start in containers.keys() {
        let mut path = vec![start];
        let mut cur = start;
        while let Some(&parent) = containers.get(&cur).and_then(|p| p.first()) {
            if let Some(pos) = path.iter().position(|&n| n == parent) {
                let mut cycle: Vec<ElementId> = path[pos..].to_vec();
                cycle.sort_unstable();
                if reported.insert(cycle[0]) {
                    let members: Vec<String> = cycle.iter().map(|n| n.to_string()).collect();
                    report.push(cycle[0], "containment", format!("containment cycle: {}", members.join(", ")));
                }
                break;
            }
            if reported.contains(&parent) {
                break;
            }
            path.push(parent);
            cur = parent;
        }
    }

    for node in model.nodes() {
        for et in meta.edge_types() {
            if !meta.conforms(&node.ty, &et.source) {
                continue;
            }
            let count = model.out_edges(node.id).filter(|e| e.ty == et.name).count();
            if (count as u64) < u64::from(et.lower) {
                report.push(
                    node.id,
                    "multiplicity",
                    format!("`{}` has {count} edge(s), lower bound {}", et.name, et.lower),
                );
            }
            if !et.upper.admits(count) {
                let Upper::Bounded(u) = et.upper else { unreachable!() };
                report.push(node.id, "multiplicity", format!("`{}` has {count} edge(s), upper bound {u}", et.name));
            }
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{Edge, MetaModel, Node};

    fn meta() -> Arc<MetaModel> {
        Arc::new(
            MetaModel::from_json(
                r#"{"name":"tree","nodeTypes":[{"name":"T","attributes":[{"name":"name","kind":"string"}]}],
                "edgeTypes":[
                  {"name":"child","source":"T","target":"T","containment":true,"lower":0,"upper":"*"},
                  {"name":"owner","source":"T","target":"T","containment":false,"lower":1,"upper":1}
                ]}"#,
            )
            .unwrap(),
        )
    }

    fn raw_node(m: &mut Model, id: u64) {
        m.insert_node_unchecked(Node {
            id: ElementId(id),
            ty: "T".into(),
            attrs: [("name".to_string(), format!("n{id}").into())].into(),
        });
    }

    #[test]
    fn lower_bound_is_reported() {
        let mut m = Model::new("m", meta());
        let a = m.create_node("T", [("name", "a")]).unwrap();
        let report = validate(&m);
        assert_eq!(report.len(), 1);
        assert_eq!(report.findings[0].element, a);
        assert!(report.findings[0].message.contains("owner"));
        m.create_edge("owner", a, a).unwrap();
        assert!(validate(&m).is_empty());
    }

    #[test]
    fn containment_cycle_lists_members() {
        let mut m = Model::new("m", meta());
        for id in 1..=3 {
            raw_node(&mut m, id);
        }
        for (id, s, d) in [(4, 1, 2), (5, 2, 3), (6, 3, 1)] {
            m.insert_edge_unchecked(Edge { id: ElementId(id), ty: "child".into(), src: ElementId(s), dst: ElementId(d) });
        }
        for id in 1..=3 {
            m.insert_edge_unchecked(Edge { id: ElementId(10 + id), ty: "owner".into(), src: ElementId(id), dst: ElementId(id) });
        }
        let report = validate(&m);
        let cycles: Vec<_> = report.findings.iter().filter(|f| f.message.starts_with("containment cycle")).collect();
        assert_eq!(cycles.len(), 1, "{report:?}");
        assert_eq!(cycles[0].message, "containment cycle: #1, #2, #3");
        assert_eq!(report.len(), 1);
    }

    #[test]
    fn dangling_edges_and_bad_attributes() {
        let mut m = Model::new("m", meta());
        m.insert_node_unchecked(Node { id: ElementId(1), ty: "T".into(), attrs: [("name".to_string(), 3i64.into())].into() });
        m.insert_edge_unchecked(Edge { id: ElementId(2), ty: "owner".into(), src: ElementId(1), dst: ElementId(7) });
        let report = validate(&m);
        assert!(report.findings.iter().any(|f| f.rule == "attribute"));
        assert!(report.findings.iter().any(|f| f.rule == "endpoint" && f.element == ElementId(2)));
    }
}
