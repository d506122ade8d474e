//! Effectors: source-model change batches back onto the runtime.
//!
//! Supported records:
//!
//! | record                         | runtime action |
//! |--------------------------------|----------------|
//! | `wire` edge created            | wire           |
//! | `wire` edge deleted            | unwire         |
//! | bean node deleted              | remove bean    |
//! | `EjbModule` node deleted       | undeploy       |
//!
//! Records inside a subtree whose root is also deleted in the batch are
//! subsumed by the root's action. Everything else is rejected.

use std::collections::HashMap;

use serde::Serialize;

use super::scenario::Action;
use super::sim::Runtime;
use crate::model::{Change, ChangeBatch, Edge, ElementId, Model, Node, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EffectorEntry {
    pub seq: u64,
    pub kind: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EffectorReport {
    pub applied: Vec<EffectorEntry>,
    pub rejected: Vec<EffectorEntry>,
    pub stale: Vec<EffectorEntry>,
    pub subsumed: Vec<EffectorEntry>,
}

impl EffectorReport {
    pub fn is_empty(&self) -> bool {
        self.applied.is_empty() && self.rejected.is_empty() && self.stale.is_empty() && self.subsumed.is_empty()
    }
}

const SENSOR_ONLY: [&str; 2] = ["callCount", "totalTimeMs"];

/// Looks up elements in the post-batch model, falling back to the
/// snapshots carried by deletion records.
struct View<'a> {
    model: &'a Model,
    dead_nodes: HashMap<ElementId, &'a Node>,
    dead_edges: Vec<&'a Edge>,
}

impl<'a> View<'a> {
    fn node(&self, id: ElementId) -> Option<&'a Node> {
        self.model.node(id).or_else(|| self.dead_nodes.get(&id).copied())
    }

    fn text(&self, id: ElementId, attr: &str) -> String {
        self.node(id)
            .and_then(|n| n.attr(attr))
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string()
    }

    fn parent(&self, id: ElementId, edge: &str) -> Option<ElementId> {
        self.model
            .in_edges(id)
            .find(|e| e.ty == edge)
            .map(|e| e.src)
            .or_else(|| self.dead_edges.iter().find(|e| e.ty == edge && e.dst == id).map(|e| e.src))
    }

    fn is_bean(&self, id: ElementId) -> bool {
        self.node(id).is_some_and(|n| self.model.meta().conforms(&n.ty, "Bean"))
    }

    fn dead(&self, id: ElementId) -> bool {
        self.dead_nodes.contains_key(&id)
    }

    /// Nearest strict ancestor that is a bean or module deleted in this batch.
    fn dead_root_above(&self, mut id: ElementId) -> Option<ElementId> {
        while let Some(p) = ["beans", "provides", "requires", "exceptions", "modules"]
            .iter()
            .find_map(|e| self.parent(id, e))
        {
            if self.dead(p) && (self.is_bean(p) || self.node(p).is_some_and(|n| n.ty == "EjbModule")) {
                return Some(p);
            }
            id = p;
        }
        None
    }
}

/// Translates `batch` into runtime actions. `model` is the source model
/// after the batch was applied.
pub fn apply_effector(rt: &mut Runtime, model: &Model, batch: &ChangeBatch) -> EffectorReport {
    let view = View {
        model,
        dead_nodes: batch
            .records
            .iter()
            .filter_map(|r| match &r.change {
                Change::NodeDeleted { node } => Some((node.id, node)),
                _ => None,
            })
            .collect(),
        dead_edges: batch
            .records
            .iter()
            .filter_map(|r| match &r.change {
                Change::EdgeDeleted { edge } => Some(edge),
                _ => None,
            })
            .collect(),
    };
    let mut report = EffectorReport::default();
    for r in batch.records.iter() {
        let entry = |detail: String| EffectorEntry {
            seq: r.seq,
            kind: r.change.kind_name(),
            detail,
        };
        let outcome = match &r.change {
            Change::EdgeCreated { edge } if edge.ty == "wire" => {
                let Some(bean) = view.parent(edge.src, "requires") else {
                    report.rejected.push(entry("wire from a non-required interface".into()));
                    continue;
                };
                let action = Action::Wire {
                    bean: view.text(bean, "uid"),
                    iface: view.text(edge.src, "name"),
                    provider: view.text(edge.dst, "uid"),
                };
                Some(action)
            }
            Change::EdgeDeleted { edge } if edge.ty == "wire" => {
                let bean = view.parent(edge.src, "requires");
                let covered = bean.is_some_and(|b| view.dead(b) || view.dead_root_above(b).is_some())
                    || view.dead(edge.dst)
                    || view.dead_root_above(edge.dst).is_some();
                match bean {
                    _ if covered => {
                        report.subsumed.push(entry("endpoint removed in the same batch".into()));
                        continue;
                    }
                    Some(b) => Some(Action::Unwire {
                        bean: view.text(b, "uid"),
                        iface: view.text(edge.src, "name"),
                    }),
                    None => {
                        report.rejected.push(entry("wire from a non-required interface".into()));
                        continue;
                    }
                }
            }
            Change::NodeDeleted { node } if node.ty == "EjbModule" => Some(Action::Undeploy {
                module: view.text(node.id, "uid"),
            }),
            Change::NodeDeleted { node } if view.is_bean(node.id) => match view.dead_root_above(node.id) {
                Some(_) => {
                    report.subsumed.push(entry("module removed in the same batch".into()));
                    continue;
                }
                None => Some(Action::RemoveBean {
                    bean: view.text(node.id, "uid"),
                }),
            },
            Change::NodeDeleted { node } if view.dead_root_above(node.id).is_some() => None,
            Change::EdgeDeleted { edge } if view.dead(edge.dst) && view.dead_root_above(edge.dst).is_some() => None,
            Change::EdgeDeleted { edge } if view.dead(edge.dst) && (view.is_bean(edge.dst) || edge.ty == "modules") => {
                None
            }
            Change::AttributeSet { name, .. } if SENSOR_ONLY.contains(&name.as_str()) => {
                report.rejected.push(entry("sensor-only attribute".into()));
                continue;
            }
            _ => {
                report.rejected.push(entry("unsupported change".into()));
                continue;
            }
        };
        match outcome {
            None => report.subsumed.push(entry("part of a removed subtree".into())),
            Some(action) => {
                let detail = serde_json::to_string(&action).expect("action serializes");
                if references_unknown(rt, &action) {
                    report.stale.push(entry(detail));
                } else {
                    match rt.perform_effector(action) {
                        Ok(()) => report.applied.push(entry(detail)),
                        Err(e) => report.stale.push(entry(format!("{detail}: {e}"))),
                    }
                }
            }
        }
    }
    report
}

fn references_unknown(rt: &Runtime, action: &Action) -> bool {
    match action {
        Action::Undeploy { module } => rt.module(module).is_none(),
        Action::RemoveBean { bean } | Action::Unwire { bean, .. } => rt.bean(bean).is_none(),
        Action::Wire { bean, provider, .. } => rt.bean(bean).is_none() || rt.bean(provider).is_none(),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::scenario::{BeanSpec, ModuleSpec, Scenario};
    use crate::runtime::sensors::pump_sensors;
    use crate::runtime::SourceBuilder;

    fn wired() -> (Runtime, Model) {
        let bean = |name: &str, p: &[&str], r: &[&str]| BeanSpec {
            name: name.into(),
            kind: "stateless".into(),
            provides: p.iter().map(|s| s.to_string()).collect(),
            requires: r.iter().map(|s| s.to_string()).collect(),
        };
        let s = Scenario {
            seed: 1,
            steps: vec![
                Action::Deploy {
                    module: ModuleSpec {
                        name: "m".into(),
                        container: "server".into(),
                        beans: vec![bean("b1", &[], &["I"]), bean("b2", &["I"], &[])],
                    },
                },
                Action::Wire {
                    bean: "b1".into(),
                    iface: "I".into(),
                    provider: "b2".into(),
                },
            ],
        };
        let mut rt = Runtime::for_scenario(&s);
        rt.step(&s, 2).unwrap();
        let mut m = SourceBuilder::empty("src");
        pump_sensors(&rt, &mut m).unwrap();
        (rt, m)
    }

    #[test]
    fn empty_batch_empty_report() {
        let (mut rt, m) = wired();
        let batch = m.snapshot(m.head_seq()).unwrap();
        assert!(apply_effector(&mut rt, &m, &batch).is_empty());
    }

    #[test]
    fn wire_deletion_unwires() {
        let (mut rt, mut m) = wired();
        let cursor = m.head_seq();
        let w = m.edges().find(|e| e.ty == "wire").unwrap().id;
        m.delete_edge(w).unwrap();
        let batch = m.snapshot(cursor).unwrap();
        let r = apply_effector(&mut rt, &m, &batch);
        assert_eq!((r.applied.len(), r.rejected.len()), (1, 0));
        assert!(rt.bean("b1").unwrap().wires.is_empty());
        assert!(pump_sensors(&rt, &mut m).unwrap().is_empty());
    }

    #[test]
    fn counter_edit_is_rejected() {
        let (mut rt, mut m) = wired();
        let cursor = m.head_seq();
        let b = m.nodes().find(|n| n.ty == "SessionBean").unwrap().id;
        m.set_attr(b, "callCount", 9i64).unwrap();
        let batch = m.snapshot(cursor).unwrap();
        let r = apply_effector(&mut rt, &m, &batch);
        assert_eq!((r.applied.len(), r.rejected.len()), (0, 1));
        assert_eq!(r.rejected[0].detail, "sensor-only attribute");
        assert!(rt.beans().all(|b| b.call_count == 0));
    }

    #[test]
    fn module_deletion_undeploys_once() {
        let (mut rt, mut m) = wired();
        let cursor = m.head_seq();
        let module = m.nodes().find(|n| n.ty == "EjbModule").unwrap().id;
        m.delete_node(module).unwrap();
        let batch = m.snapshot(cursor).unwrap();
        let r = apply_effector(&mut rt, &m, &batch);
        assert_eq!(r.applied.len(), 1, "{r:?}");
        assert!(r.rejected.is_empty() && r.stale.is_empty(), "{r:?}");
        assert!(rt.module("m").is_none());
        assert!(pump_sensors(&rt, &mut m).unwrap().is_empty());
    }

    #[test]
    fn provider_deletion_removes_bean_and_wire() {
        let (mut rt, mut m) = wired();
        let cursor = m.head_seq();
        let b2 = m.nodes().find(|n| n.attr("uid") == Some(&Value::from("b2"))).unwrap().id;
        m.delete_node(b2).unwrap();
        let batch = m.snapshot(cursor).unwrap();
        let r = apply_effector(&mut rt, &m, &batch);
        assert_eq!(r.applied.len(), 1, "{r:?}");
        assert!(r.rejected.is_empty() && r.stale.is_empty(), "{r:?}");
        assert!(rt.bean("b2").is_none());
        assert!(rt.bean("b1").unwrap().wires.is_empty());
        assert!(pump_sensors(&rt, &mut m).unwrap().is_empty());
    }

    #[test]
    fn unknown_runtime_element_is_stale() {
        let (_, mut m) = wired();
        let mut empty = Runtime::new(0);
        let cursor = m.head_seq();
        let w = m.edges().find(|e| e.ty == "wire").unwrap().id;
        m.delete_edge(w).unwrap();
        let r = apply_effector(&mut empty, &m, &m.snapshot(cursor).unwrap());
        assert_eq!(r.stale.len(), 1);
    }
}
