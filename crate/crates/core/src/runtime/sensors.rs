//! Diff-based sensor pump: runtime state into the EJB source model.

use std::collections::{BTreeMap, HashSet};

use super::sim::{BeanState, Runtime};
use crate::model::{ChangeBatch, ElementId, Model, ModelError, Value};

/// Brings `model` in line with `rt` through the journal and returns the
/// records it produced. Elements are matched by `uid` (containers,
/// modules, beans), by name under their bean (interfaces) and by
/// `(typeName, atMs)` multiset (exception records). An up-to-date model
/// yields an empty batch.
pub fn pump_sensors(rt: &Runtime, model: &mut Model) -> Result<ChangeBatch, ModelError> {
    let cursor = model.head_seq();
    let mut pump = Pump {
        model,
        claimed: HashSet::new(),
    };
    let mut bean_ids: BTreeMap<&str, ElementId> = BTreeMap::new();
    let roots: Vec<ElementId> = pump.of_type("Container").filter(|&n| pump.model.container_of(n).is_none()).collect();
    let mut containers: BTreeMap<&str, ElementId> = BTreeMap::new();
    for id in roots {
        let uid = pump.uid(id);
        match rt.containers().get_key_value(uid.as_str()) {
            Some((k, _)) if !containers.contains_key(k.as_str()) => {
                containers.insert(k, id);
                pump.claimed.insert(id);
            }
            _ => pump.delete(id)?,
        }
    }
    for (cuid, c) in rt.containers() {
        let cid = match containers.get(cuid.as_str()) {
            Some(&id) => id,
            None => pump.create("Container", [("uid", cuid.as_str()), ("name", cuid.as_str())])?,
        };
        pump.sync_attr(cid, "name", cuid.as_str())?;
        let mut modules: BTreeMap<&str, ElementId> = BTreeMap::new();
        for id in pump.children(cid, "modules") {
            let uid = pump.uid(id);
            match c.modules.get_key_value(uid.as_str()) {
                Some((k, _)) if !modules.contains_key(k.as_str()) => {
                    modules.insert(k, id);
                    pump.claimed.insert(id);
                }
                _ => pump.delete(id)?,
            }
        }
        for (muid, m) in &c.modules {
            let mid = match modules.get(muid.as_str()) {
                Some(&id) => id,
                None => {
                    let id = pump.create("EjbModule", [("uid", muid.as_str()), ("name", m.name.as_str())])?;
                    pump.model.create_edge("modules", cid, id)?;
                    id
                }
            };
            pump.sync_attr(mid, "name", m.name.as_str())?;
            let mut beans: BTreeMap<&str, ElementId> = BTreeMap::new();
            for id in pump.children(mid, "beans") {
                let uid = pump.uid(id);
                match m.beans.get_key_value(uid.as_str()) {
                    Some((k, b)) if !beans.contains_key(k.as_str()) && pump.model.type_of(id) == Some(bean_type(b)) => {
                        beans.insert(k, id);
                        pump.claimed.insert(id);
                    }
                    _ => pump.delete(id)?,
                }
            }
            for (buid, b) in &m.beans {
                let bid = match beans.get(buid.as_str()) {
                    Some(&id) => id,
                    None => {
                        let id = pump.model.create_node(
                            bean_type(b),
                            [
                                ("uid", Value::from(buid.as_str())),
                                ("name", Value::from(b.name.as_str())),
                                ("kind", Value::from(b.kind.as_str())),
                                ("callCount", Value::Int(b.call_count as i64)),
                                ("totalTimeMs", Value::Int(b.total_time_ms as i64)),
                            ],
                        )?;
                        pump.claimed.insert(id);
                        pump.model.create_edge("beans", mid, id)?;
                        id
                    }
                };
                pump.sync_bean(bid, b)?;
                bean_ids.insert(buid, bid);
            }
        }
    }
    // Wires need every provider bean in place.
    for b in rt.beans() {
        let bid = bean_ids[b.id.as_str()];
        for i in pump.children(bid, "provides") {
            for w in pump.out(i, "wire") {
                pump.model.delete_edge(w)?;
            }
        }
        for i in pump.children(bid, "requires") {
            let name = pump.name(i);
            let want = b.wires.get(&name).map(|p| bean_ids[p.as_str()]);
            let mut have = false;
            for w in pump.out(i, "wire") {
                let keep = !have && Some(pump.model.edge(w).unwrap().dst) == want;
                if keep {
                    have = true;
                } else {
                    pump.model.delete_edge(w)?;
                }
            }
            if let (Some(p), false) = (want, have) {
                pump.model.create_edge("wire", i, p)?;
            }
        }
    }
    let stray: Vec<ElementId> = pump
        .model
        .nodes()
        .filter(|n| !pump.claimed.contains(&n.id))
        .map(|n| n.id)
        .collect();
    for id in stray {
        if pump.model.contains(id) {
            pump.model.delete_node(id)?;
        }
    }
    model.snapshot(cursor)
}

fn bean_type(b: &BeanState) -> &'static str {
    if b.kind == "message-driven" {
        "MessageDrivenBean"
    } else {
        "SessionBean"
    }
}

struct Pump<'m> {
    model: &'m mut Model,
    claimed: HashSet<ElementId>,
}

impl Pump<'_> {
    fn of_type<'a>(&'a self, ty: &'a str) -> impl Iterator<Item = ElementId> + 'a {
        self.model.nodes().filter(move |n| n.ty == ty).map(|n| n.id)
    }

    fn children(&self, parent: ElementId, edge: &str) -> Vec<ElementId> {
        self.model.out_edges(parent).filter(|e| e.ty == edge).map(|e| e.dst).collect()
    }

    fn out(&self, node: ElementId, edge: &str) -> Vec<ElementId> {
        self.model.out_edges(node).filter(|e| e.ty == edge).map(|e| e.id).collect()
    }

    fn text(&self, id: ElementId, attr: &str) -> String {
        self.model.attr(id, attr).and_then(Value::as_str).unwrap_or_default().to_string()
    }

    fn uid(&self, id: ElementId) -> String {
        self.text(id, "uid")
    }

    fn name(&self, id: ElementId) -> String {
        self.text(id, "name")
    }

    fn delete(&mut self, id: ElementId) -> Result<(), ModelError> {
        self.model.delete_node(id).map(drop)
    }

    fn create<'a>(
        &mut self,
        ty: &str,
        attrs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<ElementId, ModelError> {
        let id = self.model.create_node(ty, attrs)?;
        self.claimed.insert(id);
        Ok(id)
    }

    fn sync_attr(&mut self, id: ElementId, name: &str, value: impl Into<Value>) -> Result<(), ModelError> {
        let value = value.into();
        if self.model.attr(id, name) != Some(&value) {
            self.model.set_attr(id, name, value)?;
        }
        Ok(())
    }

    fn sync_bean(&mut self, bid: ElementId, b: &BeanState) -> Result<(), ModelError> {
        self.sync_attr(bid, "name", b.name.as_str())?;
        self.sync_attr(bid, "kind", b.kind.as_str())?;
        self.sync_attr(bid, "callCount", b.call_count as i64)?;
        self.sync_attr(bid, "totalTimeMs", b.total_time_ms as i64)?;
        for (edge, names) in [("provides", &b.provided_interfaces), ("requires", &b.required_interfaces)] {
            let mut seen = HashSet::new();
            for i in self.children(bid, edge) {
                let name = self.name(i);
                if names.contains(&name) && seen.insert(name) {
                    self.claimed.insert(i);
                } else {
                    self.delete(i)?;
                }
            }
            for name in names.iter().filter(|n| !seen.contains(*n)) {
                let i = self.create("Interface", [("name", name.as_str())])?;
                self.model.create_edge(edge, bid, i)?;
            }
        }
        let mut pending: Vec<(String, i64)> =
            b.exceptions.iter().map(|x| (x.type_name.clone(), x.at_ms as i64)).collect();
        for x in self.children(bid, "exceptions") {
            let key = (self.text(x, "typeName"), self.model.attr(x, "atMs").and_then(Value::as_i64).unwrap_or(-1));
            match pending.iter().position(|p| *p == key) {
                Some(at) => {
                    pending.remove(at);
                    self.claimed.insert(x);
                }
                None => self.delete(x)?,
            }
        }
        for (type_name, at_ms) in pending {
            let x = self.model.create_node(
                "ExceptionRecord",
                [("typeName", Value::from(type_name)), ("atMs", Value::Int(at_ms))],
            )?;
            self.claimed.insert(x);
            self.model.create_edge("exceptions", bid, x)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Change;
    use crate::runtime::scenario::{Action, BeanSpec, ModuleSpec, Scenario};
    use crate::runtime::SourceBuilder;

    fn deploy(name: &str, beans: Vec<BeanSpec>) -> Action {
        Action::Deploy {
            module: ModuleSpec {
                name: name.into(),
                container: "server".into(),
                beans,
            },
        }
    }

    fn bean(name: &str, provides: &[&str], requires: &[&str]) -> BeanSpec {
        BeanSpec {
            name: name.into(),
            kind: "stateless".into(),
            provides: provides.iter().map(|s| s.to_string()).collect(),
            requires: requires.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn run(steps: Vec<Action>) -> (Runtime, Model) {
        let s = Scenario { seed: 3, steps };
        let mut rt = Runtime::for_scenario(&s);
        if !s.is_empty() {
            rt.step(&s, s.len()).unwrap();
        }
        let mut m = SourceBuilder::empty("src");
        pump_sensors(&rt, &mut m).unwrap();
        (rt, m)
    }

    #[test]
    fn second_pump_is_empty() {
        let (rt, mut m) = run(vec![deploy("m", vec![bean("a", &["I"], &[]), bean("b", &[], &["I"])])]);
        assert!(pump_sensors(&rt, &mut m).unwrap().is_empty());
    }

    #[test]
    fn one_invoke_sets_two_counters() {
        let s = Scenario {
            seed: 0,
            steps: vec![
                deploy("m", vec![bean("a", &[], &[])]),
                Action::Invoke {
                    bean: "a".into(),
                    duration_ms: Some(7),
                },
            ],
        };
        let mut rt = Runtime::for_scenario(&s);
        let mut m = SourceBuilder::empty("src");
        rt.step(&s, 1).unwrap();
        pump_sensors(&rt, &mut m).unwrap();
        rt.step(&s, 1).unwrap();
        let batch = pump_sensors(&rt, &mut m).unwrap();
        let names: Vec<&str> = batch
            .records
            .iter()
            .map(|r| match &r.change {
                Change::AttributeSet { name, .. } => name.as_str(),
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        assert_eq!(names, ["callCount", "totalTimeMs"]);
    }

    #[test]
    fn module_deploy_record_count() {
        let s = Scenario {
            seed: 0,
            steps: vec![deploy("base", vec![]), deploy("m", vec![bean("a", &["I"], &[])])],
        };
        let mut rt = Runtime::for_scenario(&s);
        let mut m = SourceBuilder::empty("src");
        rt.step(&s, 1).unwrap();
        pump_sensors(&rt, &mut m).unwrap();
        rt.step(&s, 1).unwrap();
        let batch = pump_sensors(&rt, &mut m).unwrap();
        let kinds: Vec<&str> = batch.records.iter().map(|r| r.change.kind_name()).collect();
        // module, modules edge, bean, beans edge, interface, provides edge
        assert_eq!(
            kinds,
            ["node-created", "edge-created", "node-created", "edge-created", "node-created", "edge-created"]
        );
    }

    #[test]
    fn wires_follow_runtime() {
        let (rt, m) = run(vec![
            deploy("m", vec![bean("a", &["I"], &[]), bean("b", &[], &["I"])]),
            Action::Wire {
                bean: "b".into(),
                iface: "I".into(),
                provider: "a".into(),
            },
        ]);
        let wires: Vec<_> = m.edges().filter(|e| e.ty == "wire").collect();
        assert_eq!(wires.len(), 1);
        assert_eq!(m.attr(wires[0].dst, "uid").and_then(Value::as_str), Some("a"));
        assert!(crate::model::validate(&m).is_empty());
        assert!(rt.check_invariants().is_ok());
    }

    #[test]
    fn foreign_elements_are_removed() {
        let (rt, mut m) = run(vec![deploy("m", vec![bean("a", &[], &[])])]);
        let k = m.nodes().find(|n| n.ty == "Container").unwrap().id;
        SourceBuilder::new(&mut m).module(k, "intruder").unwrap();
        let batch = pump_sensors(&rt, &mut m).unwrap();
        assert!(!batch.is_empty());
        assert!(pump_sensors(&rt, &mut m).unwrap().is_empty());
        assert_eq!(m.nodes().filter(|n| n.ty == "EjbModule").count(), 1);
    }
}
