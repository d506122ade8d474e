use std::sync::Arc;

use super::*;
use crate::model::{isomorphic, validate, ElementId, Model};
use crate::runtime::SourceBuilder;
use crate::views::catalog;

fn arch() -> Arc<RuleSet> {
    catalog().arch_rules.clone()
}

fn count(m: &Model, ty: &str) -> usize {
    m.nodes().filter(|n| n.ty == ty).count() + m.edges().filter(|e| e.ty == ty).count()
}

/// The session's triple equals a from-scratch transform of `source`.
fn assert_matches_batch(session: &SyncSession, source: &Model) {
    let rules = session.rules();
    let (t, c, _) = transform_forward(source, rules).unwrap();
    let fresh = triple_model(rules, source, &t, &c);
    let live = triple_model(rules, source, session.target(), session.corr());
    assert!(isomorphic(&fresh, &live).unwrap().is_some(), "incremental result differs from batch");
    assert!(session.check_consistency(source).is_empty());
    assert!(validate(session.target()).is_empty());
}

fn billing() -> (Model, ElementId, ElementId) {
    let mut m = SourceBuilder::empty("src");
    let mut b = SourceBuilder::new(&mut m);
    let k = b.container("server").unwrap();
    let module = b.module(k, "shop").unwrap();
    b.session_bean(module, "Billing").unwrap();
    (m, k, module)
}

#[test]
fn empty_source_gives_empty_view() {
    let src = SourceBuilder::empty("src");
    let (t, c, r) = transform_forward(&src, &arch()).unwrap();
    assert!(t.is_empty());
    assert_eq!(c.application_count(), 0);
    assert!(r.added.is_empty() && r.uncovered.is_empty());
}

#[test]
fn single_bean_hand_applied() {
    // Axiom, module rule and bean rule each fire once.
    let (src, _, _) = billing();
    let (t, c, r) = transform_forward(&src, &arch()).unwrap();
    assert_eq!(c.application_count(), 3);
    assert_eq!(r.added.len(), 3);
    assert_eq!(count(&t, "ArchitectureModel"), 1);
    assert_eq!(count(&t, "Component"), 1);
    assert_eq!(count(&t, "components"), 1);
    assert_eq!(t.element_count(), 3);
    let comp = t.nodes().find(|n| n.ty == "Component").unwrap();
    assert_eq!(comp.attr("name").and_then(|v| v.as_str()), Some("Billing"));
    assert!(r.uncovered.is_empty());
}

fn wired_pair() -> (Model, ElementId, ElementId, ElementId) {
    let mut m = SourceBuilder::empty("src");
    let mut b = SourceBuilder::new(&mut m);
    let k = b.container("server").unwrap();
    let module = b.module(k, "shop").unwrap();
    let cart = b.session_bean(module, "Cart").unwrap();
    let pay = b.session_bean(module, "Payment").unwrap();
    let need = b.requires(cart, "IPay").unwrap();
    b.provides(pay, "IPay").unwrap();
    let w = b.wire(need, pay).unwrap();
    (m, cart, pay, w)
}

#[test]
fn wire_becomes_connector_between_corresponding_components() {
    let (src, cart, pay, _) = wired_pair();
    let rules = arch();
    let (t, c, r) = transform_forward(&src, &rules).unwrap();
    assert!(r.uncovered.is_empty(), "{:?}", r.uncovered);
    assert_eq!(count(&t, "Component"), 2);
    assert_eq!(count(&t, "Port"), 2);
    assert_eq!(count(&t, "Connector"), 1);
    let comp_of = |bean| c.of_source(bean).find(|n| n.ty == "BeanComponent").unwrap().target;
    let cn = t.nodes().find(|n| n.ty == "Connector").unwrap().id;
    let port_owner = |edge_ty: &str| {
        let port = t.out_edges(cn).find(|e| e.ty == edge_ty).unwrap().dst;
        t.container_of(port).unwrap()
    };
    assert_eq!(port_owner("from"), comp_of(cart));
    assert_eq!(port_owner("to"), comp_of(pay));
    assert!(validate(&t).is_empty());
    assert!(check_consistency(&rules, &src, &t, &c).is_empty());
}

#[test]
fn backward_materialises_containers() {
    let rules = arch();
    let mut view = Model::new("view", catalog().arch.clone());
    let a = view.create_node("ArchitectureModel", [("name", "server")]).unwrap();
    let c = view.create_node("Component", [("name", "Billing")]).unwrap();
    view.create_edge("components", a, c).unwrap();
    let (src, corr, r) = transform_backward(&view, &rules).unwrap();
    assert!(r.uncovered.is_empty());
    assert_eq!(corr.application_count(), 3);
    assert_eq!(count(&src, "Container"), 1);
    assert_eq!(count(&src, "EjbModule"), 1);
    let bean = src.nodes().find(|n| n.ty == "SessionBean").unwrap();
    assert_eq!(bean.attr("name").and_then(|v| v.as_str()), Some("Billing"));
    assert_eq!(bean.attr("kind").and_then(|v| v.as_str()), Some("stateless"));
    let module = src.nodes().find(|n| n.ty == "EjbModule").unwrap();
    assert_eq!(module.attr("name").and_then(|v| v.as_str()), Some("default"));
    assert!(validate(&src).is_empty());
}

#[test]
fn forward_only_rules_refuse_backward() {
    let view = Model::new("view", catalog().perf.clone());
    assert!(matches!(transform_backward(&view, &catalog().perf_rules), Err(SyncError::ForwardOnly(_))));
}

#[test]
fn empty_batch_is_a_noop() {
    let (src, _, _) = billing();
    let (mut s, _) = SyncSession::new(arch(), &src).unwrap();
    let before = s.target().to_json();
    let r = s.sync_forward(&src, &src.snapshot(s.source_cursor()).unwrap()).unwrap();
    assert!(r.is_noop());
    assert_eq!(r.touched, 0);
    assert_eq!(s.target().to_json(), before);
}

#[test]
fn adding_a_bean_adds_one_application() {
    let (mut src, _, module) = billing();
    let (mut s, _) = SyncSession::new(arch(), &src).unwrap();
    SourceBuilder::new(&mut src).session_bean(module, "Audit").unwrap();
    let batch = src.snapshot(s.source_cursor()).unwrap();
    let r = s.sync_forward(&src, &batch).unwrap();
    assert_eq!(r.added.len(), 1);
    assert_eq!(r.created, 2, "component and its containment edge");
    assert!(r.touched < 15, "touched {}", r.touched);
    assert_matches_batch(&s, &src);
}

#[test]
fn deleting_a_module_revokes_dependents_first() {
    let (mut src, _, module) = billing();
    SourceBuilder::new(&mut src).session_bean(module, "Audit").unwrap();
    let (mut s, _) = SyncSession::new(arch(), &src).unwrap();
    let module_app = s.corr().creator(Domain::Source, module).unwrap();
    src.delete_node(module).unwrap();
    let r = s.sync_forward(&src, &src.snapshot(s.source_cursor()).unwrap()).unwrap();
    assert_eq!(r.revoked.len(), 3);
    assert_eq!(*r.revoked.last().unwrap(), module_app);
    assert_eq!(count(s.target(), "Component"), 0);
    assert_matches_batch(&s, &src);
}

#[test]
fn renaming_propagates_without_revocation() {
    let (mut src, _, _) = billing();
    let (mut s, _) = SyncSession::new(arch(), &src).unwrap();
    let bean = src.nodes().find(|n| n.ty == "SessionBean").unwrap().id;
    src.set_attr(bean, "name", "Invoicing").unwrap();
    src.set_attr(bean, "callCount", 4i64).unwrap();
    let r = s.sync_forward(&src, &src.snapshot(s.source_cursor()).unwrap()).unwrap();
    assert!(r.revoked.is_empty() && r.added.is_empty());
    assert_eq!(r.attributes_updated, 1);
    assert_matches_batch(&s, &src);
}

#[test]
fn interface_rename_breaks_and_restores_connector() {
    let (mut src, _, pay, _) = wired_pair();
    let (mut s, _) = SyncSession::new(arch(), &src).unwrap();
    let provided = src.out_edges(pay).find(|e| e.ty == "provides").unwrap().dst;
    src.set_attr(provided, "name", "IOther").unwrap();
    let r = s.sync_forward(&src, &src.snapshot(s.source_cursor()).unwrap()).unwrap();
    assert_eq!(count(s.target(), "Connector"), 0);
    assert_eq!(r.uncovered.len(), 1, "the wire is no longer mappable");
    assert_matches_batch(&s, &src);
    src.set_attr(provided, "name", "IPay").unwrap();
    s.sync_forward(&src, &src.snapshot(s.source_cursor()).unwrap()).unwrap();
    assert_eq!(count(s.target(), "Connector"), 1);
    assert_matches_batch(&s, &src);
}

#[test]
fn batch_errors() {
    let (mut src, _, module) = billing();
    let (mut s, _) = SyncSession::new(arch(), &src).unwrap();
    let other = SourceBuilder::empty("other");
    assert!(matches!(
        s.sync_forward(&src, &other.snapshot(0).unwrap()),
        Err(SyncError::ForeignBatch { .. })
    ));
    SourceBuilder::new(&mut src).session_bean(module, "X").unwrap();
    assert!(matches!(
        s.sync_forward(&src, &src.snapshot(0).unwrap()),
        Err(SyncError::CursorMismatch { .. })
    ));
    let batch = src.snapshot(s.source_cursor()).unwrap();
    SourceBuilder::new(&mut src).session_bean(module, "Y").unwrap();
    assert!(matches!(s.sync_forward(&src, &batch), Err(SyncError::StaleSource { .. })));
}

#[test]
fn deleting_a_connector_deletes_the_wire() {
    let (mut src, _, _, w) = wired_pair();
    let (mut s, _) = SyncSession::new(arch(), &src).unwrap();
    let cn = s.target().nodes().find(|n| n.ty == "Connector").unwrap().id;
    let head = src.head_seq();
    s.target_mut().delete_node(cn).unwrap();
    let batch = s.pending_target_batch();
    let r = s.sync_backward(&mut src, &batch).unwrap();
    assert_eq!(r.revoked.len(), 1);
    assert!(src.edge(w).is_none());
    assert_eq!(r.segment, Some((head + 1, head + 1)));
    assert_eq!(s.source_cursor(), src.head_seq());
    assert!(s.check_consistency(&src).is_empty());
    // Forward sync over the session's own segment changes nothing.
    let r = s.sync_forward(&src, &src.snapshot(s.source_cursor()).unwrap()).unwrap();
    assert!(r.is_noop());
}

#[test]
fn deleting_a_component_removes_the_bean() {
    let (mut src, cart, _, _) = wired_pair();
    let (mut s, _) = SyncSession::new(arch(), &src).unwrap();
    let comp = s.corr().of_source(cart).find(|n| n.ty == "BeanComponent").unwrap().target;
    s.target_mut().delete_node(comp).unwrap();
    let batch = s.pending_target_batch();
    let head = src.head_seq();
    let r = s.sync_backward(&mut src, &batch).unwrap();
    assert!(src.node(cart).is_none());
    let (a, b) = r.segment.unwrap();
    assert_eq!(a, head + 1);
    assert_eq!(b, src.head_seq());
    assert!(s.check_consistency(&src).is_empty());
    assert!(validate(&src).is_empty());
}

#[test]
fn backward_requires_caught_up_session() {
    let (mut src, _, module, ) = billing();
    let (mut s, _) = SyncSession::new(arch(), &src).unwrap();
    SourceBuilder::new(&mut src).session_bean(module, "Late").unwrap();
    let batch = s.pending_target_batch();
    assert!(matches!(s.sync_backward(&mut src, &batch), Err(SyncError::SessionBehind { .. })));
}

#[test]
fn consistency_detects_raw_edits() {
    let (mut src, _, _) = billing();
    let rules = arch();
    let (mut t, c, _) = transform_forward(&src, &rules).unwrap();
    assert!(check_consistency(&rules, &src, &t, &c).is_empty());

    let bean = src.nodes().find(|n| n.ty == "SessionBean").unwrap().id;
    src.set_attr(bean, "name", "Renamed").unwrap();
    let r = check_consistency(&rules, &src, &t, &c);
    assert_eq!(r.len(), 1);
    assert_eq!(r.findings[0].kind, FindingKind::AttributeConstraint);
    assert!(r.findings[0].detail.contains("`c.name`"));

    let comp = t.nodes().find(|n| n.ty == "Component").unwrap().id;
    let app = c.creator(Domain::Target, comp).unwrap();
    t.delete_node(comp).unwrap();
    let r = check_consistency(&rules, &src, &t, &c);
    assert!(r.findings.iter().all(|f| f.application == app && f.kind == FindingKind::MissingElement));
    assert_eq!(r.len(), 2, "component and its containment edge");
}

#[test]
fn perf_attributes_follow_counters() {
    let (mut src, _, _) = billing();
    let rules = catalog().perf_rules.clone();
    let (mut s, _) = SyncSession::new(rules, &src).unwrap();
    let bean = src.nodes().find(|n| n.ty == "SessionBean").unwrap().id;
    src.set_attr(bean, "callCount", 25i64).unwrap();
    src.set_attr(bean, "totalTimeMs", 3000i64).unwrap();
    let r = s.sync_forward(&src, &src.snapshot(s.source_cursor()).unwrap()).unwrap();
    assert_eq!(r.attributes_updated, 2);
    let pc = s.target().nodes().find(|n| n.ty == "PerfComponent").unwrap();
    assert_eq!(pc.attr("invocationCount"), Some(&crate::model::Value::Int(25)));
    assert_eq!(pc.attr("avgResponseTimeMs"), Some(&crate::model::Value::Real(120.0)));
    assert_matches_batch(&s, &src);
}

#[test]
fn correspondence_document_round_trips() {
    let (src, _, _, _) = wired_pair();
    let rules = arch();
    let (t, c, _) = transform_forward(&src, &rules).unwrap();
    let text = c.to_json(&rules);
    let back = CorrespondenceModel::from_json(&text, &rules).unwrap();
    assert_eq!(back.to_json(&rules), text);
    assert!(check_consistency(&rules, &src, &t, &back).is_empty());
}

#[test]
fn round_trip_on_mapped_subgraph() {
    let (mut src, cart, _, _) = wired_pair();
    SourceBuilder::new(&mut src).exception(cart, "Timeout", 5).unwrap();
    let rules = arch();
    let (t, c, _) = transform_forward(&src, &rules).unwrap();
    let (back, bc, _) = transform_backward(&t, &rules).unwrap();
    let original = mapped_projection(&rules, &src, &c);
    let restored = mapped_projection(&rules, &back, &bc);
    assert!(isomorphic(&original, &restored).unwrap().is_some());
}
