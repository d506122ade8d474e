//! Editing the architecture view and propagating the edit to the source.
//!
//! cargo run --example backward_sync

use rtsync::runtime::SourceBuilder;
use rtsync::tgg::SyncSession;
use rtsync::views::catalog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut source = SourceBuilder::empty("src");
    let mut b = SourceBuilder::new(&mut source);
    let k = b.container("server")?;
    let shop = b.module(k, "shop")?;
    let cart = b.session_bean(shop, "Cart")?;
    let pay = b.session_bean(shop, "Payment")?;
    let need = b.requires(cart, "IPay")?;
    b.provides(pay, "IPay")?;
    b.wire(need, pay)?;

    let (mut session, _) = SyncSession::new(catalog().arch_rules.clone(), &source)?;
    let connector = session.target().nodes().find(|n| n.ty == "Connector").map(|n| n.id).ok_or("no connector")?;
    session.target_mut().delete_node(connector)?;
    let edit = session.pending_target_batch();
    println!("view edit: {} record(s)", edit.len());
    let report = session.sync_backward(&mut source, &edit)?;
    println!("backward: {}", report.to_json());
    println!("wires left in source: {}", source.edges().filter(|e| e.ty == "wire").count());
    println!("consistent: {}", session.check_consistency(&source).is_empty());

    // Components map back to beans; a new one lands in a default module.
    let root = session.target().nodes().find(|n| n.ty == "ArchitectureModel").map(|n| n.id).ok_or("no root")?;
    let c = session.target_mut().create_node("Component", [("name", "Audit")])?;
    session.target_mut().create_edge("components", root, c)?;
    let edit = session.pending_target_batch();
    session.sync_backward(&mut source, &edit)?;
    for n in source.nodes().filter(|n| n.ty == "SessionBean") {
        println!("bean {:?}", n.attrs);
    }
    Ok(())
}
