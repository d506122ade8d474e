//! A sync session following source edits batch by batch.
//!
//! cargo run --example incremental_sync

use rtsync::runtime::SourceBuilder;
use rtsync::tgg::SyncSession;
use rtsync::views::catalog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut source = SourceBuilder::empty("src");
    let mut b = SourceBuilder::new(&mut source);
    let k = b.container("server")?;
    let shop = b.module(k, "shop")?;
    let cart = b.session_bean(shop, "Cart")?;
    let need = b.requires(cart, "IPay")?;

    let (mut session, initial) = SyncSession::new(catalog().arch_rules.clone(), &source)?;
    println!("initial: {}", initial.to_json());

    let step = |label: &str, source: &rtsync::model::Model, s: &mut SyncSession| {
        let batch = source.snapshot(s.source_cursor()).expect("cursor is valid");
        let r = s.sync_forward(source, &batch).expect("sync");
        println!("{label}: {} record(s) -> {}", batch.len(), r.to_json());
    };

    let mut b = SourceBuilder::new(&mut source);
    let pay = b.session_bean(shop, "Payment")?;
    b.provides(pay, "IPay")?;
    b.wire(need, pay)?;
    step("add provider and wire", &source, &mut session);

    source.set_attr(pay, "name", "Billing")?;
    step("rename provider", &source, &mut session);

    source.delete_node(shop)?;
    step("undeploy module", &source, &mut session);
    println!("view now: {}", session.target().to_json());
    Ok(())
}
