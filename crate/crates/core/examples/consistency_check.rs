//! Detecting drift between a source model, a view and their
//! correspondence model after edits that bypass synchronisation.
//!
//! cargo run --example consistency_check

use rtsync::runtime::SourceBuilder;
use rtsync::tgg::{check_consistency, transform_forward};
use rtsync::views::catalog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rules = &catalog().arch_rules;
    let mut source = SourceBuilder::empty("src");
    let mut b = SourceBuilder::new(&mut source);
    let k = b.container("server")?;
    let shop = b.module(k, "shop")?;
    let cart = b.session_bean(shop, "Cart")?;
    b.provides(cart, "ICart")?;

    let (mut view, corr, _) = transform_forward(&source, rules)?;
    println!("fresh triple: {} finding(s)", check_consistency(rules, &source, &view, &corr).len());

    source.set_attr(cart, "name", "Basket")?;
    let port = view.nodes().find(|n| n.ty == "Port").map(|n| n.id).ok_or("no port")?;
    view.delete_node(port)?;
    let report = check_consistency(rules, &source, &view, &corr);
    println!("{}", report.to_json());
    Ok(())
}
