//! One-shot forward and backward transformation with the architecture
//! rules, checked against the shipped golden view.
//!
//! cargo run --example transform

use rtsync::model::{isomorphic, Model};
use rtsync::tgg::{transform_backward, transform_forward};
use rtsync::views::catalog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = catalog();
    let source = Model::from_json("demo", c.ejb.clone(), include_str!("../fixtures/demo.source.json"))?;
    let (view, corr, report) = transform_forward(&source, &c.arch_rules)?;
    println!("forward: {} application(s), {} element(s) created", report.added.len(), report.created);
    println!("uncovered source elements: {:?}", report.uncovered);
    let golden = Model::from_json("golden", c.arch.clone(), include_str!("../fixtures/demo.arch.golden.json"))?;
    println!("matches golden view: {}", isomorphic(&view, &golden)?.is_some());
    println!("correspondence nodes: {}", corr.node_count());

    let (back, _, report) = transform_backward(&view, &c.arch_rules)?;
    println!("backward: {} application(s); source has {} node(s)", report.added.len(), back.node_count());
    for n in back.nodes() {
        println!("  {} {:?}", n.ty, n.attrs);
    }
    Ok(())
}
