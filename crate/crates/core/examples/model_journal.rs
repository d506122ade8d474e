//! Models, the change journal and the id-independent comparisons.
//!
//! cargo run --example model_journal

use rtsync::model::{digest, isomorphic, validate, Model};
use rtsync::runtime::SourceBuilder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut m = SourceBuilder::empty("shop");
    let mut b = SourceBuilder::new(&mut m);
    let k = b.container("server")?;
    let module = b.module(k, "shop")?;
    let cart = b.session_bean(module, "Cart")?;
    b.provides(cart, "ICart")?;

    let cursor = m.head_seq();
    m.set_attr(cart, "callCount", 3i64)?;
    m.set_attr(cart, "totalTimeMs", 42i64)?;
    let batch = m.snapshot(cursor)?;
    println!("records since {cursor}: {}", batch.len());
    for r in batch.records.iter() {
        println!("  {}", serde_json::to_string(r)?);
    }

    // Wrong container type: rejected before it reaches the journal.
    let err = m.create_edge("beans", k, cart).unwrap_err();
    println!("rejected: {err}");
    println!("conformance findings: {}", validate(&m).len());

    let (replayed, _) = Model::replay("replayed", m.meta().clone(), m.journal().records())?;
    println!("replay isomorphic: {}", isomorphic(&m, &replayed)?.is_some());
    println!("digests equal: {}", digest(&m) == digest(&replayed));
    println!("{}", m.to_json());
    Ok(())
}
