use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::graph::Model;
use super::iso::{fnv, refine_single, Compact};

/// Id-independent content hash of a model.
///
/// Isomorphic models always share a digest. The hash covers the
/// metamodel name, the stable colour of every node and every edge as
/// (type, source colour, target colour), each list sorted.
pub fn digest(model: &Model) -> String {
    let g = Compact::new(model);
    let colors = refine_single(&g);
    let index: HashMap<_, _> = g.ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();

    let mut node_colors = colors.clone();
    node_colors.sort_unstable();
    let mut edge_keys: Vec<(u64, u64, u64)> = model
        .edges()
        .map(|e| {
            let color = |id| index.get(&id).map_or(0, |&i| colors[i]);
            (fnv(e.ty.as_bytes(), 4), color(e.src), color(e.dst))
        })
        .collect();
    edge_keys.sort_unstable();

    let mut h = Sha256::new();
    h.update(model.meta().name().as_bytes());
    h.update((node_colors.len() as u64).to_le_bytes());
    for c in node_colors {
        h.update(c.to_le_bytes());
    }
    h.update((edge_keys.len() as u64).to_le_bytes());
    for (t, s, d) in edge_keys {
        h.update(t.to_le_bytes());
        h.update(s.to_le_bytes());
        h.update(d.to_le_bytes());
    }
    hex::encode(h.finalize())
}
