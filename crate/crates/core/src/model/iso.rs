//! Graph isomorphism between two models of the same metamodel.
//!
//! Colour refinement over (type, attributes) seeds and neighbourhood
//! multisets partitions the nodes; a backtracking search then extends a
//! partial bijection node by node in breadth-first order, checking edge
//! multiplicities against already-mapped neighbours. Element ids are never
//! compared.

use std::collections::{BTreeMap, HashMap};

use super::graph::{ElementId, Model};
use super::ModelError;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Witness {
    pub nodes: BTreeMap<ElementId, ElementId>,
    pub edges: BTreeMap<ElementId, ElementId>,
}

pub(crate) fn fnv(bytes: &[u8], seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x100_0000_01b3);
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

fn mix(a: u64, b: u64) -> u64 {
    fnv(&b.to_le_bytes(), a)
}

const OUT: u8 = 0;
const IN: u8 = 1;
const LOOP: u8 = 2;

/// Index-based view of a model used by refinement and search.
pub(crate) struct Compact {
    pub ids: Vec<ElementId>,
    /// Per node: (edge type hash, direction, neighbour index).
    pub adj: Vec<Vec<(u64, u8, usize)>>,
    pub seeds: Vec<u64>,
}

impl Compact {
    pub fn new(model: &Model) -> Self {
        let ids: Vec<ElementId> = model.nodes().map(|n| n.id).collect();
        let index: HashMap<ElementId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let seeds = model
            .nodes()
            .map(|n| {
                let mut h = fnv(n.ty.as_bytes(), 1);
                for (k, v) in &n.attrs {
                    h = mix(h, fnv(k.as_bytes(), 2));
                    h = mix(h, fnv(v.canonical().as_bytes(), 3));
                }
                h
            })
            .collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for e in model.edges() {
            let t = fnv(e.ty.as_bytes(), 4);
            // Dangling edges are ignored; conformant models have none.
            let (Some(&s), Some(&d)) = (index.get(&e.src), index.get(&e.dst)) else {
                continue;
            };
            if s == d {
                adj[s].push((t, LOOP, d));
            } else {
                adj[s].push((t, OUT, d));
                adj[d].push((t, IN, s));
            }
        }
        Compact { ids, adj, seeds }
    }

    fn step(&self, colors: &[u64]) -> Vec<u64> {
        (0..self.ids.len())
            .map(|v| {
                let mut sig: Vec<(u64, u8, u64)> =
                    self.adj[v].iter().map(|&(t, d, w)| (t, d, colors[w])).collect();
                sig.sort_unstable();
                let mut h = mix(colors[v], 0x5eed);
                for (t, d, c) in sig {
                    h = mix(mix(mix(h, t), u64::from(d)), c);
                }
                h
            })
            .collect()
    }
}

fn class_count(colors: &[u64]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Refines colours until the partition is stable. Both graphs are refined
/// in lockstep; `None` means their colour histograms diverged.
fn refine_pair(a: &Compact, b: &Compact) -> Option<(Vec<u64>, Vec<u64>)> {
    let mut ca = a.seeds.clone();
    let mut cb = b.seeds.clone();
    loop {
        if histogram(&ca) != histogram(&cb) {
            return None;
        }
        let na = a.step(&ca);
        let nb = b.step(&cb);
        let stable = class_count(&na) == class_count(&ca);
        ca = na;
        cb = nb;
        if stable {
            return (histogram(&ca) == histogram(&cb)).then_some((ca, cb));
        }
    }
}

/// Stable colouring of a single graph; used for content digests.
pub(crate) fn refine_single(g: &Compact) -> Vec<u64> {
    let mut c = g.seeds.clone();
    loop {
        let n = g.step(&c);
        let stable = class_count(&n) == class_count(&c);
        c = n;
        if stable {
            return c;
        }
    }
}

fn histogram(colors: &[u64]) -> BTreeMap<u64, usize> {
    let mut h = BTreeMap::new();
    for c in colors {
        *h.entry(*c).or_insert(0) += 1;
    }
    h
}

/// Decides whether `a` and `b` are isomorphic. On success the returned
/// witness maps every node and edge of `a` onto `b`.
pub fn isomorphic(a: &Model, b: &Model) -> Result<Option<Witness>, ModelError> {
    if a.meta().name() != b.meta().name() {
        return Err(ModelError::MetaModelMismatch(
            a.meta().name().to_owned(),
            b.meta().name().to_owned(),
        ));
    }
    if a.node_count() != b.node_count() || a.edge_count() != b.edge_count() {
        return Ok(None);
    }
    let ga = Compact::new(a);
    let gb = Compact::new(b);
    let Some((ca, cb)) = refine_pair(&ga, &gb) else {
        return Ok(None);
    };
    let Some(node_map) = search(&ga, &gb, &ca, &cb) else {
        return Ok(None);
    };
    let mut witness = Witness::default();
    for (i, &j) in node_map.iter().enumerate() {
        witness.nodes.insert(ga.ids[i], gb.ids[j]);
    }
    // Pair edges with equal (type, mapped src, mapped dst) in id order.
    let mut groups: HashMap<(&str, ElementId, ElementId), Vec<ElementId>> = HashMap::new();
    for e in b.edges() {
        groups.entry((e.ty.as_str(), e.src, e.dst)).or_default().push(e.id);
    }
    for list in groups.values_mut() {
        list.reverse();
    }
    for e in a.edges() {
        let (Some(&s), Some(&d)) = (witness.nodes.get(&e.src), witness.nodes.get(&e.dst)) else {
            return Ok(None);
        };
        match groups.get_mut(&(e.ty.as_str(), s, d)).and_then(|l| l.pop()) {
            Some(target) => {
                witness.edges.insert(e.id, target);
            }
            None => return Ok(None),
        }
    }
    Ok(Some(witness))
}

fn search(ga: &Compact, gb: &Compact, ca: &[u64], cb: &[u64]) -> Option<Vec<usize>> {
    let n = ga.ids.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut by_color: HashMap<u64, Vec<usize>> = HashMap::new();
    for (j, c) in cb.iter().enumerate() {
        by_color.entry(*c).or_default().push(j);
    }
    let order = bfs_order(ga, ca, &by_color);

    let mut fwd = vec![usize::MAX; n];
    let mut bwd = vec![usize::MAX; n];
    let mut cands: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pos = vec![0usize; n];
    let mut depth = 0usize;
    let mut fresh = true;
    loop {
        if depth == n {
            return Some(fwd);
        }
        let v = order[depth];
        if fresh {
            cands[depth] = by_color[&ca[v]].iter().copied().filter(|&w| bwd[w] == usize::MAX).collect();
            pos[depth] = 0;
        }
        let mut placed = false;
        while pos[depth] < cands[depth].len() {
            let w = cands[depth][pos[depth]];
            pos[depth] += 1;
            if consistent(ga, gb, v, w, &fwd, &bwd) {
                fwd[v] = w;
                bwd[w] = v;
                placed = true;
                break;
            }
        }
        if placed {
            depth += 1;
            fresh = true;
            continue;
        }
        if depth == 0 {
            return None;
        }
        depth -= 1;
        let u = order[depth];
        bwd[fwd[u]] = usize::MAX;
        fwd[u] = usize::MAX;
        fresh = false;
    }
}

fn consistent(ga: &Compact, gb: &Compact, v: usize, w: usize, fwd: &[usize], bwd: &[usize]) -> bool {
    let mut left: Vec<(u64, u8, usize)> = ga.adj[v]
        .iter()
        .filter_map(|&(t, d, x)| match d {
            LOOP => Some((t, d, w)),
            _ if fwd[x] != usize::MAX => Some((t, d, fwd[x])),
            _ => None,
        })
        .collect();
    let mut right: Vec<(u64, u8, usize)> = gb.adj[w]
        .iter()
        .filter(|&&(_, d, y)| d == LOOP || bwd[y] != usize::MAX)
        .copied()
        .collect();
    if left.len() != right.len() {
        return false;
    }
    left.sort_unstable();
    right.sort_unstable();
    left == right
}

fn bfs_order(g: &Compact, colors: &[u64], classes: &HashMap<u64, Vec<usize>>) -> Vec<usize> {
    let n = g.ids.len();
    let rank = |v: usize| (classes.get(&colors[v]).map_or(0, Vec::len), v);
    let mut roots: Vec<usize> = (0..n).collect();
    roots.sort_by_key(|&v| rank(v));
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for r in roots {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        let mut queue = std::collections::VecDeque::from([r]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = g.adj[v].iter().map(|&(_, _, x)| x).filter(|&x| !seen[x]).collect();
            next.sort_by_key(|&x| rank(x));
            next.dedup();
            for x in next {
                if !seen[x] {
                    seen[x] = true;
                    queue.push_back(x);
                }
            }
        }
    }
    order
}
