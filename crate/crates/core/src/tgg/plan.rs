//! Search plans: a fixed order in which pattern variables are bound.

use super::rule::{ConstraintRole, Direction, Domain, ElementKind, TggRule};

/// How a step obtains candidates for its variable from already bound ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lookup {
    /// The element supplied by the caller.
    Anchor,
    /// Source endpoint of the bound edge variable.
    EdgeSource(usize),
    /// Target endpoint of the bound edge variable.
    EdgeTarget(usize),
    /// Outgoing edges of the bound node variable, ascending id.
    OutEdge(usize),
    /// Incoming edges of the bound node variable, ascending id.
    InEdge(usize),
    /// Correspondence nodes linking the bound source variable.
    CorrOfSource(usize),
    /// Correspondence nodes linking the bound target variable.
    CorrOfTarget(usize),
    /// Source element of the bound correspondence variable.
    CorrSource(usize),
    /// Target element of the bound correspondence variable.
    CorrTarget(usize),
}

impl Lookup {
    pub fn is_functional(self) -> bool {
        matches!(
            self,
            Lookup::Anchor | Lookup::EdgeSource(_) | Lookup::EdgeTarget(_) | Lookup::CorrSource(_) | Lookup::CorrTarget(_)
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub var: usize,
    pub lookup: Lookup,
    /// Edge and correspondence variables whose endpoints are all bound
    /// after this step and must be verified.
    pub links: Vec<usize>,
    /// Check-role constraints whose operands are all bound after this step.
    pub constraints: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchPlan {
    pub direction: Direction,
    pub anchor: usize,
    pub steps: Vec<Step>,
}

impl SearchPlan {
    /// Orders every matched variable of `rule` starting at `anchor`.
    /// Functional lookups are preferred; ties go to the earlier variable.
    /// Fails with the name of the first variable that cannot be reached.
    pub fn build(rule: &TggRule, dir: Direction, anchor: usize) -> Result<SearchPlan, String> {
        let n = rule.elements.len();
        let matched: Vec<bool> = (0..n).map(|v| rule.is_matched(v, dir)).collect();
        assert!(matched[anchor], "anchor must be a matched variable");
        let mut bound = vec![false; n];
        let mut steps = Vec::new();
        let mut pending_links: Vec<usize> = (0..n)
            .filter(|&v| matched[v] && rule.elements[v].src.is_some())
            .collect();
        let mut pending_constraints: Vec<usize> = (0..rule.constraints.len())
            .filter(|&i| rule.role(&rule.constraints[i], dir) == ConstraintRole::Check)
            .collect();

        let mut next = Some((anchor, Lookup::Anchor));
        while let Some((var, lookup)) = next {
            bound[var] = true;
            let mut links = Vec::new();
            pending_links.retain(|&l| {
                let e = &rule.elements[l];
                let ready = bound[l] && bound[e.src.unwrap()] && bound[e.dst.unwrap()];
                if ready {
                    links.push(l);
                }
                !ready
            });
            let mut constraints = Vec::new();
            pending_constraints.retain(|&i| {
                let c = &rule.constraints[i];
                let ready = bound[c.slot.var] && c.expr.operands().iter().all(|s| bound[s.var]);
                if ready {
                    constraints.push(i);
                }
                !ready
            });
            steps.push(Step {
                var,
                lookup,
                links,
                constraints,
            });
            next = choose(rule, &matched, &bound);
        }
        if let Some(v) = (0..n).find(|&v| matched[v] && !bound[v]) {
            return Err(rule.elements[v].var.clone());
        }
        debug_assert!(pending_links.is_empty());
        Ok(SearchPlan {
            direction: dir,
            anchor,
            steps,
        })
    }
}

fn choose(rule: &TggRule, matched: &[bool], bound: &[bool]) -> Option<(usize, Lookup)> {
    let mut best: Option<(usize, Lookup)> = None;
    for (v, e) in rule.elements.iter().enumerate() {
        if !matched[v] || bound[v] {
            continue;
        }
        let mut options = Vec::new();
        match (e.domain, e.kind) {
            (Domain::Corr, _) => {
                let (s, t) = (e.src.unwrap(), e.dst.unwrap());
                if bound[s] {
                    options.push(Lookup::CorrOfSource(s));
                }
                if bound[t] {
                    options.push(Lookup::CorrOfTarget(t));
                }
            }
            (_, ElementKind::Edge) => {
                let (s, t) = (e.src.unwrap(), e.dst.unwrap());
                if bound[s] {
                    options.push(Lookup::OutEdge(s));
                }
                if bound[t] {
                    options.push(Lookup::InEdge(t));
                }
            }
            (_, ElementKind::Node) => {
                for (u, o) in rule.elements.iter().enumerate() {
                    if !bound[u] {
                        continue;
                    }
                    match (o.domain, o.kind) {
                        (Domain::Corr, _) if o.src == Some(v) => options.push(Lookup::CorrSource(u)),
                        (Domain::Corr, _) if o.dst == Some(v) => options.push(Lookup::CorrTarget(u)),
                        (Domain::Corr, _) => {}
                        (_, ElementKind::Edge) if o.src == Some(v) => options.push(Lookup::EdgeSource(u)),
                        (_, ElementKind::Edge) if o.dst == Some(v) => options.push(Lookup::EdgeTarget(u)),
                        _ => {}
                    }
                }
            }
        }
        // Edge variables may also be reached from a bound correspondence.
        if e.kind == ElementKind::Edge {
            for (u, o) in rule.elements.iter().enumerate() {
                if bound[u] && o.domain == Domain::Corr {
                    if o.src == Some(v) {
                        options.push(Lookup::CorrSource(u));
                    } else if o.dst == Some(v) {
                        options.push(Lookup::CorrTarget(u));
                    }
                }
            }
        }
        let Some(&pick) = options.iter().find(|l| l.is_functional()).or(options.first()) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((_, b)) => pick.is_functional() && !b.is_functional(),
        };
        if better {
            best = Some((v, pick));
        }
    }
    best
}
