//! Executes search plans against a triple of models.

use std::collections::HashSet;

use super::corr::CorrespondenceModel;
use super::plan::{Lookup, SearchPlan};
use super::rule::{Direction, Domain, ElementKind, Marking, TggRule};
use crate::model::{ElementId, Model, Value};

/// A partial or complete match, indexed by rule variable.
pub type Binding = Vec<Option<ElementId>>;

/// Read access to the three graphs of a triple.
#[derive(Clone, Copy)]
pub struct Graphs<'a> {
    pub source: &'a Model,
    pub target: &'a Model,
    pub corr: &'a CorrespondenceModel,
}

impl<'a> Graphs<'a> {
    pub fn model(&self, domain: Domain) -> Option<&'a Model> {
        match domain {
            Domain::Source => Some(self.source),
            Domain::Target => Some(self.target),
            Domain::Corr => None,
        }
    }

    pub fn attr(&self, domain: Domain, id: ElementId, name: &str) -> Option<Value> {
        self.model(domain)?.attr(id, name).cloned()
    }

    /// Whether `id` exists in `domain` as an element of pattern kind
    /// `kind` and type `ty` (subtypes admitted for nodes).
    pub fn fits(&self, domain: Domain, kind: ElementKind, ty: &str, id: ElementId) -> bool {
        match (domain, kind) {
            (Domain::Corr, _) => self.corr.node(id).is_some_and(|c| c.ty == ty),
            (d, ElementKind::Node) => {
                let m = self.model(d).unwrap();
                m.node(id).is_some_and(|n| m.meta().conforms(&n.ty, ty))
            }
            (d, ElementKind::Edge) => self.model(d).unwrap().edge(id).is_some_and(|e| e.ty == ty),
        }
    }
}

/// Distinct elements inspected while matching or rewriting.
#[derive(Debug, Default, Clone)]
pub struct Touched(HashSet<(Domain, ElementId)>);

impl Touched {
    pub fn insert(&mut self, domain: Domain, id: ElementId) {
        self.0.insert((domain, id));
    }

    pub fn count(&self) -> usize {
        self.0.len()
    }
}

/// Every admissible complete binding of `rule` in direction `dir` whose
/// default anchor is `anchor`, in ascending id order per plan step.
/// An anchor of the wrong type yields no bindings.
pub fn match_rule(rule: &TggRule, dir: Direction, g: &Graphs, anchor: ElementId) -> Vec<Binding> {
    match rule.default_anchor(dir) {
        Some(var) => match_at(rule, dir, g, var, anchor, &mut Touched::default()),
        None => Vec::new(),
    }
}

/// Like [`match_rule`] with an explicit anchor variable.
pub fn match_at(rule: &TggRule, dir: Direction, g: &Graphs, var: usize, anchor: ElementId, touched: &mut Touched) -> Vec<Binding> {
    let Some(plan) = rule.plan_from(dir, var) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut binding: Binding = vec![None; rule.elements.len()];
    let mut m = Matcher {
        rule,
        plan,
        g,
        dir,
        touched,
        anchor,
        out: &mut out,
    };
    m.extend(0, &mut binding);
    out
}

struct Matcher<'r, 'g, 't, 'o> {
    rule: &'r TggRule,
    plan: &'r SearchPlan,
    g: &'r Graphs<'g>,
    dir: Direction,
    touched: &'t mut Touched,
    anchor: ElementId,
    out: &'o mut Vec<Binding>,
}

impl Matcher<'_, '_, '_, '_> {
    fn candidates(&self, lookup: Lookup, var: usize, b: &Binding) -> Vec<ElementId> {
        let e = &self.rule.elements[var];
        let bound = |v: usize| b[v].expect("plan binds predecessors first");
        let model = |v: usize| self.g.model(self.rule.elements[v].domain);
        match lookup {
            Lookup::Anchor => vec![self.anchor],
            Lookup::EdgeSource(v) => model(v).and_then(|m| m.edge(bound(v))).map(|x| x.src).into_iter().collect(),
            Lookup::EdgeTarget(v) => model(v).and_then(|m| m.edge(bound(v))).map(|x| x.dst).into_iter().collect(),
            Lookup::OutEdge(v) => model(v)
                .map(|m| m.out_edges(bound(v)).filter(|x| x.ty == e.ty).map(|x| x.id).collect())
                .unwrap_or_default(),
            Lookup::InEdge(v) => model(v)
                .map(|m| m.in_edges(bound(v)).filter(|x| x.ty == e.ty).map(|x| x.id).collect())
                .unwrap_or_default(),
            Lookup::CorrOfSource(v) => self.g.corr.of_source(bound(v)).filter(|c| c.ty == e.ty).map(|c| c.id).collect(),
            Lookup::CorrOfTarget(v) => self.g.corr.of_target(bound(v)).filter(|c| c.ty == e.ty).map(|c| c.id).collect(),
            Lookup::CorrSource(v) => self.g.corr.node(bound(v)).map(|c| c.source).into_iter().collect(),
            Lookup::CorrTarget(v) => self.g.corr.node(bound(v)).map(|c| c.target).into_iter().collect(),
        }
    }

    fn admissible(&self, var: usize, id: ElementId, b: &Binding) -> bool {
        let e = &self.rule.elements[var];
        if !self.g.fits(e.domain, e.kind, &e.ty, id) {
            return false;
        }
        let clash = self
            .rule
            .elements
            .iter()
            .zip(b.iter())
            .any(|(o, x)| o.domain == e.domain && *x == Some(id));
        if clash {
            return false;
        }
        if e.domain == Domain::Corr {
            return true;
        }
        let covered = self.g.corr.is_covered(e.domain, id);
        match e.marking {
            Marking::Created => e.domain == self.dir.input() && !covered,
            Marking::Context => covered,
        }
    }

    fn links_hold(&self, links: &[usize], b: &Binding) -> bool {
        links.iter().all(|&l| {
            let e = &self.rule.elements[l];
            let (id, s, t) = (b[l].unwrap(), b[e.src.unwrap()].unwrap(), b[e.dst.unwrap()].unwrap());
            match e.domain {
                Domain::Corr => self.g.corr.node(id).is_some_and(|c| c.source == s && c.target == t),
                d => self.g.model(d).unwrap().edge(id).is_some_and(|x| x.src == s && x.dst == t),
            }
        })
    }

    fn extend(&mut self, depth: usize, b: &mut Binding) {
        let Some(step) = self.plan.steps.get(depth) else {
            self.out.push(b.clone());
            return;
        };
        let domain = self.rule.elements[step.var].domain;
        for id in self.candidates(step.lookup, step.var, b) {
            self.touched.insert(domain, id);
            if !self.admissible(step.var, id, b) {
                continue;
            }
            b[step.var] = Some(id);
            if self.links_hold(&step.links, b)
                && step
                    .constraints
                    .iter()
                    .all(|&c| constraint_holds(self.rule, c, self.g, |v| b[v]))
            {
                self.extend(depth + 1, b);
            }
            b[step.var] = None;
        }
    }
}

/// Evaluates constraint `c` of `rule` as an equation over bound elements.
pub(crate) fn constraint_holds(rule: &TggRule, c: usize, g: &Graphs, bound: impl Fn(usize) -> Option<ElementId>) -> bool {
    let c = &rule.constraints[c];
    let get = |s: &super::expr::Slot<usize>| g.attr(rule.elements[s.var].domain, bound(s.var)?, &s.attr);
    let Some(actual) = get(&c.slot) else {
        return false;
    };
    c.expr.eval(actual.kind(), get).as_ref() == Some(&actual)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::MetaModel;
    use crate::tgg::RuleSet;

    fn setup() -> (RuleSet, Model) {
        let src = Arc::new(
            MetaModel::from_json(
                r#"{"name":"s","nodeTypes":[{"name":"A"},{"name":"B","attributes":[{"name":"n","kind":"string"}]}],
                "edgeTypes":[{"name":"ab","source":"A","target":"B","upper":"*"},{"name":"bb","source":"B","target":"B","upper":"*"}]}"#,
            )
            .unwrap(),
        );
        let tgt = Arc::new(MetaModel::from_json(r#"{"name":"t","nodeTypes":[{"name":"X"}]}"#).unwrap());
        let rules = RuleSet::from_json(
            r#"{"name":"r","sourceMetaModel":"s","targetMetaModel":"t","direction":"forward-only",
            "corrTypes":[{"name":"BX","source":"bb","target":"X"}],
            "rules":[{"name":"Link","elements":[
              {"var":"p","kind":"node","type":"B","domain":"source","marking":"created"},
              {"var":"q","kind":"node","type":"B","domain":"source","marking":"created"},
              {"var":"e","kind":"edge","type":"bb","domain":"source","marking":"created","src":"p","dst":"q"},
              {"var":"x","kind":"node","type":"X","domain":"target","marking":"created"},
              {"var":"c","kind":"node","type":"BX","domain":"corr","marking":"created","src":"e","dst":"x"}]}]}"#,
            src.clone(),
            tgt,
        )
        .unwrap();
        (rules, Model::new("s", src))
    }

    /// Brute force: every assignment of (p, q, e) that is type-correct,
    /// injective and structurally consistent.
    fn brute(m: &Model) -> Vec<(ElementId, ElementId, ElementId)> {
        let bs: Vec<_> = m.nodes().filter(|n| n.ty == "B").map(|n| n.id).collect();
        let mut out = Vec::new();
        for &p in &bs {
            for &q in &bs {
                for e in m.edges().filter(|e| e.ty == "bb") {
                    if p != q && e.src == p && e.dst == q {
                        out.push((p, q, e.id));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn parallel_edges_match_in_id_order() {
        let (rules, mut m) = setup();
        let p = m.create_node("B", [("n", "p")]).unwrap();
        let q = m.create_node("B", [("n", "q")]).unwrap();
        let e1 = m.create_edge("bb", p, q).unwrap();
        let e2 = m.create_edge("bb", p, q).unwrap();
        let tgt = Model::new("t", rules.target_meta.clone());
        let corr = CorrespondenceModel::new();
        let g = Graphs {
            source: &m,
            target: &tgt,
            corr: &corr,
        };
        let rule = &rules.rules[0];
        let found: Vec<_> = match_rule(rule, Direction::Forward, &g, p)
            .into_iter()
            .map(|b| (b[0].unwrap(), b[1].unwrap(), b[2].unwrap()))
            .collect();
        assert_eq!(found, brute(&m));
        assert_eq!(found.iter().map(|t| t.2).collect::<Vec<_>>(), vec![e1, e2]);
        assert!(match_rule(rule, Direction::Forward, &g, e1).is_empty(), "edge is not a B node");
    }

    #[test]
    fn agrees_with_brute_force_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let (rules, mut m) = setup();
            let nodes: Vec<_> = (0..rng.gen_range(1..6)).map(|_| m.create_node("B", [("n", "")]).unwrap()).collect();
            for _ in 0..rng.gen_range(0..10) {
                let a = nodes[rng.gen_range(0..nodes.len())];
                let b = nodes[rng.gen_range(0..nodes.len())];
                m.create_edge("bb", a, b).unwrap();
            }
            let tgt = Model::new("t", rules.target_meta.clone());
            let corr = CorrespondenceModel::new();
            let g = Graphs {
                source: &m,
                target: &tgt,
                corr: &corr,
            };
            let mut found: Vec<_> = nodes
                .iter()
                .flat_map(|&n| match_rule(&rules.rules[0], Direction::Forward, &g, n))
                .map(|b| (b[0].unwrap(), b[1].unwrap(), b[2].unwrap()))
                .collect();
            found.sort();
            let mut expected = brute(&m);
            expected.sort();
            assert_eq!(found, expected);
        }
    }
}
