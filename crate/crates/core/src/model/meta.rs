//! Metamodels: node and edge type declarations with single inheritance.
//!
//! A [`MetaModel`] is immutable once built. Construction validates name
//! uniqueness, reference resolution and supertype acyclicity, and
//! precomputes the flattened attribute table and the subtype relation so
//! that conformance checks during mutation are lookups.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::value::ValueKind;
use super::MetaModelError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDecl {
    pub name: String,
    pub kind: ValueKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeType {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supertype: Option<String>,
    #[serde(default, rename = "abstract", skip_serializing_if = "is_false")]
    pub is_abstract: bool,
    #[serde(default)]
    pub attributes: Vec<AttributeDecl>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Upper multiplicity bound of an edge type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Upper {
    Bounded(u32),
    Unbounded,
}

impl Upper {
    pub fn admits(self, count: usize) -> bool {
        match self {
            Upper::Bounded(n) => count <= n as usize,
            Upper::Unbounded => true,
        }
    }
}

impl fmt::Display for Upper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Upper::Bounded(n) => write!(f, "{n}"),
            Upper::Unbounded => f.write_str("*"),
        }
    }
}

impl Serialize for Upper {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Upper::Bounded(n) => s.serialize_u32(*n),
            Upper::Unbounded => s.serialize_str("*"),
        }
    }
}

impl<'de> Deserialize<'de> for Upper {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct UpperVisitor;
        impl Visitor<'_> for UpperVisitor {
            type Value = Upper;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer or \"*\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Upper, E> {
                if v == 0 {
                    return Err(E::custom("upper bound must be positive"));
                }
                u32::try_from(v).map(Upper::Bounded).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Upper, E> {
                if v <= 0 {
                    return Err(E::custom("upper bound must be positive"));
                }
                self.visit_u64(v as u64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Upper, E> {
                if v == "*" {
                    Ok(Upper::Unbounded)
                } else {
                    Err(E::custom(format!("invalid upper bound {v:?}")))
                }
            }
        }
        d.deserialize_any(UpperVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeType {
    pub name: String,
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub containment: bool,
    #[serde(default)]
    pub lower: u32,
    pub upper: Upper,
}

/// On-disk shape of a metamodel document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetaModelDoc {
    pub name: String,
    #[serde(default)]
    pub node_types: Vec<NodeType>,
    #[serde(default)]
    pub edge_types: Vec<EdgeType>,
}

#[derive(Debug)]
pub struct MetaModel {
    doc: MetaModelDoc,
    node_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
    /// Flattened attributes per node type, inherited ones included.
    attributes: HashMap<String, BTreeMap<String, ValueKind>>,
    /// `ancestors[t]` holds `t` and every transitive supertype of `t`.
    ancestors: HashMap<String, HashSet<String>>,
}

impl MetaModel {
    pub fn from_json(text: &str) -> Result<Self, MetaModelError> {
        let doc: MetaModelDoc = serde_json::from_str(text)?;
        Self::from_doc(doc)
    }

    pub fn from_doc(doc: MetaModelDoc) -> Result<Self, MetaModelError> {
        let mut node_index = HashMap::new();
        for (i, nt) in doc.node_types.iter().enumerate() {
            if node_index.insert(nt.name.clone(), i).is_some() {
                return Err(MetaModelError::DuplicateNodeType(nt.name.clone()));
            }
        }
        let mut edge_index = HashMap::new();
        for (i, et) in doc.edge_types.iter().enumerate() {
            if node_index.contains_key(&et.name) || edge_index.insert(et.name.clone(), i).is_some() {
                return Err(MetaModelError::DuplicateEdgeType(et.name.clone()));
            }
        }
        for nt in &doc.node_types {
            if let Some(sup) = &nt.supertype {
                if !node_index.contains_key(sup) {
                    return Err(MetaModelError::UnknownSupertype {
                        node_type: nt.name.clone(),
                        supertype: sup.clone(),
                    });
                }
            }
        }
        // Walk each chain; a revisit before reaching a root is a cycle.
        let mut ancestors: HashMap<String, HashSet<String>> = HashMap::new();
        for nt in &doc.node_types {
            let mut seen = HashSet::new();
            let mut cur = Some(nt.name.as_str());
            while let Some(name) = cur {
                if !seen.insert(name.to_owned()) {
                    return Err(MetaModelError::SupertypeCycle(nt.name.clone()));
                }
                cur = doc.node_types[node_index[name]].supertype.as_deref();
            }
            ancestors.insert(nt.name.clone(), seen);
        }
        let mut attributes = HashMap::new();
        for nt in &doc.node_types {
            let mut chain = Vec::new();
            let mut cur = Some(nt.name.as_str());
            while let Some(name) = cur {
                let t = &doc.node_types[node_index[name]];
                chain.push(t);
                cur = t.supertype.as_deref();
            }
            let mut flat = BTreeMap::new();
            for t in chain.iter().rev() {
                for a in &t.attributes {
                    if flat.insert(a.name.clone(), a.kind).is_some() {
                        return Err(MetaModelError::DuplicateAttribute {
                            node_type: nt.name.clone(),
                            attribute: a.name.clone(),
                        });
                    }
                }
            }
            attributes.insert(nt.name.clone(), flat);
        }
        for et in &doc.edge_types {
            for end in [&et.source, &et.target] {
                if !node_index.contains_key(end) {
                    return Err(MetaModelError::DanglingEdgeEndpoint {
                        edge_type: et.name.clone(),
                        node_type: end.clone(),
                    });
                }
            }
            if let Upper::Bounded(u) = et.upper {
                if et.lower > u {
                    return Err(MetaModelError::InvalidBounds(et.name.clone()));
                }
            }
        }
        Ok(MetaModel {
            doc,
            node_index,
            edge_index,
            attributes,
            ancestors,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("metamodel serializes")
    }

    pub fn doc(&self) -> &MetaModelDoc {
        &self.doc
    }

    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn node_types(&self) -> &[NodeType] {
        &self.doc.node_types
    }

    pub fn edge_types(&self) -> &[EdgeType] {
        &self.doc.edge_types
    }

    pub fn node_type(&self, name: &str) -> Option<&NodeType> {
        self.node_index.get(name).map(|&i| &self.doc.node_types[i])
    }

    pub fn edge_type(&self, name: &str) -> Option<&EdgeType> {
        self.edge_index.get(name).map(|&i| &self.doc.edge_types[i])
    }

    /// Flattened attribute table of a node type.
    pub fn attributes(&self, node_type: &str) -> Option<&BTreeMap<String, ValueKind>> {
        self.attributes.get(node_type)
    }

    /// `true` if `sub` equals `sup` or inherits from it.
    pub fn conforms(&self, sub: &str, sup: &str) -> bool {
        self.ancestors.get(sub).is_some_and(|a| a.contains(sup))
    }

    /// Concrete node types conforming to `name` (including itself).
    pub fn concrete_subtypes(&self, name: &str) -> Vec<&str> {
        self.doc
            .node_types
            .iter()
            .filter(|t| !t.is_abstract && self.conforms(&t.name, name))
            .map(|t| t.name.as_str())
            .collect()
    }
}
