use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::graph::{Edge, ElementId, Model, Node};
use super::meta::MetaModel;
use super::value::Value;
use super::ModelError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelDoc {
    pub meta_model: String,
    #[serde(default)]
    pub nodes: Vec<NodeDoc>,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: u64,
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default)]
    pub attrs: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub id: u64,
    #[serde(rename = "type")]
    pub ty: String,
    pub src: u64,
    pub dst: u64,
}

impl Model {
    /// Loads a model document verbatim. Ids are kept; element types must
    /// be declared, everything else is left to [`validate`](super::validate).
    pub fn from_json(id: impl Into<String>, meta: Arc<MetaModel>, text: &str) -> Result<Model, ModelError> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        Self::from_doc(id, meta, doc)
    }

    pub fn from_doc(id: impl Into<String>, meta: Arc<MetaModel>, doc: ModelDoc) -> Result<Model, ModelError> {
        if doc.meta_model != meta.name() {
            return Err(ModelError::MetaModelMismatch(doc.meta_model, meta.name().to_owned()));
        }
        let mut model = Model::new(id, meta.clone());
        let mut seen = std::collections::HashSet::new();
        for n in doc.nodes {
            if !seen.insert(n.id) {
                return Err(ModelError::Document(format!("duplicate element id {}", n.id)));
            }
            let decl = meta
                .attributes(&n.ty)
                .ok_or_else(|| ModelError::Document(format!("node {} has unknown type `{}`", n.id, n.ty)))?;
            let attrs = n
                .attrs
                .into_iter()
                .map(|(k, v)| {
                    let v = match decl.get(&k) {
                        Some(kind) => v.clone().coerce(*kind).unwrap_or(v),
                        None => v,
                    };
                    (k, v)
                })
                .collect();
            model.insert_node_unchecked(Node {
                id: ElementId(n.id),
                ty: n.ty,
                attrs,
            });
        }
        for e in doc.edges {
            if !seen.insert(e.id) {
                return Err(ModelError::Document(format!("duplicate element id {}", e.id)));
            }
            if meta.edge_type(&e.ty).is_none() {
                return Err(ModelError::Document(format!("edge {} has unknown type `{}`", e.id, e.ty)));
            }
            model.insert_edge_unchecked(Edge {
                id: ElementId(e.id),
                ty: e.ty,
                src: ElementId(e.src),
                dst: ElementId(e.dst),
            });
        }
        Ok(model)
    }

    pub fn to_doc(&self) -> ModelDoc {
        ModelDoc {
            meta_model: self.meta().name().to_owned(),
            nodes: self
                .nodes()
                .map(|n| NodeDoc {
                    id: n.id.0,
                    ty: n.ty.clone(),
                    attrs: n.attrs.clone(),
                })
                .collect(),
            edges: self
                .edges()
                .map(|e| EdgeDoc {
                    id: e.id.0,
                    ty: e.ty.clone(),
                    src: e.src.0,
                    dst: e.dst.0,
                })
                .collect(),
        }
    }

    /// Canonical pretty JSON, elements ordered by id.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("model serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_keep_their_kind() {
        let meta = Arc::new(
            MetaModel::from_json(
                r#"{"name":"p","nodeTypes":[{"name":"P","attributes":[{"name":"avg","kind":"real"},{"name":"n","kind":"integer"}]}]}"#,
            )
            .unwrap(),
        );
        let m = Model::from_json("x", meta.clone(), r#"{"metaModel":"p","nodes":[{"id":3,"type":"P","attrs":{"avg":150,"n":2}}],"edges":[]}"#).unwrap();
        assert_eq!(m.attr(ElementId(3), "avg"), Some(&Value::Real(150.0)));
        let text = m.to_json();
        assert!(text.contains("150.0"));
        let again = Model::from_json("y", meta, &text).unwrap();
        assert_eq!(again.to_json(), text);
        assert!(crate::model::validate(&again).is_empty());
    }

    #[test]
    fn rejects_unknown_types_and_wrong_metamodel() {
        let meta = Arc::new(MetaModel::from_json(r#"{"name":"p","nodeTypes":[{"name":"P"}]}"#).unwrap());
        assert!(matches!(
            Model::from_json("x", meta.clone(), r#"{"metaModel":"q","nodes":[],"edges":[]}"#),
            Err(ModelError::MetaModelMismatch(..))
        ));
        assert!(matches!(
            Model::from_json("x", meta.clone(), r#"{"metaModel":"p","nodes":[{"id":1,"type":"Q","attrs":{}}]}"#),
            Err(ModelError::Document(_))
        ));
        assert!(matches!(Model::from_json("x", meta, "[1,"), Err(ModelError::Parse(_))));
    }
}
