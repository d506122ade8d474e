//! Programmatic construction of EJB source models.

use crate::model::{ElementId, Model, ModelError};
use crate::views::catalog;

/// Thin helpers over [`Model`] for the EJB source metamodel. Every call
/// goes through the journal.
pub struct SourceBuilder<'m> {
    model: &'m mut Model,
}

impl<'m> SourceBuilder<'m> {
    pub fn new(model: &'m mut Model) -> Self {
        SourceBuilder { model }
    }

    /// A fresh, empty model over the EJB metamodel.
    pub fn empty(id: &str) -> Model {
        Model::new(id, catalog().ejb.clone())
    }

    pub fn container(&mut self, name: &str) -> Result<ElementId, ModelError> {
        self.model.create_node("Container", [("uid", name), ("name", name)])
    }

    pub fn module(&mut self, container: ElementId, name: &str) -> Result<ElementId, ModelError> {
        let m = self.model.create_node("EjbModule", [("uid", name), ("name", name)])?;
        self.model.create_edge("modules", container, m)?;
        Ok(m)
    }

    /// `kind` is one of `stateless`, `stateful` or `message-driven`.
    pub fn bean(&mut self, module: ElementId, name: &str, kind: &str) -> Result<ElementId, ModelError> {
        let ty = if kind == "message-driven" { "MessageDrivenBean" } else { "SessionBean" };
        let b = self.model.create_node(ty, [("uid", name), ("name", name), ("kind", kind)])?;
        self.model.create_edge("beans", module, b)?;
        Ok(b)
    }

    pub fn session_bean(&mut self, module: ElementId, name: &str) -> Result<ElementId, ModelError> {
        self.bean(module, name, "stateless")
    }

    pub fn provides(&mut self, bean: ElementId, iface: &str) -> Result<ElementId, ModelError> {
        let i = self.model.create_node("Interface", [("name", iface)])?;
        self.model.create_edge("provides", bean, i)?;
        Ok(i)
    }

    pub fn requires(&mut self, bean: ElementId, iface: &str) -> Result<ElementId, ModelError> {
        let i = self.model.create_node("Interface", [("name", iface)])?;
        self.model.create_edge("requires", bean, i)?;
        Ok(i)
    }

    /// Wires a required interface node to its provider bean.
    pub fn wire(&mut self, required: ElementId, provider: ElementId) -> Result<ElementId, ModelError> {
        self.model.create_edge("wire", required, provider)
    }

    pub fn exception(&mut self, bean: ElementId, type_name: &str, at_ms: i64) -> Result<ElementId, ModelError> {
        let x = self.model.create_node(
            "ExceptionRecord",
            [("typeName", crate::model::Value::from(type_name)), ("atMs", at_ms.into())],
        )?;
        self.model.create_edge("exceptions", bean, x)?;
        Ok(x)
    }
}
