//! The three shipped views and the managers that analyse them.

pub mod analysis;
pub mod catalog;
pub mod manager;

pub use analysis::{
    analyze_performance, check_arch_constraints, detect_failures, propose_adaptation, AdaptError, ArchConstraint,
    Finding, FindingCode, ManagerConfig, Severity,
};
pub use catalog::{catalog, Catalog, ViewKind};
pub use manager::{Adaptation, Manager, Trigger};
