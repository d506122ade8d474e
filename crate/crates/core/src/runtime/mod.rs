//! The simulated managed element: scripted scenarios, a deterministic
//! runtime, the sensor pump into the EJB source model and the effectors
//! that apply source-model edits back to the runtime.

pub mod effectors;
pub mod scenario;
pub mod sensors;
pub mod sim;
pub mod source;
pub mod workload;

use thiserror::Error;

pub use effectors::{apply_effector, EffectorEntry, EffectorReport};
pub use scenario::{Action, BeanSpec, ModuleSpec, Scenario};
pub use sensors::pump_sensors;
pub use sim::{BeanState, ContainerState, ExceptionEntry, ModuleState, Origin, Runtime, RuntimeEvent};
pub use source::SourceBuilder;
pub use workload::random_scenario;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("scenario step {step}: {message}")]
    Load { step: usize, message: String },
    #[error("scenario fault at step {step}: {message}")]
    Fault { step: usize, message: String },
    #[error("cannot run {k} step(s) from position {position} of {len}")]
    StepRange { position: usize, k: usize, len: usize },
}

impl RuntimeError {
    /// Index of the offending step, when there is one.
    pub fn step(&self) -> Option<usize> {
        match self {
            RuntimeError::Load { step, .. } | RuntimeError::Fault { step, .. } => Some(*step),
            _ => None,
        }
    }
}
