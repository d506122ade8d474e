pub mod model;
pub mod runtime;
pub mod tgg;
pub mod views;
pub mod harness;
