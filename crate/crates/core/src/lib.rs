//! Analytical and functional model of a digital compute-in-memory LLM
//! accelerator: tiled dataflow cost model, CIM macro pipeline, binary16
//! nonlinear units and an end-to-end latency scheduler.

mod error;

pub mod calibration;
pub mod cim_macro;
pub mod config;
pub mod cost_model;
pub mod experiments;
pub mod fp16;
pub mod nonlinear;
pub mod scheduler;
pub mod workload;

pub use error::{Error, Result};
