//! Binary16 nonlinear datapath: LUT exponential, group Softmax, group
//! RMSNorm, wide-precision oracles and a cycle model for operator fusion.

pub mod accuracy;
mod latency;
mod lut;
mod reference;
mod rmsnorm;
mod softmax;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use latency::{
    exp_passes, nonlinear_latency, rmsnorm_cycles, softmax_cycles, workload_nonlinear_cycles,
    NonlinearLatency, NonlinearTiming, WorkloadNonlinearCycles,
};
pub use lut::{build_lut, LutMethod, LutSegment, LutTable, LUT_SEGMENTS};
pub use reference::{exact_rmsnorm, exact_softmax};
pub use rmsnorm::{group_rmsnorm, RmsSync};
pub use softmax::{group_softmax, Exactness};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub group_size: usize,
    pub epsilon: f64,
}

impl Default for GroupSpec {
    fn default() -> Self {
        GroupSpec {
            group_size: 32,
            epsilon: 1e-5,
        }
    }
}

impl GroupSpec {
    pub fn new(group_size: usize, epsilon: f64) -> Result<Self> {
        let g = GroupSpec {
            group_size,
            epsilon,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.group_size == 0 {
            return Err(Error::Domain { axis: "group_size" });
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Number of groups covering a row of `len` (last group may be short).
    pub fn num_groups(&self, len: usize) -> usize {
        len.div_ceil(self.group_size)
    }
}

/// Adder-tree reduction modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AccumulationMode {
    /// All lanes reduce to one scalar.
    Full,
    /// Each lane emits its own `a * x + b`.
    Partial,
}

/// Which adder-tree modes a datapath can use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accumulation {
    FullOnly,
    FullAndPartial,
}

impl Accumulation {
    pub fn supports(self, mode: AccumulationMode) -> bool {
        match self {
            Accumulation::FullOnly => mode == AccumulationMode::Full,
            Accumulation::FullAndPartial => true,
        }
    }
}

fn check_finite(x: &[crate::fp16::f16]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}
