//! Cycle model for the nonlinear unit, with and without operator fusion.
//!
//! Baseline (full accumulation only): every exponential is pushed through
//! the reduction tree one lane at a time and the row is reduced globally.
//! Fused (full + partial): partial mode evaluates `lanes` exponentials per
//! pass, and the per-group sums and reciprocals pipeline behind one another.

use serde::{Deserialize, Serialize};

use super::{Accumulation, GroupSpec};
use crate::workload::NonlinearOps;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonlinearTiming {
    /// Lanes per adder-tree pass.
    pub lanes: u64,
    /// Independent nonlinear units working on different rows.
    pub units: u64,
    /// Cycles per LUT lookup + multiply-add (or square) pass.
    pub exp_cycles: u64,
    /// Cycles per elementwise scale pass (divide, gamma multiply).
    pub elementwise_cycles: u64,
    pub recip_cycles: u64,
    pub rsqrt_cycles: u64,
    /// Cross-group synchronization round trip of the unfused norm.
    pub sync_cycles: u64,
}

impl Default for NonlinearTiming {
    fn default() -> Self {
        NonlinearTiming {
            lanes: 32,
            units: 8,
            exp_cycles: 4,
            elementwise_cycles: 18,
            recip_cycles: 16,
            rsqrt_cycles: 16,
            sync_cycles: 1024,
        }
    }
}

impl NonlinearTiming {
    fn passes(&self, len: u64) -> u64 {
        len.div_ceil(self.lanes.max(1))
    }

    fn depth(&self) -> u64 {
        u64::from(self.lanes.max(1).next_power_of_two().trailing_zeros())
    }

    fn waves(&self, rows: u64) -> u64 {
        rows.div_ceil(self.units.max(1))
    }
}

/// Exponentiation passes for a row of `len`: one per lane when only full
/// accumulation exists, one per `lanes` otherwise.
pub fn exp_passes(len: u64, timing: &NonlinearTiming, accumulation: Accumulation) -> u64 {
    match accumulation {
        Accumulation::FullOnly => len,
        Accumulation::FullAndPartial => timing.passes(len),
    }
}

fn group_count(len: u64, groups: GroupSpec) -> u64 {
    len.div_ceil(groups.group_size.max(1) as u64)
}

/// Cycles for one Softmax row.
pub fn softmax_cycles(
    len: u64,
    groups: GroupSpec,
    timing: &NonlinearTiming,
    accumulation: Accumulation,
) -> u64 {
    let len = len.max(1);
    let p = timing.passes(len);
    let d = timing.depth();
    let exp = exp_passes(len, timing, accumulation) * timing.exp_cycles;
    let scale = p * timing.elementwise_cycles;
    match accumulation {
        Accumulation::FullOnly => exp + scale + d + timing.recip_cycles,
        Accumulation::FullAndPartial => {
            let g = group_count(len, groups);
            exp + scale + (d + g - 1) + (timing.recip_cycles + g - 1)
        }
    }
}

/// Cycles for one RMSNorm row.
pub fn rmsnorm_cycles(
    len: u64,
    groups: GroupSpec,
    timing: &NonlinearTiming,
    accumulation: Accumulation,
) -> u64 {
    let len = len.max(1);
    let p = timing.passes(len);
    let d = timing.depth();
    let g = group_count(len, groups);
    let square = p * timing.exp_cycles;
    let scale = p * timing.elementwise_cycles;
    match accumulation {
        Accumulation::FullOnly => {
            // separate correction pass after a global sync
            let sync = if g > 1 { timing.sync_cycles + scale } else { 0 };
            square + d + timing.rsqrt_cycles + scale + sync
        }
        Accumulation::FullAndPartial => {
            square + (d + g - 1) + (timing.rsqrt_cycles + g - 1) + scale
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearLatency {
    pub baseline: u64,
    pub fused: u64,
    /// `fused / baseline`.
    pub ratio: f64,
}

impl NonlinearLatency {
    fn new(baseline: u64, fused: u64) -> Self {
        NonlinearLatency {
            baseline,
            fused,
            ratio: fused as f64 / baseline.max(1) as f64,
        }
    }

    pub fn reduction(&self) -> f64 {
        1.0 - self.ratio
    }
}

/// One Softmax row plus one RMSNorm row of `row_len`. The fused total uses
/// whatever modes `accumulation` makes available, so a full-only datapath
/// reports `fused == baseline`.
pub fn nonlinear_latency(
    row_len: u64,
    groups: GroupSpec,
    timing: &NonlinearTiming,
    accumulation: Accumulation,
) -> NonlinearLatency {
    let row = |acc| {
        softmax_cycles(row_len, groups, timing, acc) + rmsnorm_cycles(row_len, groups, timing, acc)
    };
    NonlinearLatency::new(row(Accumulation::FullOnly), row(accumulation))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadNonlinearCycles {
    pub softmax_per_layer: u64,
    pub rmsnorm_per_layer: u64,
    pub final_norm: u64,
}

impl WorkloadNonlinearCycles {
    pub fn per_layer(&self) -> u64 {
        self.softmax_per_layer + self.rmsnorm_per_layer
    }

    pub fn total(&self, num_layers: u64) -> u64 {
        num_layers * self.per_layer() + self.final_norm
    }
}

/// Nonlinear cycles of a phase. Rows spread over `units` in waves; the norm
/// stages of a layer run one after another.
pub fn workload_nonlinear_cycles(
    ops: &NonlinearOps,
    groups: GroupSpec,
    timing: &NonlinearTiming,
    accumulation: Accumulation,
) -> WorkloadNonlinearCycles {
    let sm = softmax_cycles(ops.softmax_len, groups, timing, accumulation);
    let rn = rmsnorm_cycles(ops.rmsnorm_len, groups, timing, accumulation);
    WorkloadNonlinearCycles {
        softmax_per_layer: timing.waves(ops.softmax_rows) * sm,
        rmsnorm_per_layer: ops.rmsnorm_stages * timing.waves(ops.rmsnorm_rows) * rn,
        final_norm: timing.waves(ops.final_norm_rows) * rn,
    }
}
