//! Sweeps that pin free parameters against headline targets.

use serde::{Deserialize, Serialize};

use crate::cim_macro::PipelineMode;
use crate::cost_model::{Dataflow, TileDims};
use crate::error::{Error, Result};
use crate::scheduler::{end_to_end, schedule_baseline, schedule_ws_ocs, Features, SystemConfig};
use crate::workload::{decode_workload, prefill_workload, ModelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilingPoint {
    pub tiles: TileDims,
    /// Total external DRAM byte reduction, WS-OCS vs WS.
    pub dram_reduction: Option<f64>,
    /// CIM update reduction, WS-OCS vs WS-OS.
    pub update_reduction: Option<f64>,
    /// Why the tiling was rejected, if it was.
    pub rejected: Option<String>,
}

/// Prefill reductions for each candidate tiling. Infeasible tilings are
/// kept with the reason instead of aborting the sweep.
pub fn tiling_sweep(
    model: &ModelConfig,
    seq_len: u64,
    sys: &SystemConfig,
    candidates: &[TileDims],
) -> Result<Vec<TilingPoint>> {
    let w = prefill_workload(model, seq_len)?;
    Ok(candidates
        .iter()
        .map(|&tiles| {
            let s = SystemConfig { tiles, ..*sys };
            let point = || -> Result<(f64, f64)> {
                let ocs = schedule_ws_ocs(&w, &s)?;
                let ws = schedule_baseline(&w, &s, Dataflow::Ws, PipelineMode::Rcw)?;
                let wsos = schedule_baseline(&w, &s, Dataflow::WsOs, PipelineMode::Rcw)?;
                Ok((
                    1.0 - ocs.report.dram_bytes / ws.report.dram_bytes,
                    1.0 - ocs.counts.cim_update_elems as f64 / wsos.counts.cim_update_elems as f64,
                ))
            };
            match point() {
                Ok((d, u)) => TilingPoint {
                    tiles,
                    dram_reduction: Some(d),
                    update_reduction: Some(u),
                    rejected: None,
                },
                Err(e) => TilingPoint {
                    tiles,
                    dram_reduction: None,
                    update_reduction: None,
                    rejected: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// Power-of-two tilings from 16 to 512 on each axis.
pub fn default_tiling_candidates() -> Vec<TileDims> {
    let sizes = [16u64, 32, 64, 128, 256, 512];
    let mut out = Vec::new();
    for &m in &sizes {
        for &n in &sizes {
            for &k in &sizes {
                out.push(TileDims::new(m, n, k));
            }
        }
    }
    out
}

/// First feasible tiling (sweep order) whose DRAM reduction is within `tol` of `target`.
pub fn find_tiling(points: &[TilingPoint], target: f64, tol: f64) -> Option<&TilingPoint> {
    points
        .iter()
        .find(|p| p.dram_reduction.is_some_and(|d| (d - target).abs() <= tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyPoint {
    pub efficiency: f64,
    pub tokens_per_second: f64,
}

/// Decode throughput at each DRAM efficiency, all features on.
pub fn efficiency_sweep(
    model: &ModelConfig,
    kv_len: u64,
    sys: &SystemConfig,
    efficiencies: &[f64],
) -> Result<Vec<EfficiencyPoint>> {
    let w = decode_workload(model, kv_len)?;
    efficiencies
        .iter()
        .map(|&efficiency| {
            let mut s = *sys;
            s.dram.efficiency = efficiency;
            let r = end_to_end(&w, &s, Features::ALL)?;
            Ok(EfficiencyPoint {
                efficiency,
                tokens_per_second: r.tokens_per_second(),
            })
        })
        .collect()
}

/// DRAM efficiency at which decode reaches `target` tokens/s, by bisection
/// on (0, 1]. Errors when even full efficiency falls short.
pub fn efficiency_for_rate(
    model: &ModelConfig,
    kv_len: u64,
    sys: &SystemConfig,
    target: f64,
) -> Result<f64> {
    let rate = |e: f64| -> Result<f64> {
        Ok(efficiency_sweep(model, kv_len, sys, &[e])?[0].tokens_per_second)
    };
    if rate(1.0)? < target {
        return Err(Error::Infeasible(format!(
            "{target} tokens/s exceeds the full-bandwidth rate"
        )));
    }
    let (mut lo, mut hi) = (1e-6, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
