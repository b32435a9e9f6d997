//! Maps phase workloads onto the cluster array and composes end-to-end
//! latency from macro pass cycles, the nonlinear unit and the DRAM channel.
//!
//! A GEMM runs as a sequence of weight residencies ("passes"). Each pass
//! writes its weights into the macros of the whole chip, then streams its
//! input rows through them:
//!
//! | dataflow      | passes            | weights per pass | rows streamed |
//! |---------------|-------------------|------------------|---------------|
//! | WS, WS-OCS    | K/k               | N*k              | M             |
//! | WS-OS, IS-OS  | (K/k)(M/m)        | N*k              | m             |
//! | IS            | (M/m)(N/n)        | n*K              | m             |
//!
//! Overlap policy: DRAM streaming overlaps compute; fused nonlinear work
//! overlaps the GEMMs of its layer; unfused nonlinear work serializes after
//! everything else.

use serde::{Deserialize, Serialize};

use crate::cim_macro::{pipeline_cycles, MacroConfig, PipelineMode, PrecisionMode};
use crate::cost_model::{
    cim_weight_updates, dram_access, tile_counts, AccessCounts, Dataflow, MatmulDims, TileDims,
};
use crate::error::{Error, Result};
use crate::nonlinear::{workload_nonlinear_cycles, Accumulation, GroupSpec, NonlinearTiming};
use crate::workload::{GemmSpec, Phase, PhaseWorkload};

/// Width of one partial-sum buffer entry.
pub const PSUM_BYTES: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub clusters: u64,
    pub cores_per_cluster: u64,
    pub input_reuse_kb: u64,
    pub partial_sum_kb: u64,
    pub freq_hz: f64,
    #[serde(rename = "macro")]
    pub macro_cfg: MacroConfig,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            clusters: 8,
            cores_per_cluster: 4,
            input_reuse_kb: 64,
            partial_sum_kb: 64,
            freq_hz: 1e8,
            macro_cfg: MacroConfig::default(),
        }
    }
}

impl ClusterConfig {
    pub fn num_macros(&self) -> u64 {
        self.clusters * self.cores_per_cluster
    }

    pub fn validate(&self) -> Result<()> {
        self.macro_cfg.validate()?;
        if self.num_macros() != self.macro_cfg.num_macros {
            return Err(Error::Config(format!(
                "{} clusters x {} cores != {} macros",
                self.clusters, self.cores_per_cluster, self.macro_cfg.num_macros
            )));
        }
        if !(self.freq_hz > 0.0 && self.freq_hz.is_finite()) {
            return Err(Error::Config(format!(
                "frequency must be positive, got {}",
                self.freq_hz
            )));
        }
        Ok(())
    }

    /// Live-footprint check of one tile against the per-cluster buffers.
    pub fn check_tiles(&self, tiles: TileDims, act_bits: u32) -> Result<()> {
        let input = tiles.m * tiles.n * u64::from(act_bits) / 8;
        let input_cap = self.input_reuse_kb * 1024;
        if input > input_cap {
            return Err(Error::BufferCapacity {
                buffer: "input-reuse",
                needed: input,
                capacity: input_cap,
            });
        }
        let psum = tiles.m * tiles.k * PSUM_BYTES;
        let psum_cap = self.partial_sum_kb * 1024;
        if psum > psum_cap {
            return Err(Error::BufferCapacity {
                buffer: "partial-sum",
                needed: psum,
                capacity: psum_cap,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DramConfig {
    pub channels: u64,
    pub transfer_rate_mt_s: u64,
    pub bus_bytes_per_transfer: u64,
    pub efficiency: f64,
}

impl Default for DramConfig {
    fn default() -> Self {
        DramConfig {
            channels: 2,
            transfer_rate_mt_s: 6400,
            bus_bytes_per_transfer: 8,
            efficiency: 1.0,
        }
    }
}

impl DramConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::Config(format!(
                "DRAM efficiency must be in (0, 1], got {}",
                self.efficiency
            )));
        }
        if self.channels == 0 || self.transfer_rate_mt_s == 0 || self.bus_bytes_per_transfer == 0 {
            return Err(Error::Config("DRAM geometry must be positive".into()));
        }
        Ok(())
    }

    pub fn peak_bytes_per_s(&self) -> f64 {
        (self.channels * self.transfer_rate_mt_s * 1_000_000 * self.bus_bytes_per_transfer) as f64
    }

    pub fn bytes_per_s(&self) -> f64 {
        self.peak_bytes_per_s() * self.efficiency
    }
}

/// Everything a schedule depends on besides the workload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub cluster: ClusterConfig,
    pub dram: DramConfig,
    pub tiles: TileDims,
    pub groups: GroupSpec,
    pub timing: NonlinearTiming,
    /// Dataflow used when WS-OCS is switched off.
    pub baseline_dataflow: Dataflow,
    /// First residency of every GEMM is already in the macros (no write).
    pub weights_preloaded: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            cluster: ClusterConfig::default(),
            dram: DramConfig::default(),
            tiles: TileDims::new(128, 128, 128),
            groups: GroupSpec::default(),
            timing: NonlinearTiming::default(),
            baseline_dataflow: Dataflow::WsOs,
            weights_preloaded: false,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        self.cluster.validate()?;
        self.dram.validate()?;
        self.groups.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Features {
    pub ws_ocs: bool,
    pub rcw: bool,
    pub fusion: bool,
}

impl Features {
    pub const ALL: Features = Features {
        ws_ocs: true,
        rcw: true,
        fusion: true,
    };
    pub const NONE: Features = Features {
        ws_ocs: false,
        rcw: false,
        fusion: false,
    };

    pub fn pipeline(&self) -> PipelineMode {
        if self.rcw {
            PipelineMode::Rcw
        } else {
            PipelineMode::Serialized
        }
    }
}

/// Cycle totals of one GEMM instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GemmCycles {
    pub passes: u64,
    pub compute: u64,
    pub update: u64,
    pub update_exposed: u64,
    pub latch: u64,
    pub total: u64,
    pub update_elems: u64,
}

impl std::ops::Add for GemmCycles {
    type Output = GemmCycles;

    fn add(self, o: GemmCycles) -> GemmCycles {
        GemmCycles {
            passes: self.passes + o.passes,
            compute: self.compute + o.compute,
            update: self.update + o.update,
            update_exposed: self.update_exposed + o.update_exposed,
            latch: self.latch + o.latch,
            total: self.total + o.total,
            update_elems: self.update_elems + o.update_elems,
        }
    }
}

impl GemmCycles {
    fn times(self, n: u64) -> GemmCycles {
        GemmCycles {
            passes: self.passes * n,
            compute: self.compute * n,
            update: self.update * n,
            update_exposed: self.update_exposed * n,
            latch: self.latch * n,
            total: self.total * n,
            update_elems: self.update_elems * n,
        }
    }
}

/// Pass-level cycles of one weight-bearing GEMM on the whole chip.
pub fn gemm_cycles(
    dims: MatmulDims,
    tiles: TileDims,
    dataflow: Dataflow,
    macro_cfg: &MacroConfig,
    prec: PrecisionMode,
    mode: PipelineMode,
    preloaded: bool,
) -> Result<GemmCycles> {
    let t = tile_counts(dims, tiles)?;
    let (passes, weights, rows) = match dataflow {
        Dataflow::Ws | Dataflow::WsOcs => (t.k, dims.n * tiles.k, dims.m),
        Dataflow::WsOs | Dataflow::IsOs => (t.k * t.m, dims.n * tiles.k, tiles.m),
        Dataflow::Is => (t.m * t.n, tiles.n * dims.k, tiles.m),
    };
    let steps = macro_cfg.chip_row_steps(prec, weights);
    let compute = steps * macro_cfg.mac_cycles_per_row * rows;
    let update = steps * macro_cfg.write_cycles_per_row;
    let read = macro_cfg.read_cycles_per_row;
    let pass = |u: u64| {
        let pc = pipeline_cycles(mode, compute, u, read);
        GemmCycles {
            passes: 1,
            compute: pc.compute,
            update: pc.update,
            update_exposed: pc.exposed,
            latch: pc.phase1,
            total: pc.total,
            update_elems: if u > 0 { weights } else { 0 },
        }
    };
    if preloaded {
        Ok(pass(0) + pass(update).times(passes - 1))
    } else {
        Ok(pass(update).times(passes))
    }
}

/// Compute-only cycles of an activation-by-activation GEMM.
pub fn attention_cycles(dims: MatmulDims, macro_cfg: &MacroConfig, prec: PrecisionMode) -> u64 {
    let per_cycle = macro_cfg.macs_per_step(prec) * macro_cfg.num_macros;
    dims.macs().div_ceil(per_cycle) * macro_cfg.mac_cycles_per_row
}

/// One row of the per-GEMM breakdown, totals over all instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GemmReport {
    pub gemm: String,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "K")]
    pub k: u64,
    pub input_elems: u64,
    pub weight_elems: u64,
    pub output_elems: u64,
    pub updates: u64,
    pub cycles: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub phase: Phase,
    pub tokens: u64,
    pub dataflow: Dataflow,
    pub pipeline: PipelineMode,
    pub features: Features,
    pub freq_hz: f64,
    pub dram_efficiency: f64,
    /// MAC cycles of all GEMMs.
    pub compute_cycles: u64,
    pub weight_update_cycles: u64,
    pub weight_update_cycles_exposed: u64,
    /// GEMM cycles including latches and exposed updates.
    pub gemm_cycles: u64,
    pub nonlinear_cycles: u64,
    pub nonlinear_cycles_exposed: u64,
    pub dram_bytes: f64,
    pub dram_transfer_seconds: f64,
    /// GEMM plus exposed nonlinear time, DRAM excluded.
    pub compute_seconds: f64,
    pub wall_clock_seconds: f64,
    pub gemms: Vec<GemmReport>,
}

impl LatencyReport {
    pub fn tokens_per_second(&self) -> f64 {
        1.0 / self.wall_clock_seconds
    }

    /// Wall-clock per prompt token (prefill) or per generated token (decode).
    pub fn seconds_per_token(&self) -> f64 {
        match self.phase {
            Phase::Prefill => self.wall_clock_seconds / self.tokens as f64,
            Phase::Decode => self.wall_clock_seconds,
        }
    }

    /// Per-GEMM rows as CSV with the fixed column order.
    pub fn gemm_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for g in &self.gemms {
            w.serialize(g)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Signed fractional change `1 - optimized / baseline` of each component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyDelta {
    pub compute_seconds: f64,
    pub wall_clock_seconds: f64,
    pub dram_bytes: f64,
    pub weight_update_cycles: f64,
    pub nonlinear_cycles: f64,
}

pub fn compare(baseline: &LatencyReport, optimized: &LatencyReport) -> LatencyDelta {
    let r = |b: f64, o: f64| if b > 0.0 { 1.0 - o / b } else { 0.0 };
    LatencyDelta {
        compute_seconds: r(baseline.compute_seconds, optimized.compute_seconds),
        wall_clock_seconds: r(baseline.wall_clock_seconds, optimized.wall_clock_seconds),
        dram_bytes: r(baseline.dram_bytes, optimized.dram_bytes),
        weight_update_cycles: r(
            baseline.weight_update_cycles as f64,
            optimized.weight_update_cycles as f64,
        ),
        nonlinear_cycles: r(
            baseline.nonlinear_cycles as f64,
            optimized.nonlinear_cycles as f64,
        ),
    }
}

/// Aggregate counts over weight-bearing GEMMs plus the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub counts: AccessCounts,
    pub report: LatencyReport,
}

/// Tiles for one GEMM: the configured tiles, clamped to its dims.
fn gemm_tiles(tiles: TileDims, dims: MatmulDims) -> TileDims {
    tiles.clamped_to(dims)
}

fn run(
    w: &PhaseWorkload,
    sys: &SystemConfig,
    dataflow: Dataflow,
    mode: PipelineMode,
    fusion: bool,
    features: Features,
) -> Result<Schedule> {
    sys.validate()?;
    let cfg = &w.model;
    let mcfg = &sys.cluster.macro_cfg;
    let freq = sys.cluster.freq_hz;
    let gemm_prec = PrecisionMode::for_weight_bits(cfg.weight_bits);
    let attn_prec = PrecisionMode::for_weight_bits(cfg.act_bits);
    let gemm_bits = cfg.gemm_bits();
    let attn_bits = cfg.attention_bits();

    let mut counts = AccessCounts::default();
    let mut dram_bits = 0u64;
    let mut layer = GemmCycles::default();
    let mut once = GemmCycles::default();
    let mut rows = Vec::with_capacity(w.gemms.len());

    for g in &w.gemms {
        let n = w.instances(g);
        let (c, cyc) = if g.weight_bearing() {
            let tiles = gemm_tiles(sys.tiles, g.dims);
            sys.cluster.check_tiles(tiles, cfg.act_bits)?;
            let c = dram_access(g.dims, tiles, dataflow, true)?;
            let cyc = gemm_cycles(
                g.dims,
                tiles,
                dataflow,
                mcfg,
                gemm_prec,
                mode,
                sys.weights_preloaded,
            )?;
            if !sys.weights_preloaded
                && cyc.update_elems != cim_weight_updates(g.dims, tiles, dataflow)?
            {
                return Err(Error::Infeasible(format!(
                    "{} pass structure disagrees with the cost model",
                    g.name()
                )));
            }
            (c, cyc)
        } else {
            // activations in both operand roles, each moved once
            let c = AccessCounts {
                input_elems: g.dims.m * g.dims.n,
                weight_elems: g.dims.n * g.dims.k,
                output_elems: g.dims.m * g.dims.k,
                cim_update_elems: 0,
            };
            let cycles = attention_cycles(g.dims, mcfg, attn_prec);
            (
                c,
                GemmCycles {
                    compute: cycles,
                    total: cycles,
                    ..GemmCycles::default()
                },
            )
        };
        check_ceiling(
            g,
            &cyc,
            mcfg,
            if g.weight_bearing() {
                gemm_prec
            } else {
                attn_prec
            },
        )?;
        let bits = if g.weight_bearing() {
            gemm_bits
        } else {
            attn_bits
        };
        dram_bits += c.dram_bits(bits) * n;
        if g.weight_bearing() {
            counts = counts + scale(c, n);
        }
        if g.once {
            once = once + cyc.times(g.per_layer);
        } else {
            layer = layer + cyc.times(g.per_layer);
        }
        rows.push(gemm_row(g, scale(c, n), cyc.times(n), freq));
    }

    let acc = |on| {
        if on {
            Accumulation::FullAndPartial
        } else {
            Accumulation::FullOnly
        }
    };
    let nl = workload_nonlinear_cycles(&w.nonlinear, sys.groups, &sys.timing, acc(fusion));
    let layers = w.num_layers;
    let gemm_total = layers * layer.total + once.total;
    let nl_total = nl.total(layers);
    // fused work hides under the GEMMs of its own layer; the final norm under lm_head
    let (overlapped, serial) = if fusion {
        let exposed = layers * nl.per_layer().saturating_sub(layer.total)
            + nl.final_norm.saturating_sub(once.total);
        (exposed, 0)
    } else {
        (0, nl_total)
    };
    let all = layer.times(layers) + once;

    let dram_bytes = dram_bits as f64 / 8.0;
    let dram_s = dram_bytes / sys.dram.bytes_per_s();
    let compute_s = (gemm_total + overlapped + serial) as f64 / freq;
    let wall = dram_s.max((gemm_total + overlapped) as f64 / freq) + serial as f64 / freq;

    Ok(Schedule {
        counts,
        report: LatencyReport {
            phase: w.phase,
            tokens: w.tokens,
            dataflow,
            pipeline: mode,
            features,
            freq_hz: freq,
            dram_efficiency: sys.dram.efficiency,
            compute_cycles: all.compute,
            weight_update_cycles: all.update,
            weight_update_cycles_exposed: all.update_exposed,
            gemm_cycles: gemm_total,
            nonlinear_cycles: nl_total,
            nonlinear_cycles_exposed: overlapped + serial,
            dram_bytes,
            dram_transfer_seconds: dram_s,
            compute_seconds: compute_s,
            wall_clock_seconds: wall,
            gemms: rows,
        },
    })
}

fn scale(c: AccessCounts, n: u64) -> AccessCounts {
    AccessCounts {
        input_elems: c.input_elems * n,
        weight_elems: c.weight_elems * n,
        output_elems: c.output_elems * n,
        cim_update_elems: c.cim_update_elems * n,
    }
}

fn gemm_row(g: &GemmSpec, c: AccessCounts, cyc: GemmCycles, freq: f64) -> GemmReport {
    GemmReport {
        gemm: g.name().to_string(),
        m: g.dims.m,
        n: g.dims.n,
        k: g.dims.k,
        input_elems: c.input_elems,
        weight_elems: c.weight_elems,
        output_elems: c.output_elems,
        updates: c.cim_update_elems,
        cycles: cyc.total,
        seconds: cyc.total as f64 / freq,
    }
}

/// A schedule that beats the chip's MAC rate is a modeling error.
fn check_ceiling(
    g: &GemmSpec,
    cyc: &GemmCycles,
    mcfg: &MacroConfig,
    prec: PrecisionMode,
) -> Result<()> {
    let ceiling = mcfg.macs_per_step(prec) * mcfg.num_macros;
    if cyc.compute * ceiling < g.dims.macs() * mcfg.mac_cycles_per_row {
        return Err(Error::Infeasible(format!(
            "{} needs {} MACs in {} cycles, above {} MACs/cycle",
            g.name(),
            g.dims.macs(),
            cyc.compute,
            ceiling
        )));
    }
    Ok(())
}

/// WS-OCS with the RCW pipeline and fused nonlinear units.
pub fn schedule_ws_ocs(w: &PhaseWorkload, sys: &SystemConfig) -> Result<Schedule> {
    run(
        w,
        sys,
        Dataflow::WsOcs,
        PipelineMode::Rcw,
        true,
        Features::ALL,
    )
}

/// A baseline dataflow under the chosen pipeline, nonlinear units unfused.
pub fn schedule_baseline(
    w: &PhaseWorkload,
    sys: &SystemConfig,
    dataflow: Dataflow,
    pipeline: PipelineMode,
) -> Result<Schedule> {
    if matches!(dataflow, Dataflow::WsOcs | Dataflow::Is) {
        return Err(Error::Config(format!(
            "baseline dataflow must be IS-OS, WS-OS or WS, got {dataflow}"
        )));
    }
    let features = Features {
        ws_ocs: false,
        rcw: pipeline == PipelineMode::Rcw,
        fusion: false,
    };
    run(w, sys, dataflow, pipeline, false, features)
}

/// Full model with each optimization toggled independently.
pub fn end_to_end(
    w: &PhaseWorkload,
    sys: &SystemConfig,
    features: Features,
) -> Result<LatencyReport> {
    let dataflow = if features.ws_ocs {
        Dataflow::WsOcs
    } else {
        sys.baseline_dataflow
    };
    Ok(run(
        w,
        sys,
        dataflow,
        features.pipeline(),
        features.fusion,
        features,
    )?
    .report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{
        build_llama2_7b, decode_workload, prefill_workload, GemmKind, NonlinearOps,
    };

    fn single_gemm(dims: MatmulDims) -> PhaseWorkload {
        let model = build_llama2_7b();
        PhaseWorkload {
            phase: Phase::Prefill,
            tokens: dims.m,
            num_layers: 1,
            gemms: vec![GemmSpec {
                kind: GemmKind::QProj,
                dims,
                per_layer: 1,
                once: false,
            }],
            nonlinear: NonlinearOps {
                softmax_rows: 0,
                softmax_len: 1,
                rmsnorm_stages: 0,
                rmsnorm_rows: 0,
                rmsnorm_len: 1,
                final_norm_rows: 0,
            },
            model,
        }
    }

    #[test]
    fn small_gemm_counts_match_cost_model() {
        let dims = MatmulDims::new(4, 4, 4).unwrap();
        let sys = SystemConfig {
            tiles: TileDims::new(2, 2, 2),
            ..SystemConfig::default()
        };
        let s = schedule_ws_ocs(&single_gemm(dims), &sys).unwrap();
        assert_eq!(
            s.counts,
            dram_access(dims, sys.tiles, Dataflow::WsOcs, true).unwrap()
        );
    }

    #[test]
    fn degenerate_m_reads_input_once() {
        let dims = MatmulDims::new(128, 256, 512).unwrap();
        let s = schedule_ws_ocs(&single_gemm(dims), &SystemConfig::default()).unwrap();
        assert_eq!(s.counts.input_elems, 128 * 256);
    }

    #[test]
    fn weight_update_ratio_is_eight() {
        let cfg = build_llama2_7b();
        let w = prefill_workload(&cfg, 1024).unwrap();
        let sys = SystemConfig::default();
        let ocs = schedule_ws_ocs(&w, &sys).unwrap();
        for df in [Dataflow::WsOs, Dataflow::IsOs] {
            let b = schedule_baseline(&w, &sys, df, PipelineMode::Rcw).unwrap();
            assert_eq!(b.counts.cim_update_elems, 8 * ocs.counts.cim_update_elems);
        }
    }

    #[test]
    fn preloaded_single_tile_has_no_rcw_gain() {
        let dims = MatmulDims::new(128, 128, 128).unwrap();
        let sys = SystemConfig {
            weights_preloaded: true,
            ..SystemConfig::default()
        };
        let w = single_gemm(dims);
        let a = schedule_baseline(&w, &sys, Dataflow::WsOs, PipelineMode::Serialized).unwrap();
        let b = schedule_baseline(&w, &sys, Dataflow::WsOs, PipelineMode::Rcw).unwrap();
        assert_eq!(a.report.gemm_cycles, b.report.gemm_cycles);
        assert_eq!(a.report.weight_update_cycles, 0);
    }

    #[test]
    fn decode_layer_cycles() {
        let cfg = build_llama2_7b();
        let w = decode_workload(&cfg, 1024).unwrap();
        let sys = SystemConfig::default();
        let r = end_to_end(&w, &sys, Features::ALL).unwrap();
        // 202,375,168 weights per layer / 16,384 per chip row step
        let per_layer_steps = 12_352;
        let lm_steps = 4096 * 32000 / 16384;
        assert_eq!(r.weight_update_cycles, 32 * per_layer_steps + lm_steps);
    }

    #[test]
    fn rejects_oversized_tiles() {
        let cfg = build_llama2_7b();
        let w = prefill_workload(&cfg, 1024).unwrap();
        let sys = SystemConfig {
            tiles: TileDims::new(256, 128, 128),
            ..SystemConfig::default()
        };
        assert!(matches!(
            end_to_end(&w, &sys, Features::ALL),
            Err(Error::BufferCapacity {
                buffer: "partial-sum",
                ..
            })
        ));
    }

    #[test]
    fn csv_header_order() {
        let cfg = build_llama2_7b();
        let w = decode_workload(&cfg, 16).unwrap();
        let r = end_to_end(&w, &SystemConfig::default(), Features::ALL).unwrap();
        let csv = r.gemm_csv().unwrap();
        assert!(csv.starts_with(
            "gemm,M,N,K,input_elems,weight_elems,output_elems,updates,cycles,seconds\n"
        ));
    }
}
