//! Digital SRAM CIM macro: exact integer MAC banks and the cycle model of
//! the serialized and read-compute/write (RCW) weight-update pipelines.
//!
//! Cycle costs are per *row step*: one word row across every bank lane. A
//! word is 8 bits, holding one INT8 weight or a packed pair of INT4 weights
//! in `DualInt4` mode, so a row step issues `banks * macs * factor` MACs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinear::LUT_SEGMENTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroConfig {
    pub banks: u64,
    pub macs_per_bank: u64,
    /// INT4 weight rows per bank lane.
    pub rows: u64,
    /// Aggregate CIM capacity of the chip.
    pub capacity_kb: u64,
    pub num_macros: u64,
    pub read_cycles_per_row: u64,
    pub write_cycles_per_row: u64,
    pub mac_cycles_per_row: u64,
}

impl Default for MacroConfig {
    fn default() -> Self {
        MacroConfig::from_capacity(8, 32, 256, 32, 1, 1, 1)
    }
}

impl MacroConfig {
    /// Derive `rows` from aggregate capacity: `capacity / (macros * banks * macs * 4 bit)`.
    pub fn from_capacity(
        banks: u64,
        macs_per_bank: u64,
        capacity_kb: u64,
        num_macros: u64,
        read_cycles_per_row: u64,
        write_cycles_per_row: u64,
        mac_cycles_per_row: u64,
    ) -> Self {
        let lanes = (num_macros * banks * macs_per_bank).max(1);
        MacroConfig {
            banks,
            macs_per_bank,
            rows: capacity_kb * 1024 * 2 / lanes,
            capacity_kb,
            num_macros,
            read_cycles_per_row,
            write_cycles_per_row,
            mac_cycles_per_row,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.banks == 0 || self.macs_per_bank == 0 || self.num_macros == 0 {
            return Err(Error::Config("macro geometry must be positive".into()));
        }
        if self.rows < 2 || !self.rows.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "macro rows must be a positive even count, got {}",
                self.rows
            )));
        }
        if self.mac_cycles_per_row == 0 || self.write_cycles_per_row == 0 {
            return Err(Error::Config(
                "MAC and write cycles per row must be >= 1".into(),
            ));
        }
        // keeps the RCW latch no longer than the work it overlaps
        if self.read_cycles_per_row > self.mac_cycles_per_row.min(self.write_cycles_per_row) {
            return Err(Error::Config(format!(
                "read_cycles_per_row {} exceeds min(mac {}, write {})",
                self.read_cycles_per_row, self.mac_cycles_per_row, self.write_cycles_per_row
            )));
        }
        Ok(())
    }

    /// Word rows per macro (one 8-bit word per lane).
    pub fn word_rows(&self) -> u64 {
        self.rows / 2
    }

    /// Weights one macro can hold at the precision's weight width.
    pub fn capacity_weights(&self, prec: PrecisionMode) -> u64 {
        self.word_rows() * self.banks * self.macs_per_bank * prec.factor()
    }

    /// MACs one macro issues per row step.
    pub fn macs_per_step(&self, prec: PrecisionMode) -> u64 {
        self.banks * self.macs_per_bank * prec.factor()
    }

    /// Row steps needed to sweep `weights` stored weights once.
    pub fn row_steps(&self, prec: PrecisionMode, weights: u64) -> u64 {
        weights.div_ceil(self.macs_per_step(prec))
    }

    /// Row steps across all macros working in parallel.
    pub fn chip_row_steps(&self, prec: PrecisionMode, weights: u64) -> u64 {
        weights.div_ceil(self.macs_per_step(prec) * self.num_macros)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PipelineMode {
    /// Weight updates run after compute.
    Serialized,
    /// Latch, then compute while the next weights are written.
    Rcw,
}

impl PipelineMode {
    pub fn name(self) -> &'static str {
        match self {
            PipelineMode::Serialized => "serialized",
            PipelineMode::Rcw => "rcw",
        }
    }
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PipelineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "serialized" => Ok(PipelineMode::Serialized),
            "rcw" => Ok(PipelineMode::Rcw),
            _ => Err(Error::Config(format!("unknown pipeline mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PrecisionMode {
    /// INT4 weights packed in pairs, INT8 activations, twice the MAC rate.
    DualInt4,
    Int8,
    /// Nonlinear datapath only.
    Binary16,
}

impl PrecisionMode {
    /// MAC-rate multiplier relative to INT8.
    pub fn factor(self) -> u64 {
        match self {
            PrecisionMode::DualInt4 => 2,
            PrecisionMode::Int8 | PrecisionMode::Binary16 => 1,
        }
    }

    pub fn weight_bits(self) -> u32 {
        match self {
            PrecisionMode::DualInt4 => 4,
            PrecisionMode::Int8 => 8,
            PrecisionMode::Binary16 => 16,
        }
    }

    pub fn input_bits(self) -> u32 {
        match self {
            PrecisionMode::DualInt4 | PrecisionMode::Int8 => 8,
            PrecisionMode::Binary16 => 16,
        }
    }

    /// Mode that runs GEMMs with the given weight width.
    pub fn for_weight_bits(bits: u32) -> Self {
        if bits <= 4 {
            PrecisionMode::DualInt4
        } else {
            PrecisionMode::Int8
        }
    }
}

impl FromStr for PrecisionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "dual_int4" | "int4" => Ok(PrecisionMode::DualInt4),
            "int8" => Ok(PrecisionMode::Int8),
            "binary16" | "fp16" => Ok(PrecisionMode::Binary16),
            _ => Err(Error::Config(format!("unknown precision '{s}'"))),
        }
    }
}

/// `num_macros * banks * macs * 2 ops * factor * freq`.
pub fn peak_throughput(
    cfg: &MacroConfig,
    num_macros: u64,
    prec: PrecisionMode,
    freq_hz: f64,
) -> f64 {
    (num_macros * cfg.banks * cfg.macs_per_bank * 2 * prec.factor()) as f64 * freq_hz
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecKind {
    Compute,
    Nonlinear,
}

/// Cycles to switch the macro between GEMM and LUT work. Serialized mode
/// rewrites all LUT coefficient rows; RCW only latches one row because the
/// coefficients were written during the previous phase 2.
pub fn mode_switch_latency(
    cfg: &MacroConfig,
    from: ExecKind,
    to: ExecKind,
    mode: PipelineMode,
) -> u64 {
    if from == to {
        return 0;
    }
    match mode {
        PipelineMode::Serialized => LUT_SEGMENTS as u64 * cfg.write_cycles_per_row,
        PipelineMode::Rcw => cfg.read_cycles_per_row,
    }
}

/// Cycle totals of one residency under a pipeline mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhaseCycles {
    pub phase1: u64,
    pub phase2: u64,
    pub compute: u64,
    pub update: u64,
    pub hidden: u64,
    pub exposed: u64,
    pub total: u64,
}

/// Combine compute, update and latch cycles. RCW latches only when there is
/// an update to overlap; otherwise it degenerates to plain compute.
pub fn pipeline_cycles(mode: PipelineMode, compute: u64, update: u64, read: u64) -> PhaseCycles {
    match mode {
        PipelineMode::Serialized => PhaseCycles {
            phase1: 0,
            phase2: compute,
            compute,
            update,
            hidden: 0,
            exposed: update,
            total: compute + update,
        },
        PipelineMode::Rcw if update == 0 => PhaseCycles {
            phase1: 0,
            phase2: compute,
            compute,
            update: 0,
            hidden: 0,
            exposed: 0,
            total: compute,
        },
        PipelineMode::Rcw => {
            let hidden = update.min(compute);
            PhaseCycles {
                phase1: read,
                phase2: compute.max(update),
                compute,
                update,
                hidden,
                exposed: update - hidden,
                total: read + compute.max(update),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Phase 1: weights read into the adder-tree latch.
    Latch,
    Mac,
    Write,
    /// Phase 2 with MAC and weight write in the same cycles.
    MacWrite,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub cycle: u64,
    pub bank: u64,
    pub kind: EventKind,
    pub duration: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileTrace {
    pub mode: PipelineMode,
    pub total_cycles: u64,
    pub phase1_cycles: u64,
    pub phase2_cycles: u64,
    pub compute_cycles: u64,
    pub update_cycles: u64,
    pub update_cycles_hidden: u64,
    pub update_cycles_exposed: u64,
    pub events: Vec<TraceEvent>,
}

impl TileTrace {
    fn build(mode: PipelineMode, banks: u64, c: PhaseCycles) -> Self {
        let mut segments: Vec<(u64, EventKind, u64)> = Vec::new();
        let mut push = |start: u64, kind, len| {
            if len > 0 {
                segments.push((start, kind, len));
            }
        };
        match mode {
            PipelineMode::Serialized => {
                push(0, EventKind::Mac, c.compute);
                push(c.compute, EventKind::Write, c.update);
            }
            PipelineMode::Rcw => {
                push(0, EventKind::Latch, c.phase1);
                let both = c.compute.min(c.update);
                push(c.phase1, EventKind::MacWrite, both);
                let tail = if c.compute > c.update {
                    EventKind::Mac
                } else {
                    EventKind::Write
                };
                push(c.phase1 + both, tail, c.phase2 - both);
            }
        }
        let mut events = Vec::with_capacity(banks as usize * (segments.len() + 1));
        for bank in 0..banks {
            for &(cycle, kind, duration) in &segments {
                events.push(TraceEvent {
                    cycle,
                    bank,
                    kind,
                    duration,
                });
            }
            events.push(TraceEvent {
                cycle: c.total,
                bank,
                kind: EventKind::Done,
                duration: 0,
            });
        }
        TileTrace {
            mode,
            total_cycles: c.total,
            phase1_cycles: c.phase1,
            phase2_cycles: c.phase2,
            compute_cycles: c.compute,
            update_cycles: c.update,
            update_cycles_hidden: c.hidden,
            update_cycles_exposed: c.exposed,
            events,
        }
    }

    /// Sum of event durations on one bank.
    /// Events as CSV: `cycle,bank,kind,duration`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.events {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn bank_busy(&self, bank: u64) -> u64 {
        self.events
            .iter()
            .filter(|e| e.bank == bank)
            .map(|e| e.duration)
            .sum()
    }
}

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i64>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        IntMatrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        IntMatrix::from_fn(n, n, |r, c| i64::from(r == c))
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    /// Uniform signed `bits`-bit entries.
    pub fn random<R: rand::Rng>(rng: &mut R, rows: usize, cols: usize, bits: u32) -> Self {
        let hi = 1i64 << (bits - 1);
        IntMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-hi..hi))
    }

    /// Reference product by the textbook triple loop.
    pub fn naive_matmul(&self, rhs: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(IntMatrix::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).map(|k| self.get(i, k) * rhs.get(k, j)).sum()
        }))
    }

    fn check_range(&self, bits: u32) -> Result<()> {
        let lo = -(1i64 << (bits - 1));
        let hi = (1i64 << (bits - 1)) - 1;
        match self.data.iter().find(|&&v| v < lo || v > hi) {
            Some(&value) => Err(Error::Precision { value, bits }),
            None => Ok(()),
        }
    }
}

/// Exact product `input (M x N) * weights (N x K)` plus the pipeline trace.
///
/// Arithmetic never depends on the pipeline mode. `next_weights` only
/// contributes update cycles; callers that own a macro swap it in.
pub fn compute_tile(
    cfg: &MacroConfig,
    mode: PipelineMode,
    prec: PrecisionMode,
    input: &IntMatrix,
    stored: &IntMatrix,
    next_weights: Option<&IntMatrix>,
) -> Result<(IntMatrix, TileTrace)> {
    cfg.validate()?;
    if prec == PrecisionMode::Binary16 {
        return Err(Error::Config(
            "binary16 runs on the nonlinear datapath, not compute_tile".into(),
        ));
    }
    if input.cols != stored.rows {
        return Err(Error::Shape(format!(
            "input {}x{} does not chain with weights {}x{}",
            input.rows, input.cols, stored.rows, stored.cols
        )));
    }
    let capacity = cfg.capacity_weights(prec);
    for (w, name) in std::iter::once((stored, "stored")).chain(next_weights.map(|n| (n, "next"))) {
        let needed = (w.rows * w.cols) as u64;
        if needed > capacity {
            return Err(Error::BufferCapacity {
                buffer: if name == "stored" {
                    "macro weights"
                } else {
                    "macro next weights"
                },
                needed,
                capacity,
            });
        }
        w.check_range(prec.weight_bits())?;
    }
    input.check_range(prec.input_bits())?;

    let mut out = IntMatrix::zeros(input.rows, stored.cols);
    for i in 0..input.rows {
        for n in 0..input.cols {
            let a = input.get(i, n);
            if a == 0 {
                continue;
            }
            let w_row = &stored.data[n * stored.cols..(n + 1) * stored.cols];
            let o_row = &mut out.data[i * stored.cols..(i + 1) * stored.cols];
            for (o, &w) in o_row.iter_mut().zip(w_row) {
                *o += a * w;
            }
        }
    }

    let steps = cfg.row_steps(prec, (stored.rows * stored.cols) as u64);
    let compute = input.rows as u64 * steps * cfg.mac_cycles_per_row;
    let update = next_weights
        .map(|w| cfg.row_steps(prec, (w.rows * w.cols) as u64) * cfg.write_cycles_per_row)
        .unwrap_or(0);
    let cycles = pipeline_cycles(mode, compute, update, cfg.read_cycles_per_row);
    Ok((out, TileTrace::build(mode, cfg.banks, cycles)))
}

/// A macro that owns its stored weights.
#[derive(Debug, Clone)]
pub struct CimMacro {
    cfg: MacroConfig,
    prec: PrecisionMode,
    weights: IntMatrix,
}

impl CimMacro {
    pub fn new(cfg: MacroConfig, prec: PrecisionMode, weights: IntMatrix) -> Result<Self> {
        cfg.validate()?;
        let needed = (weights.rows * weights.cols) as u64;
        let capacity = cfg.capacity_weights(prec);
        if needed > capacity {
            return Err(Error::BufferCapacity {
                buffer: "macro weights",
                needed,
                capacity,
            });
        }
        weights.check_range(prec.weight_bits())?;
        Ok(CimMacro { cfg, prec, weights })
    }

    pub fn config(&self) -> &MacroConfig {
        &self.cfg
    }

    pub fn weights(&self) -> &IntMatrix {
        &self.weights
    }

    /// Run one tile; afterwards the macro holds `next_weights` if given.
    pub fn compute_tile(
        &mut self,
        mode: PipelineMode,
        input: &IntMatrix,
        next_weights: Option<IntMatrix>,
    ) -> Result<(IntMatrix, TileTrace)> {
        let result = compute_tile(
            &self.cfg,
            mode,
            self.prec,
            input,
            &self.weights,
            next_weights.as_ref(),
        )?;
        if let Some(w) = next_weights {
            self.weights = w;
        }
        Ok(result)
    }
}
