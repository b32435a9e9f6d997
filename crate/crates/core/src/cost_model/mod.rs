//! Closed-form external DRAM traffic and internal CIM weight-update counts
//! for tiled GEMM under the five supported dataflows.
//!
//! The problem is `input (M x N) * weight (N x K) = output (M x K)`, processed
//! in tiles of `m x n` (input), `n x k` (weight) and `m x k` (output). All
//! counts are in elements; [`AccessCounts::bytes`] converts with per-operand
//! precision.

mod oracle;

use std::fmt;
use std::iter::Sum;
use std::ops::Add;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use oracle::{loopnest_oracle, loopnest_output_writes};

/// GEMM problem size: input `m x n`, weight `n x k`, output `m x k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatmulDims {
    pub m: u64,
    pub n: u64,
    pub k: u64,
}

impl MatmulDims {
    pub fn new(m: u64, n: u64, k: u64) -> Result<Self> {
        let dims = Self { m, n, k };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, v) in [("M", self.m), ("N", self.n), ("K", self.k)] {
            if v == 0 {
                return Err(Error::Domain { axis });
            }
        }
        Ok(())
    }

    pub fn macs(&self) -> u64 {
        self.m * self.n * self.k
    }

    pub fn weight_elems(&self) -> u64 {
        self.n * self.k
    }

    pub fn output_elems(&self) -> u64 {
        self.m * self.k
    }
}

impl fmt::Display for MatmulDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.m, self.n, self.k)
    }
}

/// Tile extents. Each must divide the matching problem dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TileDims {
    pub m: u64,
    pub n: u64,
    pub k: u64,
}

impl TileDims {
    pub const fn new(m: u64, n: u64, k: u64) -> Self {
        Self { m, n, k }
    }

    /// The tile that covers the whole problem.
    pub fn whole(dims: MatmulDims) -> Self {
        Self::new(dims.m, dims.n, dims.k)
    }

    /// Clamp every extent to the problem size. Used when one tiling is
    /// applied across GEMMs of different shapes (decode has `M = 1`).
    pub fn clamped_to(&self, dims: MatmulDims) -> Self {
        Self::new(self.m.min(dims.m), self.n.min(dims.n), self.k.min(dims.k))
    }
}

/// Number of tiles along each axis, after validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileCounts {
    pub m: u64,
    pub n: u64,
    pub k: u64,
}

/// Check `1 <= tile <= dim` and `tile | dim` on every axis.
pub fn tile_counts(dims: MatmulDims, tiles: TileDims) -> Result<TileCounts> {
    dims.validate()?;
    let axis = |axis: &'static str, dim: u64, tile: u64| -> Result<u64> {
        if tile == 0 {
            return Err(Error::Domain { axis });
        }
        if tile > dim || !dim.is_multiple_of(tile) {
            return Err(Error::Tiling { axis, dim, tile });
        }
        Ok(dim / tile)
    };
    Ok(TileCounts {
        m: axis("m", dims.m, tiles.m)?,
        n: axis("n", dims.n, tiles.n)?,
        k: axis("k", dims.k, tiles.k)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataflow {
    #[serde(rename = "IS")]
    Is,
    #[serde(rename = "WS")]
    Ws,
    #[serde(rename = "IS-OS")]
    IsOs,
    #[serde(rename = "WS-OS")]
    WsOs,
    #[serde(rename = "WS-OCS")]
    WsOcs,
}

impl Dataflow {
    pub const ALL: [Dataflow; 5] = [
        Dataflow::Is,
        Dataflow::Ws,
        Dataflow::IsOs,
        Dataflow::WsOs,
        Dataflow::WsOcs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dataflow::Is => "IS",
            Dataflow::Ws => "WS",
            Dataflow::IsOs => "IS-OS",
            Dataflow::WsOs => "WS-OS",
            Dataflow::WsOcs => "WS-OCS",
        }
    }

    /// Output-stationary variants write each output element exactly once.
    pub fn output_stationary(self) -> bool {
        matches!(self, Dataflow::IsOs | Dataflow::WsOs | Dataflow::WsOcs)
    }
}

impl fmt::Display for Dataflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dataflow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        Dataflow::ALL
            .into_iter()
            .find(|d| d.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown dataflow '{s}'")))
    }
}

/// External DRAM element counts per operand plus internal CIM weight writes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessCounts {
    pub input_elems: u64,
    pub weight_elems: u64,
    pub output_elems: u64,
    pub cim_update_elems: u64,
}

impl AccessCounts {
    pub fn dram_elems(&self) -> u64 {
        self.input_elems + self.weight_elems + self.output_elems
    }

    /// External DRAM traffic in bits, each operand at its own precision.
    pub fn dram_bits(&self, bits: OperandBits) -> u64 {
        self.input_elems * u64::from(bits.input)
            + self.weight_elems * u64::from(bits.weight)
            + self.output_elems * u64::from(bits.output)
    }

    pub fn dram_bytes(&self, bits: OperandBits) -> f64 {
        self.dram_bits(bits) as f64 / 8.0
    }
}

impl Add for AccessCounts {
    type Output = AccessCounts;

    fn add(self, rhs: Self) -> Self {
        AccessCounts {
            input_elems: self.input_elems + rhs.input_elems,
            weight_elems: self.weight_elems + rhs.weight_elems,
            output_elems: self.output_elems + rhs.output_elems,
            cim_update_elems: self.cim_update_elems + rhs.cim_update_elems,
        }
    }
}

impl Sum for AccessCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(AccessCounts::default(), Add::add)
    }
}

/// Per-operand precision in bits, used to turn element counts into bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperandBits {
    pub input: u32,
    pub weight: u32,
    pub output: u32,
}

impl OperandBits {
    pub const fn new(input: u32, weight: u32, output: u32) -> Self {
        Self {
            input,
            weight,
            output,
        }
    }
}

/// Closed-form DRAM traffic and CIM updates for one GEMM.
///
/// With `include_first_load`, WS-OCS additionally pays one `m x N` load that
/// primes the input-reuse buffer; the literal closed form omits it.
pub fn dram_access(
    dims: MatmulDims,
    tiles: TileDims,
    dataflow: Dataflow,
    include_first_load: bool,
) -> Result<AccessCounts> {
    let t = tile_counts(dims, tiles)?;
    let (mm, nn, kk) = (dims.m, dims.n, dims.k);
    let mn = mm * nn;
    let nk = nn * kk;
    let mk = mm * kk;
    let (input, weight, output) = match dataflow {
        Dataflow::Is => (mn, t.m * nk, t.n * mk),
        Dataflow::Ws => (t.k * mn, nk, t.n * mk),
        Dataflow::IsOs => (mn, t.m * nk, mk),
        Dataflow::WsOs => (t.k * mn, nk, mk),
        Dataflow::WsOcs => {
            let mut input = t.k * (mm - tiles.m) * nn;
            if include_first_load {
                input += tiles.m * nn;
            }
            (input, nk, mk)
        }
    };
    Ok(AccessCounts {
        input_elems: input,
        weight_elems: weight,
        output_elems: output,
        cim_update_elems: cim_updates_unchecked(dims, t, dataflow),
    })
}

pub fn cim_weight_updates(dims: MatmulDims, tiles: TileDims, dataflow: Dataflow) -> Result<u64> {
    let t = tile_counts(dims, tiles)?;
    Ok(cim_updates_unchecked(dims, t, dataflow))
}

fn cim_updates_unchecked(dims: MatmulDims, t: TileCounts, dataflow: Dataflow) -> u64 {
    let nk = dims.n * dims.k;
    match dataflow {
        Dataflow::Is | Dataflow::IsOs | Dataflow::WsOs => t.m * nk,
        Dataflow::Ws | Dataflow::WsOcs => nk,
    }
}

/// Signed reduction `1 - optimized / baseline`.
pub fn fraction_reduced(field: &'static str, baseline: f64, optimized: f64) -> Result<f64> {
    if baseline == 0.0 {
        return Err(Error::UndefinedRatio { field });
    }
    Ok(1.0 - optimized / baseline)
}

/// Per-field reductions of an optimized schedule relative to a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reductions {
    pub input: f64,
    pub weight: f64,
    pub output: f64,
    pub cim_updates: f64,
    pub total_bytes: f64,
}

pub fn reduction_ratio(
    baseline: &AccessCounts,
    optimized: &AccessCounts,
    bits: OperandBits,
) -> Result<Reductions> {
    let f = |name, b: u64, o: u64| fraction_reduced(name, b as f64, o as f64);
    Ok(Reductions {
        input: f("input", baseline.input_elems, optimized.input_elems)?,
        weight: f("weight", baseline.weight_elems, optimized.weight_elems)?,
        output: f("output", baseline.output_elems, optimized.output_elems)?,
        cim_updates: f(
            "cim_updates",
            baseline.cim_update_elems,
            optimized.cim_update_elems,
        )?,
        total_bytes: f(
            "total_bytes",
            baseline.dram_bits(bits),
            optimized.dram_bits(bits),
        )?,
    })
}
