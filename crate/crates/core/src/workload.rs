//! Transformer GEMM and nonlinear-op inventories for prefill and decode.

use serde::{Deserialize, Serialize};

use crate::cost_model::{MatmulDims, OperandBits};
use crate::error::{Error, Result};

/// Decoder-only transformer geometry plus operand precisions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_layers: u64,
    pub hidden: u64,
    pub num_heads: u64,
    pub head_dim: u64,
    pub ffn_dim: u64,
    pub vocab: u64,
    pub weight_bits: u32,
    pub act_bits: u32,
}

/// Nonlinear datapath precision (binary16).
pub const NONLINEAR_BITS: u32 = 16;

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.hidden == 0 || self.num_heads == 0 || self.ffn_dim == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if self.hidden != self.num_heads * self.head_dim {
            return Err(Error::Config(format!(
                "hidden {} != heads {} x head_dim {}",
                self.hidden, self.num_heads, self.head_dim
            )));
        }
        if ![4, 8, 16].contains(&self.weight_bits) {
            return Err(Error::Config(format!(
                "weight_bits must be 4, 8 or 16, got {}",
                self.weight_bits
            )));
        }
        if ![8, 16].contains(&self.act_bits) {
            return Err(Error::Config(format!(
                "act_bits must be 8 or 16, got {}",
                self.act_bits
            )));
        }
        Ok(())
    }

    /// Weights of the per-layer projections and FFN, all layers, plus lm_head.
    pub fn weight_bearing_params(&self) -> u64 {
        let per_layer = 4 * self.hidden * self.hidden + 3 * self.hidden * self.ffn_dim;
        self.num_layers * per_layer + self.hidden * self.vocab
    }

    /// Bits for weight-bearing GEMM operands: activations in, weights, activations out.
    pub fn gemm_bits(&self) -> OperandBits {
        OperandBits::new(self.act_bits, self.weight_bits, self.act_bits)
    }

    /// Bits for activation-by-activation GEMMs (attention).
    pub fn attention_bits(&self) -> OperandBits {
        OperandBits::new(self.act_bits, self.act_bits, self.act_bits)
    }
}

/// Llama2-7B (public model card constants) with INT4 weights and INT8 activations.
pub fn build_llama2_7b() -> ModelConfig {
    ModelConfig {
        num_layers: 32,
        hidden: 4096,
        num_heads: 32,
        head_dim: 128,
        ffn_dim: 11008,
        vocab: 32000,
        weight_bits: 4,
        act_bits: 8,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GemmKind {
    QProj,
    KProj,
    VProj,
    OProj,
    Gate,
    Up,
    Down,
    AttnQk,
    AttnAv,
    LmHead,
}

impl GemmKind {
    pub fn name(self) -> &'static str {
        match self {
            GemmKind::QProj => "q_proj",
            GemmKind::KProj => "k_proj",
            GemmKind::VProj => "v_proj",
            GemmKind::OProj => "o_proj",
            GemmKind::Gate => "gate",
            GemmKind::Up => "up",
            GemmKind::Down => "down",
            GemmKind::AttnQk => "attn_qk",
            GemmKind::AttnAv => "attn_av",
            GemmKind::LmHead => "lm_head",
        }
    }

    /// Attention GEMMs multiply two activations and never touch CIM weights.
    pub fn weight_bearing(self) -> bool {
        !matches!(self, GemmKind::AttnQk | GemmKind::AttnAv)
    }
}

/// One GEMM shape, repeated `count` times (layers, or layers x heads).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GemmSpec {
    pub kind: GemmKind,
    pub dims: MatmulDims,
    /// Instances per layer (heads for attention, 1 otherwise).
    pub per_layer: u64,
    /// True for lm_head, which runs once rather than once per layer.
    pub once: bool,
}

impl GemmSpec {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn weight_bearing(&self) -> bool {
        self.kind.weight_bearing()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Prefill,
    Decode,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Prefill => "prefill",
            Phase::Decode => "decode",
        }
    }
}

/// Per-layer nonlinear work: row counts and row lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonlinearOps {
    pub softmax_rows: u64,
    pub softmax_len: u64,
    /// Sequential norm stages per layer (pre-attention, pre-FFN).
    pub rmsnorm_stages: u64,
    /// Rows per norm stage.
    pub rmsnorm_rows: u64,
    pub rmsnorm_len: u64,
    /// Final norm rows, applied once after the last layer.
    pub final_norm_rows: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseWorkload {
    pub phase: Phase,
    /// Prompt length (prefill) or KV-cache length (decode).
    pub tokens: u64,
    pub num_layers: u64,
    pub gemms: Vec<GemmSpec>,
    pub nonlinear: NonlinearOps,
    pub model: ModelConfig,
}

impl PhaseWorkload {
    /// Multiplicity of a GEMM spec across the whole phase.
    pub fn instances(&self, g: &GemmSpec) -> u64 {
        if g.once {
            g.per_layer
        } else {
            g.per_layer * self.num_layers
        }
    }

    pub fn total_macs(&self, weight_bearing_only: bool) -> u64 {
        self.gemms
            .iter()
            .filter(|g| !weight_bearing_only || g.weight_bearing())
            .map(|g| self.instances(g) * g.dims.macs())
            .sum()
    }

    /// Operation count at 2 ops per MAC.
    pub fn total_ops(&self, weight_bearing_only: bool) -> u64 {
        2 * self.total_macs(weight_bearing_only)
    }

    pub fn weight_elems(&self) -> u64 {
        self.gemms
            .iter()
            .filter(|g| g.weight_bearing())
            .map(|g| self.instances(g) * g.dims.weight_elems())
            .sum()
    }
}

fn gemm_list(cfg: &ModelConfig, rows: u64, kv: u64) -> Vec<GemmSpec> {
    let h = cfg.hidden;
    let f = cfg.ffn_dim;
    let dims = |m, n, k| MatmulDims { m, n, k };
    let layer = |kind, d| GemmSpec {
        kind,
        dims: d,
        per_layer: 1,
        once: false,
    };
    vec![
        layer(GemmKind::QProj, dims(rows, h, h)),
        layer(GemmKind::KProj, dims(rows, h, h)),
        layer(GemmKind::VProj, dims(rows, h, h)),
        GemmSpec {
            kind: GemmKind::AttnQk,
            dims: dims(rows, cfg.head_dim, kv),
            per_layer: cfg.num_heads,
            once: false,
        },
        GemmSpec {
            kind: GemmKind::AttnAv,
            dims: dims(rows, kv, cfg.head_dim),
            per_layer: cfg.num_heads,
            once: false,
        },
        layer(GemmKind::OProj, dims(rows, h, h)),
        layer(GemmKind::Gate, dims(rows, h, f)),
        layer(GemmKind::Up, dims(rows, h, f)),
        layer(GemmKind::Down, dims(rows, f, h)),
        GemmSpec {
            kind: GemmKind::LmHead,
            dims: dims(rows, h, cfg.vocab),
            per_layer: 1,
            once: true,
        },
    ]
}

/// Prefill over a prompt of `seq_len` tokens: every GEMM has `M = seq_len`.
pub fn prefill_workload(cfg: &ModelConfig, seq_len: u64) -> Result<PhaseWorkload> {
    cfg.validate()?;
    if seq_len == 0 {
        return Err(Error::Domain { axis: "seq_len" });
    }
    Ok(PhaseWorkload {
        phase: Phase::Prefill,
        tokens: seq_len,
        num_layers: cfg.num_layers,
        gemms: gemm_list(cfg, seq_len, seq_len),
        nonlinear: NonlinearOps {
            softmax_rows: cfg.num_heads * seq_len,
            softmax_len: seq_len,
            rmsnorm_stages: 2,
            rmsnorm_rows: seq_len,
            rmsnorm_len: cfg.hidden,
            final_norm_rows: seq_len,
        },
        model: cfg.clone(),
    })
}

/// One decode step against a KV cache of `kv_len` tokens: `M = 1`.
pub fn decode_workload(cfg: &ModelConfig, kv_len: u64) -> Result<PhaseWorkload> {
    cfg.validate()?;
    if kv_len == 0 {
        return Err(Error::Domain { axis: "kv_len" });
    }
    Ok(PhaseWorkload {
        phase: Phase::Decode,
        tokens: kv_len,
        num_layers: cfg.num_layers,
        gemms: gemm_list(cfg, 1, kv_len),
        nonlinear: NonlinearOps {
            softmax_rows: cfg.num_heads,
            softmax_len: kv_len,
            rmsnorm_stages: 2,
            rmsnorm_rows: 1,
            rmsnorm_len: cfg.hidden,
            final_norm_rows: 1,
        },
        model: cfg.clone(),
    })
}
