//! Flat key-value run configuration. Precedence: flag > file > default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cim_macro::MacroConfig;
use crate::cost_model::{Dataflow, TileDims};
use crate::error::{Error, Result};
use crate::experiments::ExperimentSetup;
use crate::scheduler::SystemConfig;
use crate::workload::{build_llama2_7b, ModelConfig};

pub const DEFAULT_SEED: u64 = 0;

/// Every key is optional; unset keys fall through to the next layer.
///
/// ```toml
/// seq_len = 1024          # prefill prompt length
/// kv_len = 1024           # decode context length
/// seed = 0                # randomized inputs
/// tile_m = 128            # tile sizes on M, N, K
/// dram_efficiency = 1.0   # fraction of peak DRAM bandwidth
/// baseline_dataflow = "WS-OS"
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub seq_len: Option<u64>,
    pub kv_len: Option<u64>,
    pub seed: Option<u64>,

    pub num_layers: Option<u64>,
    pub hidden: Option<u64>,
    pub num_heads: Option<u64>,
    pub head_dim: Option<u64>,
    pub ffn_dim: Option<u64>,
    pub vocab: Option<u64>,
    pub weight_bits: Option<u32>,
    pub act_bits: Option<u32>,

    pub tile_m: Option<u64>,
    pub tile_n: Option<u64>,
    pub tile_k: Option<u64>,
    pub baseline_dataflow: Option<String>,
    pub weights_preloaded: Option<bool>,

    pub freq_hz: Option<f64>,
    pub clusters: Option<u64>,
    pub cores_per_cluster: Option<u64>,
    pub input_reuse_kb: Option<u64>,
    pub partial_sum_kb: Option<u64>,
    pub banks: Option<u64>,
    pub macs_per_bank: Option<u64>,
    pub capacity_kb: Option<u64>,
    pub read_cycles_per_row: Option<u64>,
    pub write_cycles_per_row: Option<u64>,
    pub mac_cycles_per_row: Option<u64>,

    pub dram_channels: Option<u64>,
    pub dram_transfer_rate_mt_s: Option<u64>,
    pub dram_bus_bytes: Option<u64>,
    pub dram_efficiency: Option<f64>,

    pub group_size: Option<usize>,
    pub epsilon: Option<f64>,
    pub nl_lanes: Option<u64>,
    pub nl_units: Option<u64>,
    pub nl_exp_cycles: Option<u64>,
    pub nl_elementwise_cycles: Option<u64>,
    pub nl_recip_cycles: Option<u64>,
    pub nl_rsqrt_cycles: Option<u64>,
    pub nl_sync_cycles: Option<u64>,
}

macro_rules! overlay {
    ($hi:ident, $lo:ident; $($f:ident),* $(,)?) => {
        ConfigLayer { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl ConfigLayer {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Keys set in `self` win over `lower`.
    pub fn over(self, lower: ConfigLayer) -> ConfigLayer {
        let hi = self;
        let lo = lower;
        overlay!(hi, lo;
            seq_len, kv_len, seed,
            num_layers, hidden, num_heads, head_dim, ffn_dim, vocab, weight_bits, act_bits,
            tile_m, tile_n, tile_k, baseline_dataflow, weights_preloaded,
            freq_hz, clusters, cores_per_cluster, input_reuse_kb, partial_sum_kb,
            banks, macs_per_bank, capacity_kb,
            read_cycles_per_row, write_cycles_per_row, mac_cycles_per_row,
            dram_channels, dram_transfer_rate_mt_s, dram_bus_bytes, dram_efficiency,
            group_size, epsilon,
            nl_lanes, nl_units, nl_exp_cycles, nl_elementwise_cycles,
            nl_recip_cycles, nl_rsqrt_cycles, nl_sync_cycles,
        )
    }

    /// Fill unset keys from built-in defaults and validate.
    pub fn resolve(&self) -> Result<RunConfig> {
        let dm = build_llama2_7b();
        let model = ModelConfig {
            num_layers: self.num_layers.unwrap_or(dm.num_layers),
            hidden: self.hidden.unwrap_or(dm.hidden),
            num_heads: self.num_heads.unwrap_or(dm.num_heads),
            head_dim: self.head_dim.unwrap_or(dm.head_dim),
            ffn_dim: self.ffn_dim.unwrap_or(dm.ffn_dim),
            vocab: self.vocab.unwrap_or(dm.vocab),
            weight_bits: self.weight_bits.unwrap_or(dm.weight_bits),
            act_bits: self.act_bits.unwrap_or(dm.act_bits),
        };
        model.validate()?;

        let mut sys = SystemConfig::default();
        sys.tiles = TileDims::new(
            self.tile_m.unwrap_or(sys.tiles.m),
            self.tile_n.unwrap_or(sys.tiles.n),
            self.tile_k.unwrap_or(sys.tiles.k),
        );
        if let Some(df) = &self.baseline_dataflow {
            sys.baseline_dataflow = df.parse::<Dataflow>()?;
        }
        sys.weights_preloaded = self.weights_preloaded.unwrap_or(sys.weights_preloaded);

        let c = &mut sys.cluster;
        c.freq_hz = self.freq_hz.unwrap_or(c.freq_hz);
        c.clusters = self.clusters.unwrap_or(c.clusters);
        c.cores_per_cluster = self.cores_per_cluster.unwrap_or(c.cores_per_cluster);
        c.input_reuse_kb = self.input_reuse_kb.unwrap_or(c.input_reuse_kb);
        c.partial_sum_kb = self.partial_sum_kb.unwrap_or(c.partial_sum_kb);
        let m = c.macro_cfg;
        c.macro_cfg = MacroConfig::from_capacity(
            self.banks.unwrap_or(m.banks),
            self.macs_per_bank.unwrap_or(m.macs_per_bank),
            self.capacity_kb.unwrap_or(m.capacity_kb),
            c.clusters * c.cores_per_cluster,
            self.read_cycles_per_row.unwrap_or(m.read_cycles_per_row),
            self.write_cycles_per_row.unwrap_or(m.write_cycles_per_row),
            self.mac_cycles_per_row.unwrap_or(m.mac_cycles_per_row),
        );

        let d = &mut sys.dram;
        d.channels = self.dram_channels.unwrap_or(d.channels);
        d.transfer_rate_mt_s = self.dram_transfer_rate_mt_s.unwrap_or(d.transfer_rate_mt_s);
        d.bus_bytes_per_transfer = self.dram_bus_bytes.unwrap_or(d.bus_bytes_per_transfer);
        d.efficiency = self.dram_efficiency.unwrap_or(d.efficiency);

        let g = &mut sys.groups;
        g.group_size = self.group_size.unwrap_or(g.group_size);
        g.epsilon = self.epsilon.unwrap_or(g.epsilon);

        let t = &mut sys.timing;
        t.lanes = self.nl_lanes.unwrap_or(t.lanes);
        t.units = self.nl_units.unwrap_or(t.units);
        t.exp_cycles = self.nl_exp_cycles.unwrap_or(t.exp_cycles);
        t.elementwise_cycles = self.nl_elementwise_cycles.unwrap_or(t.elementwise_cycles);
        t.recip_cycles = self.nl_recip_cycles.unwrap_or(t.recip_cycles);
        t.rsqrt_cycles = self.nl_rsqrt_cycles.unwrap_or(t.rsqrt_cycles);
        t.sync_cycles = self.nl_sync_cycles.unwrap_or(t.sync_cycles);
        sys.validate()?;

        let seq_len = self.seq_len.unwrap_or(1024);
        let kv_len = self.kv_len.unwrap_or(1024);
        if seq_len == 0 {
            return Err(Error::Domain { axis: "seq_len" });
        }
        Ok(RunConfig {
            model,
            system: sys,
            seq_len,
            kv_len,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
        })
    }
}

/// Fully resolved configuration for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub system: SystemConfig,
    pub seq_len: u64,
    pub kv_len: u64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        ConfigLayer::default()
            .resolve()
            .expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn setup(&self) -> ExperimentSetup {
        ExperimentSetup {
            model: self.model.clone(),
            system: self.system,
            seq_len: self.seq_len,
            kv_len: self.kv_len,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_library_defaults() {
        let r = RunConfig::default();
        assert_eq!(r.system, SystemConfig::default());
        assert_eq!(r.model, build_llama2_7b());
        assert_eq!(r.seed, 0);
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let file = ConfigLayer::from_toml_str("tile_m = 64\ntile_n = 64\nseed = 7").unwrap();
        let flags = ConfigLayer {
            tile_m: Some(32),
            ..Default::default()
        };
        let r = flags.over(file).resolve().unwrap();
        assert_eq!(r.system.tiles, TileDims::new(32, 64, 128));
        assert_eq!(r.seed, 7);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ConfigLayer::from_toml_str("tile_q = 3").is_err());
        assert!(ConfigLayer::from_toml_str("tile_m = \"big\"").is_err());
    }

    #[test]
    fn bad_dataflow_rejected() {
        let c = ConfigLayer::from_toml_str("baseline_dataflow = \"XS\"").unwrap();
        assert!(c.resolve().is_err());
    }
}
