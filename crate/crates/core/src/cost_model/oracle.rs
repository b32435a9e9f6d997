//! Brute-force loop-nest replay of each dataflow.
//!
//! Walks the tiled triple loop in the order the dataflow prescribes and
//! counts every DRAM fetch, DRAM writeback and CIM weight write as it
//! happens. Shares nothing with the closed forms beyond tile validation.

use super::{tile_counts, AccessCounts, Dataflow, MatmulDims, TileCounts, TileDims};
use crate::error::Result;

#[derive(Default)]
struct Counter {
    counts: AccessCounts,
    /// Weight tile currently held in the CIM array.
    cim_tile: Option<(u64, u64)>,
    /// Weight column block currently held in the on-chip weight buffer.
    weight_buffer: Option<u64>,
    /// Input row block held in the input-reuse buffer.
    reuse_block: Option<u64>,
}

impl Counter {
    fn fetch_input(&mut self, elems: u64) {
        self.counts.input_elems += elems;
    }

    fn fetch_weight(&mut self, elems: u64) {
        self.counts.weight_elems += elems;
    }

    fn write_output(&mut self, elems: u64) {
        self.counts.output_elems += elems;
    }

    /// Program the CIM with weight tile `(ni, ki)`. Every program is a write,
    /// even when the same tile comes back: stationarity is a property of the
    /// loop order, not of opportunistic reuse.
    fn program_cim(&mut self, tile: (u64, u64), elems: u64) {
        self.cim_tile = Some(tile);
        self.counts.cim_update_elems += elems;
    }
}

/// Replay the loop nest and return the counts it generates.
///
/// `include_first_load` controls whether the WS-OCS reuse buffer starts empty
/// (the priming load is counted) or pre-filled (the literal closed form).
pub fn loopnest_oracle(
    dims: MatmulDims,
    tiles: TileDims,
    dataflow: Dataflow,
    include_first_load: bool,
) -> Result<AccessCounts> {
    let t = tile_counts(dims, tiles)?;
    let mut c = Counter::default();
    replay(
        dims,
        tiles,
        t,
        dataflow,
        include_first_load,
        &mut c,
        &mut |_, _| {},
    );
    Ok(c.counts)
}

/// Per-element DRAM write counts of the output matrix (row-major `M x K`).
pub fn loopnest_output_writes(
    dims: MatmulDims,
    tiles: TileDims,
    dataflow: Dataflow,
) -> Result<Vec<u32>> {
    let t = tile_counts(dims, tiles)?;
    let mut c = Counter::default();
    let mut map = vec![0u32; (dims.m * dims.k) as usize];
    replay(dims, tiles, t, dataflow, true, &mut c, &mut |mi, ki| {
        for r in mi * tiles.m..(mi + 1) * tiles.m {
            for col in ki * tiles.k..(ki + 1) * tiles.k {
                map[(r * dims.k + col) as usize] += 1;
            }
        }
    });
    Ok(map)
}

fn replay(
    dims: MatmulDims,
    tiles: TileDims,
    t: TileCounts,
    dataflow: Dataflow,
    include_first_load: bool,
    c: &mut Counter,
    on_output: &mut dyn FnMut(u64, u64),
) {
    let in_tile = tiles.m * tiles.n;
    let w_tile = tiles.n * tiles.k;
    let out_tile = tiles.m * tiles.k;
    let mut write = |c: &mut Counter, mi: u64, ki: u64| {
        c.write_output(out_tile);
        on_output(mi, ki);
    };

    match dataflow {
        Dataflow::Is => {
            for mi in 0..t.m {
                for ni in 0..t.n {
                    c.fetch_input(in_tile);
                    for ki in 0..t.k {
                        c.fetch_weight(w_tile);
                        c.program_cim((ni, ki), w_tile);
                        // partial-sum spill
                        write(c, mi, ki);
                    }
                }
            }
        }
        Dataflow::Ws => {
            for ki in 0..t.k {
                for ni in 0..t.n {
                    c.fetch_weight(w_tile);
                    c.program_cim((ni, ki), w_tile);
                    for mi in 0..t.m {
                        c.fetch_input(in_tile);
                        write(c, mi, ki);
                    }
                }
            }
        }
        Dataflow::IsOs => {
            for mi in 0..t.m {
                // the m x N input row block stays on chip for all of ki
                for _ni in 0..t.n {
                    c.fetch_input(in_tile);
                }
                for ki in 0..t.k {
                    for ni in 0..t.n {
                        c.fetch_weight(w_tile);
                        c.program_cim((ni, ki), w_tile);
                    }
                    write(c, mi, ki);
                }
            }
        }
        Dataflow::WsOs => {
            for ki in 0..t.k {
                if c.weight_buffer != Some(ki) {
                    c.weight_buffer = Some(ki);
                    c.fetch_weight(dims.n * tiles.k);
                }
                for mi in 0..t.m {
                    for ni in 0..t.n {
                        c.fetch_input(in_tile);
                        c.program_cim((ni, ki), w_tile);
                    }
                    write(c, mi, ki);
                }
            }
        }
        Dataflow::WsOcs => {
            // Prime the reuse buffer with the first row block.
            c.reuse_block = Some(0);
            if include_first_load {
                c.fetch_input(tiles.m * dims.n);
            }
            for ki in 0..t.k {
                // whole weight column stays in the CIM for the pass
                for ni in 0..t.n {
                    c.fetch_weight(w_tile);
                    c.program_cim((ni, ki), w_tile);
                }
                // serpentine order: each pass starts on the block the
                // previous pass ended on
                let forward = ki % 2 == 0;
                for step in 0..t.m {
                    let mi = if forward { step } else { t.m - 1 - step };
                    if c.reuse_block != Some(mi) {
                        for _ni in 0..t.n {
                            c.fetch_input(in_tile);
                        }
                        c.reuse_block = Some(mi);
                    }
                    write(c, mi, ki);
                }
            }
        }
    }
}
