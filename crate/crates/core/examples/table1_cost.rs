//! Closed-form DRAM traffic and CIM weight updates for one GEMM under all
//! five dataflows, cross-checked against the loop-nest replay.

use rcw_cim::cost_model::{
    dram_access, loopnest_oracle, reduction_ratio, Dataflow, MatmulDims, OperandBits, TileDims,
};

fn main() -> rcw_cim::Result<()> {
    let dims = MatmulDims::new(1024, 4096, 4096)?;
    let tiles = TileDims::new(128, 32, 64);
    println!(
        "{:<7} {:>12} {:>12} {:>12} {:>12}",
        "flow", "input", "weight", "output", "updates"
    );
    for df in Dataflow::ALL {
        let c = dram_access(dims, tiles, df, true)?;
        println!(
            "{:<7} {:>12} {:>12} {:>12} {:>12}",
            df.name(),
            c.input_elems,
            c.weight_elems,
            c.output_elems,
            c.cim_update_elems
        );
    }

    // small enough to replay every loop iteration
    let small = MatmulDims::new(64, 96, 128)?;
    let st = TileDims::new(16, 32, 32);
    for df in Dataflow::ALL {
        assert_eq!(
            dram_access(small, st, df, true)?,
            loopnest_oracle(small, st, df, true)?
        );
    }
    println!(
        "loop-nest replay agrees on {}x{}x{}",
        small.m, small.n, small.k
    );

    let bits = OperandBits::new(8, 4, 8);
    let ws = dram_access(dims, tiles, Dataflow::Ws, true)?;
    let ocs = dram_access(dims, tiles, Dataflow::WsOcs, true)?;
    let r = reduction_ratio(&ws, &ocs, bits)?;
    println!(
        "WS-OCS vs WS: {:.1}% fewer DRAM bytes",
        100.0 * r.total_bytes
    );
    Ok(())
}
