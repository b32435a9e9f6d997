//! Sweeps behind the free parameters: tile sizes against the DRAM and
//! update reductions, and DRAM efficiency against decode throughput.

use rcw_cim::calibration::{
    default_tiling_candidates, efficiency_for_rate, efficiency_sweep, tiling_sweep,
};
use rcw_cim::scheduler::SystemConfig;
use rcw_cim::workload::build_llama2_7b;

fn main() -> rcw_cim::Result<()> {
    let model = build_llama2_7b();
    let sys = SystemConfig::default();

    let points = tiling_sweep(&model, 1024, &sys, &default_tiling_candidates())?;
    let feasible = points.iter().filter(|p| p.rejected.is_none()).count();
    println!("{feasible} of {} tilings fit the buffers", points.len());
    for p in points
        .iter()
        .filter(|p| p.tiles.n == 128 && p.tiles.k == 128)
    {
        match (p.dram_reduction, p.update_reduction, &p.rejected) {
            (Some(d), Some(u), _) => {
                println!(
                    "m={:<4} DRAM -{:.1}%  updates -{:.1}%",
                    p.tiles.m,
                    100.0 * d,
                    100.0 * u
                )
            }
            (_, _, Some(why)) => println!("m={:<4} rejected: {why}", p.tiles.m),
            _ => {}
        }
    }

    for p in efficiency_sweep(&model, 1024, &sys, &[0.85, 0.9, 0.95, 1.0])? {
        println!(
            "efficiency {:.2}: {:.2} tokens/s",
            p.efficiency, p.tokens_per_second
        );
    }
    let e = efficiency_for_rate(&model, 1024, &sys, 26.87)?;
    println!("26.87 tokens/s needs DRAM efficiency {e:.4}");
    Ok(())
}
