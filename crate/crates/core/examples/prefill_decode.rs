//! End-to-end Llama2-7B prefill and decode latency, with and without the
//! three optimizations.

use rcw_cim::scheduler::{compare, end_to_end, Features, SystemConfig};
use rcw_cim::workload::{build_llama2_7b, decode_workload, prefill_workload};

fn main() -> rcw_cim::Result<()> {
    let model = build_llama2_7b();
    let sys = SystemConfig::default();

    let prefill = prefill_workload(&model, 1024)?;
    let on = end_to_end(&prefill, &sys, Features::ALL)?;
    let off = end_to_end(&prefill, &sys, Features::NONE)?;
    println!(
        "prefill 1024: {:.3} s wall, {:.2} ms/token (all off: {:.3} s)",
        on.wall_clock_seconds,
        on.seconds_per_token() * 1e3,
        off.wall_clock_seconds
    );

    let decode = decode_workload(&model, 1024)?;
    let on = end_to_end(&decode, &sys, Features::ALL)?;
    let off = end_to_end(&decode, &sys, Features::NONE)?;
    let d = compare(&off, &on);
    println!(
        "decode @1024: {:.2} tokens/s, DRAM {:.1} ms/token, compute {:.1}% lower than all off",
        on.tokens_per_second(),
        on.dram_transfer_seconds * 1e3,
        100.0 * d.compute_seconds
    );
    for g in on.gemms.iter().take(3) {
        println!(
            "  {:<10} {}x{}x{} {} cycles",
            g.gemm, g.m, g.n, g.k, g.cycles
        );
    }
    Ok(())
}
