//! One CIM macro computing a tile while the next weights are written, in
//! both pipeline modes. The products are identical; only timing differs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rcw_cim::cim_macro::{CimMacro, IntMatrix, MacroConfig, PipelineMode, PrecisionMode};

fn main() -> rcw_cim::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let input = IntMatrix::random(&mut rng, 100, 64, 8);
    let w0 = IntMatrix::random(&mut rng, 64, 256, 4);
    let w1 = IntMatrix::random(&mut rng, 64, 256, 4);

    for mode in [PipelineMode::Serialized, PipelineMode::Rcw] {
        let mut cim = CimMacro::new(MacroConfig::default(), PrecisionMode::DualInt4, w0.clone())?;
        let (out, trace) = cim.compute_tile(mode, &input, Some(w1.clone()))?;
        assert_eq!(out, input.naive_matmul(&w0)?);
        assert_eq!(cim.weights(), &w1);
        println!(
            "{mode:<10} total {:>4} cycles  compute {:>4}  update {:>3} (hidden {:>3}, exposed {:>3})",
            trace.total_cycles,
            trace.compute_cycles,
            trace.update_cycles,
            trace.update_cycles_hidden,
            trace.update_cycles_exposed
        );
    }
    Ok(())
}
