//! Binary16 group Softmax and group RMSNorm against wide-precision oracles,
//! plus the cycle saving of fusing them into the adder tree.

use rcw_cim::fp16;
use rcw_cim::nonlinear::accuracy::{accuracy_report, seeded_gammas, seeded_rows};
use rcw_cim::nonlinear::{
    exact_softmax, group_softmax, nonlinear_latency, Accumulation, Exactness, GroupSpec, LutTable,
    NonlinearTiming,
};

fn main() -> rcw_cim::Result<()> {
    let lut = LutTable::default();
    let groups = GroupSpec::new(4, 1e-5)?;
    let x: Vec<_> = [0.5f32, -1.0, 2.0, 0.0]
        .iter()
        .map(|&v| fp16::from_f32(v))
        .collect();
    let y = group_softmax(&x, groups, &lut, Exactness::Lut)?;
    let exact = exact_softmax(&x.iter().map(|v| v.to_f64()).collect::<Vec<_>>());
    for (a, b) in y.iter().zip(&exact) {
        println!("{:.5} vs {:.5}", a.to_f32(), b);
    }

    let rows = seeded_rows(0, 500, 1024);
    let gammas = seeded_gammas(0, &rows);
    let timing = NonlinearTiming::default();
    let r = accuracy_report(&rows, &gammas, GroupSpec::default(), &lut, &timing)?;
    println!(
        "LUT err {:.2e}, softmax sum within {:.2} ulp, RMSNorm within {} ulp",
        r.lut_max_abs_error, r.softmax_sum_max_ulps, r.rmsnorm_max_ulps
    );

    let lat = nonlinear_latency(
        4096,
        GroupSpec::default(),
        &timing,
        Accumulation::FullAndPartial,
    );
    println!(
        "4096-wide row: {} -> {} cycles ({:.1}% saved)",
        lat.baseline,
        lat.fused,
        100.0 * lat.reduction()
    );
    Ok(())
}
