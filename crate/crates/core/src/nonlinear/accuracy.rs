//! Seeded accuracy sweeps of the binary16 datapath against wide oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    exact_rmsnorm, exact_softmax, group_rmsnorm, group_softmax, nonlinear_latency, Accumulation,
    Exactness, GroupSpec, LutTable, NonlinearTiming, RmsSync,
};
use crate::error::{Error, Result};
use crate::fp16::{self, f16};

/// Rows of length `1..=max_len`, entries uniform in `(-s, s)` with a per-row
/// scale `s` in `[0.1, 8)`.
pub fn seeded_rows(seed: u64, count: usize, max_len: usize) -> Vec<Vec<f16>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(1..=max_len.max(1));
            let scale: f32 = rng.gen_range(0.1..8.0);
            (0..len)
                .map(|_| fp16::from_f32(rng.gen_range(-scale..scale)))
                .collect()
        })
        .collect()
}

/// RMSNorm scales in `(-2, 2)`, one vector per row length, from a stream
/// independent of the row stream.
pub fn seeded_gammas(seed: u64, rows: &[Vec<f16>]) -> Vec<Vec<f16>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rows.iter()
        .map(|r| {
            (0..r.len())
                .map(|_| fp16::from_f32(rng.gen_range(-2.0..2.0)))
                .collect()
        })
        .collect()
}

/// Parse rows from text: one row per line, comma or whitespace separated.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_rows(text: &str) -> Result<Vec<Vec<f16>>> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f32>()
                    .map(fp16::from_f32)
                    .map_err(|e| Error::Config(format!("line {}: '{t}': {e}", ln + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyRow);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub rows: usize,
    pub elements: usize,
    pub group_size: usize,
    /// LUT vs `exp` over a dense sweep of its domain.
    pub lut_max_abs_error: f64,
    /// Group softmax vs the exact softmax of each group.
    pub softmax_max_abs_dev: f64,
    pub softmax_mean_abs_dev: f64,
    /// Worst per-group `|sum - 1|` in binary16 ulps of 1.
    pub softmax_sum_max_ulps: f64,
    /// Global-sync RMSNorm vs the rounded wide oracle, in binary16 steps.
    pub rmsnorm_max_ulps: u32,
    pub rmsnorm_mean_ulps: f64,
    pub nonlinear_cycles_baseline: u64,
    pub nonlinear_cycles_fused: u64,
    pub fusion_reduction: f64,
}

/// Points in the dense LUT error sweep.
pub const LUT_SWEEP_POINTS: usize = 1_000_001;

pub fn accuracy_report(
    rows: &[Vec<f16>],
    gammas: &[Vec<f16>],
    groups: GroupSpec,
    lut: &LutTable,
    timing: &NonlinearTiming,
) -> Result<AccuracyReport> {
    if rows.len() != gammas.len() {
        return Err(Error::LengthMismatch {
            left: rows.len(),
            right: gammas.len(),
        });
    }
    let mut r = AccuracyReport {
        rows: rows.len(),
        elements: 0,
        group_size: groups.group_size,
        lut_max_abs_error: lut.max_abs_error(LUT_SWEEP_POINTS),
        softmax_max_abs_dev: 0.0,
        softmax_mean_abs_dev: 0.0,
        softmax_sum_max_ulps: 0.0,
        rmsnorm_max_ulps: 0,
        rmsnorm_mean_ulps: 0.0,
        nonlinear_cycles_baseline: 0,
        nonlinear_cycles_fused: 0,
        fusion_reduction: 0.0,
    };
    let (mut sm_dev_sum, mut rms_ulp_sum) = (0.0, 0u64);
    for (x, gamma) in rows.iter().zip(gammas) {
        r.elements += x.len();

        let y = group_softmax(x, groups, lut, Exactness::Lut)?;
        for (xg, yg) in x.chunks(groups.group_size).zip(y.chunks(groups.group_size)) {
            let xf: Vec<f64> = xg.iter().map(|v| v.to_f64()).collect();
            for (o, e) in yg.iter().zip(exact_softmax(&xf)) {
                let d = (o.to_f64() - e).abs();
                sm_dev_sum += d;
                r.softmax_max_abs_dev = r.softmax_max_abs_dev.max(d);
            }
            let sum: f64 = yg.iter().map(|v| v.to_f64()).sum();
            r.softmax_sum_max_ulps = r.softmax_sum_max_ulps.max(fp16::ulps_between(sum, 1.0));
        }

        let z = group_rmsnorm(x, gamma, groups, RmsSync::GlobalSync)?;
        let xf: Vec<f64> = x.iter().map(|v| v.to_f64()).collect();
        let gf: Vec<f64> = gamma.iter().map(|v| v.to_f64()).collect();
        for (o, e) in z.iter().zip(exact_rmsnorm(&xf, &gf, groups.epsilon)) {
            let u = fp16::ulp_distance(*o, fp16::from_f64(e));
            rms_ulp_sum += u64::from(u);
            r.rmsnorm_max_ulps = r.rmsnorm_max_ulps.max(u);
        }

        let lat = nonlinear_latency(x.len() as u64, groups, timing, Accumulation::FullAndPartial);
        r.nonlinear_cycles_baseline += lat.baseline;
        r.nonlinear_cycles_fused += lat.fused;
    }
    if r.elements > 0 {
        r.softmax_mean_abs_dev = sm_dev_sum / r.elements as f64;
        r.rmsnorm_mean_ulps = rms_ulp_sum as f64 / r.elements as f64;
    }
    if r.nonlinear_cycles_baseline > 0 {
        r.fusion_reduction =
            1.0 - r.nonlinear_cycles_fused as f64 / r.nonlinear_cycles_baseline as f64;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_rows_are_reproducible() {
        assert_eq!(seeded_rows(3, 5, 64), seeded_rows(3, 5, 64));
        assert_ne!(seeded_rows(3, 5, 64), seeded_rows(4, 5, 64));
        assert!(seeded_rows(0, 50, 7)
            .iter()
            .all(|r| (1..=7).contains(&r.len())));
    }

    #[test]
    fn parse_rows_formats() {
        let rows = parse_rows("# header\n1, 2,3\n\n4 5\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1][1].to_f32(), 5.0);
        assert!(parse_rows("1,x").is_err());
        assert!(parse_rows("\n# nothing\n").is_err());
    }

    #[test]
    fn small_sweep_within_bounds() {
        let rows = seeded_rows(0, 200, 300);
        let gammas = seeded_gammas(0, &rows);
        let r = accuracy_report(
            &rows,
            &gammas,
            GroupSpec::default(),
            &LutTable::default(),
            &NonlinearTiming::default(),
        )
        .unwrap();
        assert!(r.lut_max_abs_error <= 2.5e-3);
        assert!(r.softmax_sum_max_ulps <= 4.0);
        assert!(r.rmsnorm_max_ulps <= 3);
        assert!(r.fusion_reduction > 0.0);
    }
}
