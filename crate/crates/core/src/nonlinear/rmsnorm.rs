use serde::{Deserialize, Serialize};

use super::{check_finite, GroupSpec};
use crate::error::{Error, Result};
use crate::fp16::{self, f16};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmsSync {
    /// Normalize each group by its own RMS.
    GroupOnly,
    /// Fold `rms_group / rms_global` into gamma so the result is the global norm.
    GlobalSync,
}

/// Group RMSNorm in binary16.
///
/// Squares are binary16 products; the adder tree accumulates them in
/// binary32 and the RMS unit rounds `sqrt(sum / n + eps)` once. The global
/// sum reuses the group sums. With `GlobalSync` the gamma step is a single
/// fused multiply `n * gamma * corr`, so the correction costs no extra
/// rounding of the output.
pub fn group_rmsnorm(
    x: &[f16],
    gamma: &[f16],
    groups: GroupSpec,
    sync: RmsSync,
) -> Result<Vec<f16>> {
    groups.validate()?;
    if x.len() != gamma.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: gamma.len(),
        });
    }
    if x.is_empty() {
        return Ok(Vec::new());
    }
    check_finite(x)?;
    check_finite(gamma)?;
    let eps = fp16::from_f64(groups.epsilon);
    let rms = |sum_sq: f32, n: usize| fp16::from_f32((sum_sq / n as f32 + eps.to_f32()).sqrt());

    let group_sums: Vec<f32> = x
        .chunks(groups.group_size)
        .map(|g| g.iter().map(|&v| fp16::mul(v, v).to_f32()).sum::<f32>())
        .collect();
    let rms_global = rms(group_sums.iter().sum::<f32>(), x.len());

    let mut out = Vec::with_capacity(x.len());
    for ((xg, gg), &sum_sq) in x
        .chunks(groups.group_size)
        .zip(gamma.chunks(groups.group_size))
        .zip(&group_sums)
    {
        let rms_g = rms(sum_sq, xg.len());
        let corr = match sync {
            RmsSync::GroupOnly => None,
            RmsSync::GlobalSync if rms_global.to_f32() > 0.0 => Some(fp16::div(rms_g, rms_global)),
            RmsSync::GlobalSync => Some(f16::ONE),
        };
        for (&v, &g) in xg.iter().zip(gg) {
            // an all-zero group with eps = 0 normalizes to zero
            let n = if rms_g.to_f32() == 0.0 {
                f16::ZERO
            } else {
                fp16::div(v, rms_g)
            };
            out.push(match corr {
                Some(c) => fp16::from_f64(n.to_f64() * g.to_f64() * c.to_f64()),
                None => fp16::mul(n, g),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear::exact_rmsnorm;

    fn row(v: &[f32]) -> Vec<f16> {
        v.iter().map(|&x| fp16::from_f32(x)).collect()
    }

    #[test]
    fn constant_row_normalizes_to_one() {
        let g = GroupSpec::new(4, 0.0).unwrap();
        for c in [0.5f32, 3.0, 17.0] {
            for sync in [RmsSync::GroupOnly, RmsSync::GlobalSync] {
                let y = group_rmsnorm(&row(&[c; 10]), &row(&[1.0; 10]), g, sync).unwrap();
                assert!(y.iter().all(|v| v.to_f32() == 1.0), "{c} {sync:?} {y:?}");
            }
        }
    }

    #[test]
    fn zero_gamma_gives_zero() {
        let y = group_rmsnorm(
            &row(&[1.0, -2.0, 3.0]),
            &row(&[0.0; 3]),
            GroupSpec::default(),
            RmsSync::GlobalSync,
        )
        .unwrap();
        assert!(y.iter().all(|v| v.to_f32() == 0.0));
    }

    #[test]
    fn zero_row_with_zero_eps() {
        let y = group_rmsnorm(
            &row(&[0.0; 40]),
            &row(&[1.0; 40]),
            GroupSpec::new(32, 0.0).unwrap(),
            RmsSync::GlobalSync,
        )
        .unwrap();
        assert!(y.iter().all(|v| v.to_f32() == 0.0));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            group_rmsnorm(
                &row(&[1.0]),
                &row(&[1.0, 1.0]),
                GroupSpec::default(),
                RmsSync::GroupOnly
            ),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn group_only_differs_from_global_on_uneven_groups() {
        let x = row(&[1.0, 1.0, 4.0, 4.0]);
        let gamma = row(&[1.0; 4]);
        let spec = GroupSpec::new(2, 0.0).unwrap();
        let local = group_rmsnorm(&x, &gamma, spec, RmsSync::GroupOnly).unwrap();
        let global = group_rmsnorm(&x, &gamma, spec, RmsSync::GlobalSync).unwrap();
        assert!(local.iter().all(|v| v.to_f32() == 1.0));
        let xf: Vec<f64> = x.iter().map(|v| v.to_f64()).collect();
        let oracle = exact_rmsnorm(&xf, &[1.0; 4], 0.0);
        for (a, b) in global.iter().zip(oracle) {
            assert!(fp16::ulp_distance(*a, fp16::from_f64(b)) <= 3);
        }
    }
}
