use serde::{Deserialize, Serialize};

use super::{check_finite, GroupSpec, LutTable};
use crate::error::{Error, Result};
use crate::fp16::{self, f16};

/// Exponential used after max subtraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Lut,
    ExactExp,
}

/// Per-group softmax: each group subtracts its own max, exponentiates and
/// divides by its own sum. Every operation rounds to binary16.
pub fn group_softmax(
    x: &[f16],
    groups: GroupSpec,
    lut: &LutTable,
    exactness: Exactness,
) -> Result<Vec<f16>> {
    groups.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyRow);
    }
    check_finite(x)?;
    let mut out = Vec::with_capacity(x.len());
    for g in x.chunks(groups.group_size) {
        let max = g.iter().copied().fold(f16::NEG_INFINITY, f16::max);
        let e: Vec<f16> = g
            .iter()
            .map(|&v| {
                // v <= max, so the rounded difference is <= 0
                let d = fp16::sub(v, max);
                match exactness {
                    Exactness::Lut => lut.eval(d),
                    Exactness::ExactExp => fp16::from_f64(d.to_f64().exp()),
                }
            })
            .collect();
        let sum = fp16::tree_sum(&e);
        out.extend(e.iter().map(|&v| fp16::div(v, sum)));
    }
    Ok(out)
}
