//! Binary16 datapath arithmetic.
//!
//! Every operation is evaluated in f32 and rounded once to binary16
//! (round-to-nearest-even). f32 carries more than `2p + 2` significand bits
//! for p = 11, so the intermediate rounding never changes the result.

pub use half::f16;

#[inline]
pub fn from_f32(x: f32) -> f16 {
    f16::from_f32(x)
}

#[inline]
pub fn from_f64(x: f64) -> f16 {
    f16::from_f64(x)
}

#[inline]
pub fn add(a: f16, b: f16) -> f16 {
    f16::from_f32(a.to_f32() + b.to_f32())
}

#[inline]
pub fn sub(a: f16, b: f16) -> f16 {
    f16::from_f32(a.to_f32() - b.to_f32())
}

#[inline]
pub fn mul(a: f16, b: f16) -> f16 {
    f16::from_f32(a.to_f32() * b.to_f32())
}

#[inline]
pub fn div(a: f16, b: f16) -> f16 {
    f16::from_f32(a.to_f32() / b.to_f32())
}

#[inline]
pub fn sqrt(a: f16) -> f16 {
    f16::from_f32(a.to_f32().sqrt())
}

/// Binary-tree reduction, rounding at every adder.
pub fn tree_sum(values: &[f16]) -> f16 {
    match values.len() {
        0 => f16::ZERO,
        1 => values[0],
        _ => {
            let mut level: Vec<f16> = values.to_vec();
            while level.len() > 1 {
                level = level
                    .chunks(2)
                    .map(|p| if p.len() == 2 { add(p[0], p[1]) } else { p[0] })
                    .collect();
            }
            level[0]
        }
    }
}

/// Spacing between `x` and the next binary16 value away from zero.
pub fn ulp(x: f64) -> f64 {
    let a = x.abs();
    if a < f16::MIN_POSITIVE.to_f64() {
        // subnormal spacing
        return 2f64.powi(-24);
    }
    let e = a.log2().floor() as i32;
    2f64.powi(e - 10)
}

/// Distance between `value` and `reference` in binary16 ulps of the reference.
pub fn ulps_between(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / ulp(reference)
}

/// Number of representable binary16 steps between two finite values.
pub fn ulp_distance(a: f16, b: f16) -> u32 {
    fn ordered(x: f16) -> i32 {
        let bits = i32::from(x.to_bits());
        if bits & 0x8000 != 0 {
            -(bits & 0x7fff)
        } else {
            bits
        }
    }
    ordered(a).abs_diff(ordered(b))
}
