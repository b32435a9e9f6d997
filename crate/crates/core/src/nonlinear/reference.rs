//! Wide-precision oracles, no grouping.

/// Standard softmax in f64 with max subtraction.
pub fn exact_softmax(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.iter().map(|v| v / sum).collect()
}

/// `x_i / sqrt(mean(x^2) + eps) * gamma_i` in f64.
pub fn exact_rmsnorm(x: &[f64], gamma: &[f64], epsilon: f64) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let rms = (ms + epsilon).sqrt();
    x.iter().zip(gamma).map(|(v, g)| v / rms * g).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_pair_of_zeros() {
        assert_eq!(exact_softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_shift_invariant() {
        let x = [0.25, -1.5, 3.0, 0.0];
        let shifted: Vec<f64> = x.iter().map(|v| v + 7.0).collect();
        assert_eq!(exact_softmax(&x), exact_softmax(&shifted));
    }

    #[test]
    fn rmsnorm_three_four() {
        let y = exact_rmsnorm(&[3.0, 4.0], &[1.0, 1.0], 0.0);
        let r = 12.5f64.sqrt();
        assert!((y[0] - 3.0 / r).abs() < 1e-15 && (y[0] - 0.848_528_137).abs() < 1e-9);
        assert!((y[1] - 4.0 / r).abs() < 1e-15 && (y[1] - 1.131_370_849).abs() < 1e-9);
    }
}
