use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub fn relu_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// Gradient of ReLU given the forward input.
pub fn relu_backward(input: &[f64], upstream: &[f64]) -> Vec<f64> {
    input
        .iter()
        .zip(upstream)
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect()
}

/// Inverted dropout. Returns the output and the per-element multiplier
/// (`0` or `1/(1−rate)`), which is also the backward scaling.
pub fn dropout_forward(x: &[f64], rate: f64, mode: Mode, seed: u64) -> (Vec<f64>, Option<Vec<f64>>) {
    if mode == Mode::Eval || rate == 0.0 {
        return (x.to_vec(), None);
    }
    let keep = 1.0 / (1.0 - rate);
    let mut stream = rng::stream(seed);
    let mask: Vec<f64> = (0..x.len())
        .map(|_| if rng::unit(&mut stream) >= rate { keep } else { 0.0 })
        .collect();
    (x.iter().zip(&mask).map(|(a, m)| a * m).collect(), Some(mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_zero_rate_are_identity() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        assert_eq!(dropout_forward(&x, 0.3, Mode::Eval, 1).0, x);
        assert_eq!(dropout_forward(&x, 0.0, Mode::Train, 1).0, x);
        assert_eq!(dropout_forward(&x, 0.0, Mode::Eval, 1).0, x);
    }

    #[test]
    fn train_mode_keeps_ninety_percent_in_expectation() {
        let n = 200_000;
        let x = vec![2.0; n];
        let (y, mask) = dropout_forward(&x, 0.10, Mode::Train, 17);
        let kept = mask.unwrap().iter().filter(|&&m| m > 0.0).count() as f64;
        let p = 0.9;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((kept - n as f64 * p).abs() <= 3.0 * sd, "kept {kept}");
        let mean = y.iter().sum::<f64>() / n as f64;
        // E[y] = x; sd of the mean is 2·sqrt(p(1−p))/p/sqrt(n)
        let sd_mean = 2.0 * (p * (1.0 - p)).sqrt() / p / (n as f64).sqrt();
        assert!((mean - 2.0).abs() <= 3.0 * sd_mean, "mean {mean}");
    }

    #[test]
    fn relu_gradient_masks_negative_inputs() {
        let x = [-1.0, 0.0, 2.0];
        assert_eq!(relu_forward(&x), vec![0.0, 0.0, 2.0]);
        assert_eq!(relu_backward(&x, &[5.0, 5.0, 5.0]), vec![0.0, 0.0, 5.0]);
    }
}
