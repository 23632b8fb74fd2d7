use super::config::{AlternationPolicy, ThresholdParams};
use crate::error::{Error, Result};

/// Loss threshold at turn-pair index `i`: `max(decay^i + offset, floor)`.
pub fn threshold_value(p: ThresholdParams, i: usize) -> f64 {
    let i = i32::try_from(i).unwrap_or(i32::MAX);
    (p.decay.powi(i) + p.offset).max(p.floor)
}

/// `(generator, discriminator)` thresholds of a dynamic policy at iteration `i`.
pub fn threshold(policy: &AlternationPolicy, i: usize) -> Result<(f64, f64)> {
    match *policy {
        AlternationPolicy::Dynamic {
            generator,
            discriminator,
        } => Ok((threshold_value(generator, i), threshold_value(discriminator, i))),
        AlternationPolicy::Fixed { .. } => Err(Error::config("fixed alternation has no loss threshold")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discriminator_threshold_starts_at_one_and_floors() {
        let d = ThresholdParams::DISCRIMINATOR;
        assert_eq!(threshold_value(d, 0), 1.0);
        assert_eq!(threshold_value(d, 500), 0.7);
    }

    #[test]
    fn generator_threshold_at_ten() {
        let g = ThresholdParams::GENERATOR;
        let v = threshold_value(g, 10);
        assert!((v - (0.95f64.powi(10) + 1.0)).abs() < 1e-15);
        assert!((v - 1.5987).abs() < 1e-4);
    }

    #[test]
    fn non_increasing_and_bounded() {
        for p in [ThresholdParams::GENERATOR, ThresholdParams::DISCRIMINATOR] {
            let mut prev = f64::INFINITY;
            for i in 0..2000 {
                let v = threshold_value(p, i);
                assert!(v <= prev && v >= p.floor);
                prev = v;
            }
        }
    }

    #[test]
    fn fixed_policy_has_no_threshold() {
        assert!(threshold(&AlternationPolicy::fixed(1), 0).is_err());
        let (g, d) = threshold(&AlternationPolicy::dynamic_default(), 0).unwrap();
        assert_eq!((g, d), (2.0, 1.0));
    }
}
