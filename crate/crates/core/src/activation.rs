//! The logistic squasher `1 / (1 + e^-z)`.
//!
//! The hot loops apply the squasher to whole rows of activations, so the
//! exponential is a branch-free polynomial kernel the compiler can vectorize.
//! It agrees with `f64::exp` to a couple of ulps over the clamped range.

const LOG2_E: f64 = std::f64::consts::LOG2_E;
const LN2_HI: f64 = 6.931_471_803_691_238e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
// 1.5 * 2^52: adding it rounds to the nearest integer and leaves that integer
// in the low mantissa bits.
const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0;
const EXP_LIMIT: f64 = 708.0;

/// `e^x` for finite `x`; the argument is clamped to `[-708, 708]`.
#[inline(always)]
pub fn exp(x: f64) -> f64 {
    let x = x.clamp(-EXP_LIMIT, EXP_LIMIT);
    let shifted = x * LOG2_E + ROUND_MAGIC;
    let k = shifted - ROUND_MAGIC;
    let r = (x - k * LN2_HI) - k * LN2_LO;
    // Taylor series of e^r on |r| <= ln(2)/2, truncated after r^12.
    let mut p = 1.0 / 479_001_600.0;
    p = p * r + 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    let ki = (shifted.to_bits() as i64).wrapping_sub(ROUND_MAGIC.to_bits() as i64);
    let scale = f64::from_bits(((ki + 1023) as u64) << 52);
    p * scale
}

#[inline(always)]
pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + exp(-z))
}

/// Derivative of the squasher expressed through its value: `s (1 - s)`.
#[inline(always)]
pub fn logistic_slope(s: f64) -> f64 {
    s * (1.0 - s)
}

/// Replaces every pre-activation in `z` by its squashed value.
#[inline(always)]
pub fn logistic_in_place(z: &mut [f64]) {
    for v in z.iter_mut() {
        *v = logistic(*v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_matches_std() {
        let mut worst: f64 = 0.0;
        let mut x = -708.0;
        while x <= 708.0 {
            let rel = ((exp(x) - x.exp()) / x.exp()).abs();
            worst = worst.max(rel);
            x += 0.013_7;
        }
        assert!(worst < 1e-15, "worst relative error {worst}");
        assert_eq!(exp(0.0), 1.0);
    }

    #[test]
    fn logistic_limits() {
        assert_eq!(logistic(0.0), 0.5);
        assert_eq!(logistic(1e6), 1.0);
        assert!(logistic(-1e6) >= 0.0 && logistic(-1e6) < 1e-300);
        for z in [-30.0, -2.5, -0.1, 0.3, 4.0, 25.0] {
            let expect = 1.0 / (1.0 + f64::exp(-z));
            assert!((logistic(z) - expect).abs() <= 1e-15 * expect);
        }
    }
}
