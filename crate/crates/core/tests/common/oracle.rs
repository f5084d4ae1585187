//! Extended-precision reference for ce_u: exact integer counts, exponentials
//! in 200-bit fixed point.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

/// 2^-200 fixed point.
const FRAC_BITS: u32 = 200;

pub fn one() -> BigInt {
    BigInt::one() << FRAC_BITS
}

/// exp(p / q) for 0 <= p <= q, Taylor series in fixed point.
pub fn exp_ratio(p: u32, q: u32) -> BigInt {
    let mut term = one();
    let mut sum = term.clone();
    let mut k = 1u32;
    while !term.is_zero() {
        term = term * BigInt::from(p) / BigInt::from(u64::from(q) * u64::from(k));
        sum += &term;
        k += 1;
    }
    sum
}

/// 1 - exp(max/n) / sum_c exp(h_c/n), evaluated from the raw counts.
pub fn oracle(counts: &[u32]) -> f64 {
    let total: u32 = counts.iter().sum();
    let max = *counts.iter().max().unwrap();
    let denominator: BigInt = counts
        .iter()
        .filter(|&&h| h > 0)
        .map(|&h| exp_ratio(h, total))
        .sum();
    let ratio = (exp_ratio(max, total) << FRAC_BITS) / denominator;
    let u = one() - ratio;
    // keep 64 fractional bits; f64 carries 53 of them
    let scaled = (u >> (FRAC_BITS - 64)).to_f64().unwrap();
    scaled / 2f64.powi(64)
}
