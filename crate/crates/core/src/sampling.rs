//! Low-discrepancy sample points on annuli (additive recurrence on the
//! plastic-number lattice, shifted by a seed).

use crate::math::{C64, TWO_PI};
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

const A1: f64 = 0.754_877_666_246_692_8;
const A2: f64 = 0.569_840_290_998_053_3;

fn seed_shift(seed: u64) -> (f64, f64) {
    let mut x = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut next = || {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    };
    (next(), next())
}

/// `n` points with `r_lo <= |z| <= r_hi`, area-uniform in radius.
pub fn annulus_samples(n: usize, r_lo: f64, r_hi: f64, seed: u64) -> Vec<C64> {
    let (s1, s2) = seed_shift(seed);
    (0..n)
        .map(|k| {
            let u = (s1 + (k as f64 + 1.0) * A1).fract();
            let v = (s2 + (k as f64 + 1.0) * A2).fract();
            let r = (r_lo * r_lo + u * (r_hi * r_hi - r_lo * r_lo)).sqrt();
            C64::from_polar(r, TWO_PI * v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_stay_in_annulus_and_are_reproducible() {
        let a = annulus_samples(200, 10.0, 30.0, 7);
        let b = annulus_samples(200, 10.0, 30.0, 7);
        assert_eq!(a, b);
        for z in &a {
            let r = z.norm();
            assert!((10.0 - 1e-9..=30.0 + 1e-9).contains(&r));
        }
        let c = annulus_samples(200, 10.0, 30.0, 8);
        assert_ne!(a, c);
    }
}
