//! Small shared helpers: deterministic seed derivation and open-interval
//! uniform variates.

use rand_core::RngCore;

/// splitmix64 finalizer; bijective on u64.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-row seed: the splitmix64 stream seeded at `base`, read at
/// position `index + 1`. Distinct rows of one sweep never share a seed with
/// each other or with the base experiment.
pub(crate) fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Uniform variate strictly inside (0, 1): 53-bit mantissa shifted by half a
/// step, so inverse-transform sampling never evaluates a quantile at 0 or 1.
pub(crate) fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Uniform variate in [lo, hi).
pub(crate) fn uniform_in(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * ((rng.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64)
}
