//! Deterministic counter-based random numbers.
//!
//! Every stochastic draw in the engine is a pure function of
//! `(master seed, unit id, stream)`, where the stream identifies the equation
//! or pipeline step. Draws therefore do not depend on evaluation order, which
//! makes parallel simulation reproducible by construction.

use statrs::distribution::{ContinuousCDF, Normal};

/// Streams separate the draw spaces of the different equations and steps.
/// The numeric codes are part of the determinism contract: changing them
/// changes every simulated output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    InWork = 1,
    EmployeeVsSelfEmployed = 2,
    Industry = 3,
    Occupation = 4,
    Sector = 5,
    Contract = 6,
    Unemployed = 7,
    EarningsLevel = 8,
    SourcePresence = 16, // + source index
    SourceLevel = 24,    // + source index
    CwsTakeup = 32,
    PupTakeup = 33,
    CapitalHolding = 34,
    Synthesis = 64, // + attribute offset
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` keyed by `(seed, id, stream)`.
pub fn keyed_uniform(seed: u64, id: u64, stream: u64) -> f64 {
    let a = splitmix64(seed ^ 0xA076_1D64_78BD_642F);
    let b = splitmix64(a ^ id.wrapping_mul(0xE703_7ED1_A0B4_28DB));
    let c = splitmix64(b ^ stream.wrapping_mul(0x8EBC_6AF0_9C88_C6E3));
    // 53 mantissa bits; never 1.0
    (c >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw keyed by `(seed, id, stream)`, via the inverse CDF.
pub fn keyed_normal(seed: u64, id: u64, stream: u64) -> f64 {
    let u = keyed_uniform(seed, id, stream).max(f64::MIN_POSITIVE);
    Normal::standard().inverse_cdf(u)
}
