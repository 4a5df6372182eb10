//! Deterministic seed derivation.
//!
//! Per-trial seeds are derived from the master seed with a splitmix64 chain
//! over the cell coordinates, so results are independent of execution order
//! and parallelism.

pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a list of coordinates into one seed.
pub fn mix(parts: &[u64]) -> u64 {
    let mut acc = 0x5DEE_CE66_D1CE_4E5Bu64;
    for &p in parts {
        acc = splitmix64(acc ^ splitmix64(p));
    }
    acc
}
