//! Deterministic seed derivation for experiment cells.
//!
//! Starting-point seeds are keyed only on the plan seed, the problem seed
//! and the starting-point index, so adding a method or a tolerance to a
//! grid never perturbs the starting points of existing cells, and every
//! method sees identical starting points within a cell.

/// SplitMix64 output function: a bijective avalanche mix of the input.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a stream index.
pub fn derive(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream.wrapping_add(1)))
}

/// Seed for one starting point: `(plan seed, problem seed, start index)`.
pub fn start_seed(plan_seed: u64, problem_seed: u64, start_index: u64) -> u64 {
    derive(derive(plan_seed, problem_seed), start_index)
}
