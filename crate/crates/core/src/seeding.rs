//! Counter-based sub-seed derivation: stream element `i` is a pure function
//! of `(master_seed, i)`, so samples are reproducible, prefix-stable, and
//! safe to draw in any order.

/// splitmix64 finalizer over the master seed combined with the index.
pub(crate) fn sub_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
