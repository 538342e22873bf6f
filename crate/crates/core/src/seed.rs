//! Seed derivation for replicated experiments.
//!
//! Every random stream of replicate `r` at step `t` is seeded with
//! `base ⊕ h(r, t, stream)`, where `h` chains SplitMix64 finalizers. The
//! derivation is fixed across platforms and releases.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent random streams used by one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    InitialDesign = 1,
    TestSet = 2,
    Candidates = 3,
    Theta = 4,
}

pub fn derive_seed(base: u64, replicate: u64, step: u64, stream: Stream) -> u64 {
    let h = splitmix64(splitmix64(splitmix64(replicate) ^ step) ^ stream as u64);
    base ^ h
}
