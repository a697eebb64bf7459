//! Stable 64-bit FNV-1a, used wherever a hash must not change between
//! builds or platforms (feature hashing, per-post seeds, config digests).

const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    fnv1a_extend(OFFSET, bytes)
}

pub fn fnv1a_extend(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Derives an independent seed for one item of a seeded run.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    fnv1a_extend(fnv1a(&seed.to_le_bytes()), key.as_bytes())
}
