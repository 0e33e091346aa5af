//! Stable seed derivation.
//!
//! Child seeds are FNV-1a over the little-endian words, finished with the
//! splitmix64 mixer. Values never depend on platform or thread scheduling.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>, mut h: u64) -> u64 {
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Mixes a sequence of words into one seed.
pub fn derive(words: &[u64]) -> u64 {
    let h = fnv1a(words.iter().flat_map(|w| w.to_le_bytes()), FNV_OFFSET);
    splitmix64(h)
}

/// Seed for one replicate of one grid cell.
pub fn replicate_seed(base_seed: u64, cell: usize, replicate: usize) -> u64 {
    derive(&[base_seed, cell as u64, replicate as u64])
}

/// Seed keyed by a label, e.g. a method name, so streams stay independent.
pub fn labeled(seed: u64, label: &str) -> u64 {
    derive(&[seed, fnv1a(label.bytes(), FNV_OFFSET)])
}
