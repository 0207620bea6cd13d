//! Deterministic derivation of per-patch random streams from a single root
//! seed, stable across platforms and runs.

/// Derive a child seed from a root seed and a stream tag (FNV-1a over the
/// root's little-endian bytes followed by the tag bytes).
pub fn derive_seed(root: u64, tag: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for byte in root.to_le_bytes() {
        hash = (hash ^ byte as u64).wrapping_mul(PRIME);
    }
    for byte in tag.as_bytes() {
        hash = (hash ^ *byte as u64).wrapping_mul(PRIME);
    }
    hash
}
