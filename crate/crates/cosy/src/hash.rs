//! Stable hashing and seeded pseudo-randomness.
//!
//! Everything that must reproduce across runs, platforms, and dependency
//! upgrades goes through these two primitives instead of `std::hash` or an
//! external RNG crate: FNV-1a for content addressing and SplitMix64 for
//! deterministic draws.

/// 64-bit FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// SplitMix64 generator. Cheap, full-period over the u64 state, and trivially
/// seedable, which is all the deterministic sampling here needs.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from `0..bound`. `bound` must be positive.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "next_below requires a positive bound");
        self.next_u64() % bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_matches_reference_vectors() {
        // Vectors from the published FNV test suite.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn fnv_low_bytes_give_expected_colors() {
        // The mock image backend derives a base RGB color from the low three
        // bytes of the concept hash. Pin a few so the fixture colors used in
        // the acceptance tests stay tied to the hash function.
        let color = |s: &str| {
            let h = fnv1a64(s.as_bytes());
            ((h & 0xff) as u8, ((h >> 8) & 0xff) as u8, ((h >> 16) & 0xff) as u8)
        };
        assert_eq!(color("rope"), (205, 25, 25));
        assert_eq!(color("lagoon"), (101, 233, 209));
        assert_eq!(color("reef"), (43, 120, 232));
        assert_eq!(color("crate"), (96, 220, 226));
    }

    #[test]
    fn splitmix_matches_reference_sequence() {
        // First three outputs for seed 1234567, per the reference
        // implementation in the SplitMix64 paper's public domain C code.
        let mut rng = SplitMix64::new(1234567);
        assert_eq!(rng.next_u64(), 6457827717110365317);
        assert_eq!(rng.next_u64(), 3203168211198807973);
        assert_eq!(rng.next_u64(), 9817491932198370423);
    }

    #[test]
    fn next_below_stays_in_bounds() {
        let mut rng = SplitMix64::new(42);
        for _ in 0..1000 {
            assert!(rng.next_below(7) < 7);
        }
    }
}
