//! Deterministic pseudo-random numbers for weight initialization.
//!
//! The generator is pinned down to the bit so that training runs reproduce
//! exactly: xorshift64* (shifts 12/25/27, multiplier 0x2545F4914F6CDD1D),
//! with the user seed passed through splitmix64 once to spread low-entropy
//! seeds over the whole state space.

/// One round of splitmix64.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed for grid point `index` of a sweep started from `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base).wrapping_add(index))
}

#[derive(Debug, Clone)]
pub struct Xorshift64Star {
    state: u64,
}

impl Xorshift64Star {
    pub fn new(seed: u64) -> Self {
        let mut state = splitmix64(seed);
        if state == 0 {
            // xorshift state must be nonzero
            state = 0x9E37_79B9_7F4A_7C15;
        }
        Self { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform on the open interval (0, 1): the top 53 bits of the output
    /// plus half an ulp, so neither endpoint is reachable.
    pub fn next_unit_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform on the open interval (-0.5, 0.5).
    pub fn next_symmetric(&mut self) -> f64 {
        self.next_unit_open() - 0.5
    }
}
