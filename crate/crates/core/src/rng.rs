//! Seeded pseudo-random generation.
//!
//! Every randomized operation in the crate draws from [`Rng`], which is
//! xoshiro256** (Blackman & Vigna) seeded by expanding a `u64` through four
//! rounds of SplitMix64. The derived distributions are fixed as follows so
//! that any implementation following them reproduces the same streams:
//!
//! * uniform `[0, 1)`: `(next_u64() >> 11) * 2^-53`
//! * uniform `(0, 1)`: `((next_u64() >> 11) + 0.5) * 2^-53`
//! * integer in `[0, n)`: Lemire's multiply-shift with rejection
//! * standard normal: Box–Muller, cosine branch only; `u1` from the open
//!   interval, `u2` from the half-open one, two words per draw:
//!   `sqrt(-2 ln u1) * cos(2π u2)`
//! * Laplace(0, b): inverse CDF on `u = open01() - 0.5`:
//!   `-b * sign(u) * ln(1 - 2|u|)`
//! * shuffle: Fisher–Yates from the last index down

use core::f64::consts::PI;

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

/// One SplitMix64 step; advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self::from_state(s)
    }

    /// Raw state constructor. An all-zero state is a fixed point of the
    /// generator and is replaced by the SplitMix64 expansion of 0.
    pub fn from_state(s: [u64; 4]) -> Self {
        if s == [0; 4] {
            return Self::seed_from_u64(0);
        }
        Self { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * INV_2_53
    }

    /// Uniform on `(0, 1)`.
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * INV_2_53
    }

    /// Uniform integer on `[0, n)`. `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.open01();
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
    }

    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        mean + std_dev * self.standard_normal()
    }

    /// Laplace(0, `scale`). A zero scale consumes one word and returns 0.
    pub fn laplace(&mut self, scale: f64) -> f64 {
        let u = self.open01() - 0.5;
        if scale == 0.0 {
            return 0.0;
        }
        let magnitude = -scale * libm::log(1.0 - 2.0 * libm::fabs(u));
        if u < 0.0 {
            -magnitude
        } else {
            magnitude
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}
