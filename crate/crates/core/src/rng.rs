//! Counter-based random streams.
//!
//! Simulations draw every random value from a pure function of
//! `(master seed, replication, node, step, salt)`. Replications can
//! therefore run in any order or on any number of threads without
//! changing results, and two protocols run with the same seed see the
//! same arrival stream.

/// Salt for the per-node arrival coin.
pub const SALT_ARRIVAL: u32 = 1;
/// Salt for the destination draw of a new packet.
pub const SALT_DEST: u32 = 2;
/// Salt for the geometric-ring departure coin.
pub const SALT_GEO: u32 = 3;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One replication's stream, keyed by `(seed, replication)`.
#[derive(Debug, Clone, Copy)]
pub struct StreamRng {
    base: u64,
}

impl StreamRng {
    pub fn new(seed: u64, replication: u64) -> Self {
        let base = mix(seed.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0x2545_f491_4f6c_dd1d) ^ mix(replication.wrapping_add(0x1656_67b1_9e37_79f9)));
        StreamRng { base }
    }

    /// Raw 64 draw for `(node, step, salt)`.
    #[inline]
    pub fn draw(&self, node: u32, step: u64, salt: u32) -> u64 {
        let lane = ((node as u64) << 32) | salt as u64;
        mix(self.base ^ mix(step.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ lane.wrapping_mul(0xd6e8_feb8_6659_fd93))
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn unit(&self, node: u32, step: u64, salt: u32) -> f64 {
        (self.draw(node, step, salt) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `1..=n`.
    #[inline]
    pub fn uniform_1_to(&self, node: u32, step: u64, salt: u32, n: u32) -> u32 {
        1 + (self.draw(node, step, salt) % n as u64) as u32
    }
}
