//! Deterministic per-repetition random streams.
//!
//! A stream is a splitmix64 generator. Its initial state for
//! `(base_seed, stream_index)` is obtained by advancing a splitmix64 counter
//! seeded at `base_seed` exactly `stream_index + 1` times and taking the mixed
//! output:
//!
//! ```text
//! s     = base_seed + (stream_index + 1) * 0x9E3779B97F4A7C15   (mod 2^64)
//! state = mix64(s)
//! ```
//!
//! Each draw then advances `state += 0x9E3779B97F4A7C15` and returns
//! `mix64(state)`. `mix64` is the Stafford variant-13 finalizer used by
//! splitmix64.

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_CONST1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_CONST2: u64 = 0x94D0_49BB_1331_11EB;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_CONST1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_CONST2);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    state: u64,
    base_seed: u64,
    stream_index: u32,
}

/// Stream for repetition `stream_index` under `base_seed`.
pub fn make_rng_stream(base_seed: u64, stream_index: u32) -> RngStream {
    let s = base_seed.wrapping_add((u64::from(stream_index) + 1).wrapping_mul(GOLDEN_GAMMA));
    RngStream {
        state: mix64(s),
        base_seed,
        stream_index,
    }
}

impl RngStream {
    pub fn origin(&self) -> (u64, u32) {
        (self.base_seed, self.stream_index)
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
