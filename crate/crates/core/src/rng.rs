//! Counter-keyed random streams.
//!
//! A stream is addressed by `(seed, domain, replicate, round)`. The seed and
//! domain pick the ChaCha key, the replicate picks the ChaCha stream, and the
//! round picks a word offset, so the draws of round `t` in replicate `r` do not
//! depend on how many draws earlier rounds consumed or on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Word offset reserved per round (2^40 32-bit words).
const ROUND_STRIDE_BITS: u32 = 40;

/// Purpose tag separating independent uses of one experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Learner,
    Adversary,
    Noise,
    Probe,
    Advice,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Learner => 0x4c45_4152_4e45_5231,
            Domain::Adversary => 0x4144_5645_5253_4152,
            Domain::Noise => 0x4e4f_4953_4521_2121,
            Domain::Probe => 0x5052_4f42_4521_2121,
            Domain::Advice => 0x4144_5649_4345_2121,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    key: [u8; 32],
    replicate: u64,
}

impl RngStream {
    pub fn new(seed: u64, domain: Domain) -> Self {
        let mut state = seed ^ domain.tag();
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { key, replicate: 0 }
    }

    pub fn replicate(mut self, replicate: u64) -> Self {
        self.replicate = replicate;
        self
    }

    /// Generator positioned at the start of `round`'s block.
    pub fn round(&self, round: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(self.replicate);
        rng.set_word_pos((round as u128) << ROUND_STRIDE_BITS);
        rng
    }
}
