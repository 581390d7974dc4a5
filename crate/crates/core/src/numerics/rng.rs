//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, stream_id, counter)`. The seed keys a
//! ChaCha12 block cipher, the stream id selects its 64-bit nonce and the
//! counter is the word position inside that stream, so any value can be
//! regenerated without replaying earlier draws. Row `i` of a batch always
//! reads from its own substream, which keeps results independent of how the
//! rows are split across workers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer, used to spread seeds and derive substream ids.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_from_seed(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = mix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

/// Deterministic, seekable random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self::at(seed, stream_id, 0)
    }

    /// Positions the stream at 32-bit word `counter`.
    pub fn at(seed: u64, stream_id: u64, counter: u64) -> Self {
        let mut inner = ChaCha12Rng::from_seed(key_from_seed(seed));
        inner.set_stream(stream_id);
        inner.set_word_pos(counter as u128);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u64 {
        self.inner.get_word_pos() as u64
    }

    /// Child stream `index` of this stream, positioned at its start.
    ///
    /// The child id depends only on `(stream_id, index)`, never on how much
    /// of the parent has been consumed.
    pub fn substream(&self, index: u64) -> Self {
        let id = mix64(self.stream_id ^ mix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)));
        Self::new(self.seed, id)
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        loop {
            // 53 random mantissa bits, offset by half an ulp so 0 cannot occur.
            let bits = self.inner.next_u64() >> 11;
            let u = (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
            if u < 1.0 {
                return u;
            }
        }
    }

    /// Fair random sign.
    pub fn sign(&mut self) -> f64 {
        if self.inner.next_u32() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
