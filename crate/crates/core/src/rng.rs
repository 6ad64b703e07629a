//! Seeded random streams.
//!
//! Every generator derives its randomness from one 64-bit seed; each
//! component draws from its own ChaCha stream selected by name, so adding
//! draws to one component never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a, used to turn a component name into a stream id.
fn stream_id(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Returns the random stream `name` under `seed`.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(name));
    rng
}
