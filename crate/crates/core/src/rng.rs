//! Seeded, sharded random streams.
//!
//! Every stochastic routine takes a 64-bit seed. Work is cut into shards of a
//! fixed size that does not depend on the thread count; shard `i` draws from
//! ChaCha8 seeded with `seed` on stream `i`. Shard results are merged in shard
//! order, so output is bit-identical for any number of rayon workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type Rng = ChaCha8Rng;

/// Default number of draws per shard.
pub const SHARD: usize = 1 << 14;

/// Independent generator for (seed, stream).
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a child seed; used when one seeded routine calls another.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer on the pair
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Split `total` items into fixed shards and run `f(rng, start, len)` on each
/// in parallel. Results come back in shard order.
pub fn par_shards<T, F>(total: usize, shard: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Rng, usize, usize) -> T + Sync,
{
    let shard = shard.max(1);
    let count = total.div_ceil(shard);
    (0..count)
        .into_par_iter()
        .map(|i| {
            let start = i * shard;
            let len = shard.min(total - start);
            let mut rng = stream(seed, i as u64);
            f(&mut rng, start, len)
        })
        .collect()
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn open01(rng: &mut Rng) -> f64 {
    use rand::Rng as _;
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
