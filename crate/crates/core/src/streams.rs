//! Counter-based random substreams for reproducible parallel Monte Carlo.
//!
//! Trial `t` of an experiment always draws from ChaCha8 stream `t` under a
//! key derived from `(seed, salt)`, so results do not depend on how trials
//! are split across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Trials handed to one rayon task.
const CHUNK: u64 = 2048;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct TrialStreams {
    base: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(seed: u64, salt: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed ^ splitmix64(salt);
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        TrialStreams { base: ChaCha8Rng::from_seed(key) }
    }

    /// Independent generator for one trial index.
    pub fn trial(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }

    /// Counts trials in `[start, end)` for which `event` returns true,
    /// in parallel on the current rayon pool.
    pub fn count<F>(&self, start: u64, end: u64, event: F) -> u64
    where
        F: Fn(&mut ChaCha8Rng) -> bool + Sync,
    {
        if end <= start {
            return 0;
        }
        let chunks = (end - start).div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = start + c * CHUNK;
                let hi = (lo + CHUNK).min(end);
                (lo..hi).filter(|&t| event(&mut self.trial(t))).count() as u64
            })
            .sum()
    }

    /// Like [`TrialStreams::count`] but the closure may fail; the first error
    /// in trial order is not guaranteed, any error aborts.
    pub fn try_count<F, E>(&self, start: u64, end: u64, event: F) -> Result<u64, E>
    where
        F: Fn(&mut ChaCha8Rng) -> Result<bool, E> + Sync,
        E: Send,
    {
        if end <= start {
            return Ok(0);
        }
        let chunks = (end - start).div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = start + c * CHUNK;
                let hi = (lo + CHUNK).min(end);
                let mut n = 0u64;
                for t in lo..hi {
                    if event(&mut self.trial(t))? {
                        n += 1;
                    }
                }
                Ok(n)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))
    }
}

/// Salt for one SNR point, so every grid point gets its own key.
pub fn point_salt(tag: u64, rho: f64) -> u64 {
    splitmix64(tag ^ splitmix64(rho.to_bits()))
}
