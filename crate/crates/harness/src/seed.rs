//! Seed-splitting rule.
//!
//! Every random stream in an experiment is derived from the master seed by
//! SplitMix64 finalization of `parent + (index + 1) * GOLDEN`, so parallel
//! and serial runs draw identical streams:
//!
//! ```text
//! trial_seed  = split(master_seed, trial_index)
//! matrix_seed = split(trial_seed, 0)
//! signal_seed = split(trial_seed, 1)
//! noise_seed  = split(trial_seed, 2)
//! ```

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer over `parent` advanced by `index + 1` steps' worth of
/// the golden-ratio increment.
pub fn split(parent: u64, index: u64) -> u64 {
    let mut z = parent.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, trial: u64) -> u64 {
    split(master, trial)
}

#[derive(Debug, Clone, Copy)]
pub struct TrialStreams {
    pub matrix: u64,
    pub signal: u64,
    pub noise: u64,
}

pub fn trial_streams(master: u64, trial: u64) -> TrialStreams {
    let base = trial_seed(master, trial);
    TrialStreams {
        matrix: split(base, 0),
        signal: split(base, 1),
        noise: split(base, 2),
    }
}
