//! Child seed derivation.
//!
//! Every trial gets its own ChaCha stream keyed by SHA-256 over
//! `(master_seed, experiment, setting, trial)`. A trial's stream depends only
//! on its own coordinates, so adding settings or changing the worker count
//! never perturbs any other trial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type TrialRng = ChaCha8Rng;

pub fn child_seed(master_seed: u64, experiment: &str, setting: &str, trial: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"acdq-trial-seed\0");
    hasher.update(master_seed.to_le_bytes());
    // length prefixes keep ("ab", "c") and ("a", "bc") apart
    hasher.update((experiment.len() as u64).to_le_bytes());
    hasher.update(experiment.as_bytes());
    hasher.update((setting.len() as u64).to_le_bytes());
    hasher.update(setting.as_bytes());
    hasher.update(trial.to_le_bytes());
    hasher.finalize().into()
}

pub fn trial_rng(master_seed: u64, experiment: &str, setting: &str, trial: u64) -> TrialRng {
    ChaCha8Rng::from_seed(child_seed(master_seed, experiment, setting, trial))
}
