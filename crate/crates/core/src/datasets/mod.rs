//! Dataset and model persistence plus the synthetic biosignal generator.
//!
//! On-disk layout: a `manifest` JSON file at the dataset root and one CSV
//! per trial per modality under `trials/` named
//! `s<session>_b<block>_t<trial>_<eeg|emg>.csv` (rows = channels, columns =
//! samples, comma-separated decimal text, no header).

mod io;
mod synth;

pub use io::{
    atomic_write, load_dataset, load_model_bundle, save_model_bundle, write_dataset,
    LoadedDataset, BUNDLE_FORMAT_VERSION,
};
pub use synth::generate_synthetic;
pub(crate) use synth::splitmix64;

use serde::{Deserialize, Serialize};

use crate::decoder::{GestureLabel, Hand};
use crate::error::{Error, Result};

/// The 19 EEG electrode labels in channel-row order.
pub const EEG_CHANNELS: [&str; 19] = [
    "F3", "F4", "FC5", "FC3", "FCz", "FC4", "FC6", "C5", "C3", "C1", "Cz", "C2", "C4", "C6",
    "CP5", "CP3", "CPz", "CP4", "CP6",
];

/// The 6 forearm muscles recorded by the bipolar EMG montage, in
/// channel-row order.
pub const EMG_CHANNELS: [&str; 6] = [
    "extensor digitorum",
    "flexor carpi ulnaris",
    "flexor digitorum superficialis",
    "extensor carpi ulnaris",
    "brachioradialis",
    "pronator teres",
];

/// Native sampling rate of both modalities.
pub const NATIVE_RATE_HZ: f64 = 1200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDescriptor {
    pub trial_index: u32,
    pub label: GestureLabel,
    pub eeg_file: String,
    pub emg_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDescriptor {
    pub block: u32,
    pub hand: Hand,
    pub trials: Vec<TrialDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub session: u32,
    pub blocks: Vec<BlockDescriptor>,
}

/// Structured-text index of a dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub subject_id: String,
    pub eeg_rate_hz: f64,
    pub emg_rate_hz: f64,
    pub eeg_channels: Vec<String>,
    pub emg_channels: Vec<String>,
    pub sessions: Vec<SessionDescriptor>,
}

impl DatasetManifest {
    pub fn n_trials(&self) -> usize {
        self.sessions
            .iter()
            .flat_map(|s| s.blocks.iter())
            .map(|b| b.trials.len())
            .sum()
    }
}

/// Parameters of the synthetic generator.
///
/// `separability_*` scale every label-dependent effect; at zero the signals
/// carry no class information at all. `session_drift` rotates the EEG
/// mixing matrix and rescales EMG channel gains per session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub separability_eeg: f64,
    pub separability_emg: f64,
    pub noise_floor: f64,
    pub session_drift: f64,
    pub n_sessions: u32,
    pub n_blocks: u32,
    pub n_trials_per_block: u32,
}

impl SynthConfig {
    /// The full recording layout the generator mirrors: 5 sessions of
    /// 8 blocks of 50 trials (400 trials per session).
    pub fn full_layout(seed: u64) -> Self {
        SynthConfig {
            seed,
            separability_eeg: 2.0,
            separability_emg: 2.0,
            noise_floor: 0.1,
            session_drift: 0.0,
            n_sessions: 5,
            n_blocks: 8,
            n_trials_per_block: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.separability_eeg < 0.0 || self.separability_emg < 0.0 {
            return Err(Error::Domain("separability must be ≥ 0".into()));
        }
        if !(self.noise_floor > 0.0) {
            return Err(Error::Domain("noise_floor must be > 0".into()));
        }
        if self.session_drift < 0.0 {
            return Err(Error::Domain("session_drift must be ≥ 0".into()));
        }
        if self.n_sessions == 0 || self.n_blocks == 0 || self.n_trials_per_block == 0 {
            return Err(Error::Domain(
                "sessions, blocks, and trials per block must all be ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// A fully generated dataset held in memory; `manifest` carries the file
/// names trials would use on disk.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub manifest: DatasetManifest,
    pub trials: Vec<crate::signals::TrialRecording>,
}
