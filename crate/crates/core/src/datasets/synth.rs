//! Deterministic synthetic EEG/EMG generator.
//!
//! EEG: latent band-limited sources mixed through a fixed 19×19 matrix;
//! the first two sources live in the α band with hand-dependent variances,
//! the next two in the β band with movement-dependent variances, the rest
//! are broadband background. EMG: five synergy drive signals through a
//! per-arm non-negative base with gesture-dependent templates. Every
//! label-dependent effect scales with the corresponding separability knob,
//! so zero separability yields chance-level signals by construction.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{
    BlockDescriptor, DatasetManifest, SessionDescriptor, SynthConfig, SyntheticDataset,
    TrialDescriptor, EEG_CHANNELS, EMG_CHANNELS, NATIVE_RATE_HZ,
};
use crate::decoder::{Gesture, GestureLabel, Hand};
use crate::error::Result;
use crate::signals::filter::{butter_bandpass, sosfilt, Sos};
use crate::signals::{Modality, Recording, TrialRecording};

const N_EEG: usize = 19;
const N_EMG: usize = 6;
const N_SYN: usize = 5;
const TRIAL_SAMPLES: usize = 6000; // 5 s × 1200 Hz

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn trial_seed(seed: u64, session: u32, block: u32, trial: u32) -> u64 {
    let packed =
        ((session as u64) << 42) ^ ((block as u64) << 21) ^ (trial as u64) ^ 0x7261_6974_6c73;
    splitmix64(seed ^ splitmix64(packed))
}

/// Fixed (seed-derived) generator structures shared by every trial.
struct Structures {
    /// EEG mixing matrix, sources → channels.
    mixing: Array2<f64>,
    /// Base EMG synergy-to-channel matrix (all entries > 0).
    emg_base: Array2<f64>,
    /// Log-domain hand perturbation of the EMG base.
    emg_hand_delta: Array2<f64>,
    /// Log-domain per-gesture synergy template patterns.
    gesture_patterns: [[f64; N_SYN]; 5],
    /// Baseline synergy template (shared by all gestures at zero
    /// separability).
    template_base: [f64; N_SYN],
    alpha_sos: Vec<Sos>,
    beta_sos: Vec<Sos>,
    broad_sos: Vec<Sos>,
    emg_sos: Vec<Sos>,
}

impl Structures {
    fn build(seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x5354_5255_4354));
        let scale = 1.0 / (N_EEG as f64).sqrt();
        let mixing = Array2::from_shape_fn((N_EEG, N_EEG), |_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v * scale
        });
        let emg_base = Array2::from_shape_fn((N_EMG, N_SYN), |_| rng.random_range(0.2..1.0));
        let emg_hand_delta = Array2::from_shape_fn((N_EMG, N_SYN), |_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v * 0.3
        });
        // Gesture g emphasizes synergy g and mildly suppresses the rest.
        let mut gesture_patterns = [[0.0; N_SYN]; 5];
        for (g, row) in gesture_patterns.iter_mut().enumerate() {
            for (s, v) in row.iter_mut().enumerate() {
                *v = if s == g { 0.5 } else { -0.125 };
            }
        }
        let mut template_base = [0.0; N_SYN];
        for t in template_base.iter_mut() {
            *t = rng.random_range(0.5..1.0);
        }
        Ok(Structures {
            mixing,
            emg_base,
            emg_hand_delta,
            gesture_patterns,
            template_base,
            alpha_sos: butter_bandpass(2, 8.0, 15.0, NATIVE_RATE_HZ)?,
            beta_sos: butter_bandpass(2, 15.0, 30.0, NATIVE_RATE_HZ)?,
            broad_sos: butter_bandpass(2, 4.0, 40.0, NATIVE_RATE_HZ)?,
            emg_sos: butter_bandpass(2, 20.0, 500.0, NATIVE_RATE_HZ)?,
        })
    }
}

/// Per-session drifted views of the fixed structures.
struct SessionState {
    mixing: Array2<f64>,
    emg_gain: [f64; N_EMG],
}

impl SessionState {
    fn build(base: &Structures, config: &SynthConfig, session: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(
            config.seed ^ splitmix64(0x5345_5353 ^ session as u64),
        ));
        let mut mixing = base.mixing.clone();
        // Random rotation perturbation: a product of Givens rotations with
        // drift-scaled angles, applied to channel space. Exactly orthogonal,
        // identity at drift 0.
        for _ in 0..N_EEG {
            let i = rng.random_range(0..N_EEG);
            let mut j = rng.random_range(0..N_EEG - 1);
            if j >= i {
                j += 1;
            }
            let n: f64 = StandardNormal.sample(&mut rng);
            let theta = config.session_drift * 0.35 * n;
            let (s, c) = theta.sin_cos();
            for col in 0..N_EEG {
                let a = mixing[[i, col]];
                let b = mixing[[j, col]];
                mixing[[i, col]] = c * a - s * b;
                mixing[[j, col]] = s * a + c * b;
            }
        }
        let mut emg_gain = [1.0; N_EMG];
        for g in emg_gain.iter_mut() {
            let n: f64 = StandardNormal.sample(&mut rng);
            *g = (config.session_drift * 0.25 * n).exp();
        }
        SessionState { mixing, emg_gain }
    }
}

/// White noise shaped by a causal SOS chain and rescaled to unit variance.
fn shaped_noise(rng: &mut ChaCha8Rng, sos: &[Sos], n: usize) -> Vec<f64> {
    let white: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let mut out = sosfilt(sos, &white);
    let var = out.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let scale = 1.0 / var.sqrt().max(1e-12);
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

fn hand_sign(hand: Hand) -> f64 {
    match hand {
        Hand::Right => 1.0,
        Hand::Left => -1.0,
    }
}

fn generate_eeg(
    rng: &mut ChaCha8Rng,
    structures: &Structures,
    session: &SessionState,
    config: &SynthConfig,
    label: GestureLabel,
) -> Array2<f64> {
    let sep = config.separability_eeg;
    let h = hand_sign(label.hand);
    let m = if label.gesture == Gesture::OpenPalm { -1.0 } else { 1.0 };

    let mut sources = Array2::<f64>::zeros((N_EEG, TRIAL_SAMPLES));
    for src in 0..N_EEG {
        let (sos, std) = match src {
            0 => (&structures.alpha_sos, (0.5 * sep * h).exp()),
            1 => (&structures.alpha_sos, (-0.5 * sep * h).exp()),
            2 => (&structures.beta_sos, (0.5 * sep * m).exp()),
            3 => (&structures.beta_sos, (-0.5 * sep * m).exp()),
            _ => (&structures.broad_sos, 1.0),
        };
        let shaped = shaped_noise(rng, sos, TRIAL_SAMPLES);
        for (t, v) in shaped.into_iter().enumerate() {
            sources[[src, t]] = std * v;
        }
    }
    let mut eeg = session.mixing.dot(&sources);
    for v in eeg.iter_mut() {
        let n: f64 = StandardNormal.sample(rng);
        *v += config.noise_floor * n;
    }
    eeg
}

fn generate_emg(
    rng: &mut ChaCha8Rng,
    structures: &Structures,
    session: &SessionState,
    config: &SynthConfig,
    label: GestureLabel,
) -> Array2<f64> {
    let sep = config.separability_emg;
    let h = hand_sign(label.hand);
    let g = label.gesture.index();

    // Per-arm base: log-domain perturbation keeps it strictly positive.
    let base = Array2::from_shape_fn((N_EMG, N_SYN), |(c, s)| {
        structures.emg_base[[c, s]] * (sep * 0.5 * h * structures.emg_hand_delta[[c, s]]).exp()
    });
    // Gesture template and overall contraction amplitude.
    let template: Array1<f64> = (0..N_SYN)
        .map(|s| structures.template_base[s] * (sep * structures.gesture_patterns[g][s]).exp())
        .collect();
    let amp = if label.gesture == Gesture::OpenPalm {
        (-0.3 * sep).exp()
    } else {
        (0.075 * sep).exp()
    };

    let mut emg = Array2::<f64>::zeros((N_EMG, TRIAL_SAMPLES));
    for s in 0..N_SYN {
        let drive = shaped_noise(rng, &structures.emg_sos, TRIAL_SAMPLES);
        let weight: Vec<f64> = (0..N_EMG).map(|c| amp * base[[c, s]] * template[s]).collect();
        for (t, d) in drive.iter().enumerate() {
            for c in 0..N_EMG {
                emg[[c, t]] += weight[c] * d;
            }
        }
    }
    for (c, gain) in session.emg_gain.iter().enumerate() {
        for t in 0..TRIAL_SAMPLES {
            let n: f64 = StandardNormal.sample(rng);
            emg[[c, t]] = emg[[c, t]] * gain + config.noise_floor * n;
        }
    }
    emg
}

/// Per-block gesture sequence: every gesture `n/5` times (remainder filled
/// cyclically), order shuffled with a block-derived seed.
fn block_gestures(config: &SynthConfig, session: u32, block: u32) -> Vec<Gesture> {
    let n = config.n_trials_per_block as usize;
    let mut gestures: Vec<Gesture> = (0..n).map(|i| Gesture::ALL[i % 5]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(
        config.seed ^ splitmix64(0x424c_4f43 ^ ((session as u64) << 16) ^ block as u64),
    ));
    gestures.shuffle(&mut rng);
    gestures
}

/// Generates the full dataset in memory, fully determined by the seed.
pub fn generate_synthetic(config: &SynthConfig) -> Result<SyntheticDataset> {
    config.validate()?;
    let structures = Structures::build(config.seed)?;

    let mut trials = Vec::with_capacity(
        (config.n_sessions * config.n_blocks * config.n_trials_per_block) as usize,
    );
    let mut sessions = Vec::with_capacity(config.n_sessions as usize);
    for session in 1..=config.n_sessions {
        let state = SessionState::build(&structures, config, session);
        let mut blocks = Vec::with_capacity(config.n_blocks as usize);
        for block in 1..=config.n_blocks {
            // One hand per block, alternating.
            let hand = if block % 2 == 1 { Hand::Right } else { Hand::Left };
            let gestures = block_gestures(config, session, block);
            let mut descriptors = Vec::with_capacity(gestures.len());
            for (t, gesture) in gestures.into_iter().enumerate() {
                let trial_index = t as u32;
                let label = GestureLabel::new(hand, gesture);
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(
                    config.seed,
                    session,
                    block,
                    trial_index,
                ));
                let eeg = generate_eeg(&mut rng, &structures, &state, config, label);
                let emg = generate_emg(&mut rng, &structures, &state, config, label);
                trials.push(TrialRecording::new(
                    Recording::new(eeg, NATIVE_RATE_HZ, Modality::Eeg)?,
                    Recording::new(emg, NATIVE_RATE_HZ, Modality::Emg)?,
                    label,
                    session,
                    block,
                    trial_index,
                )?);
                descriptors.push(TrialDescriptor {
                    trial_index,
                    label,
                    eeg_file: format!("trials/s{session}_b{block}_t{trial_index}_eeg.csv"),
                    emg_file: format!("trials/s{session}_b{block}_t{trial_index}_emg.csv"),
                });
            }
            blocks.push(BlockDescriptor { block, hand, trials: descriptors });
        }
        sessions.push(SessionDescriptor { session, blocks });
    }

    let manifest = DatasetManifest {
        subject_id: format!("synthetic-{:016x}", config.seed),
        eeg_rate_hz: NATIVE_RATE_HZ,
        emg_rate_hz: NATIVE_RATE_HZ,
        eeg_channels: EEG_CHANNELS.iter().map(|s| s.to_string()).collect(),
        emg_channels: EMG_CHANNELS.iter().map(|s| s.to_string()).collect(),
        sessions,
    };
    Ok(SyntheticDataset { manifest, trials })
}
