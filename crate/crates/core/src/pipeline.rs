//! Trial preprocessing, per-window feature extraction, and model training.
//!
//! A [`PreprocessedTrial`] caches everything decoding needs — per-band EEG
//! windows, EMG RMS vectors, and per-window content hashes used by the
//! leakage audit — so evaluation protocols can refit models per fold without
//! re-filtering signals.

use ndarray::{Array1, Array2};
use std::collections::HashSet;

use crate::csp::{extract_fbcsp, fit_csp_model, BANDS};
use crate::decoder::{
    argmax_tiebreak, eeg4_scores, emg5_scores, label_to_path, map_decode, uniform_prior,
    ContextPrior, EegBranch, EmgBranch, Gesture, GestureLabel, GraspShape, Hand,
    HierarchyModel, Movement, WindowFeatures, N_LABELS,
};
use crate::error::{Error, Result};
use crate::kde::kde_fit;
use crate::nmf::{nmf_fit, nmf_transform, NMF_MAX_ITER, NMF_TOL, N_SYNERGIES};
use crate::signals::{
    apply_filter, baseline_correct, downsample, post_baseline_segment, split_windows,
    window_rms, FilterSpec, TrialRecording, Window,
};

/// EEG is decimated to this rate before filtering and windowing.
pub const EEG_TARGET_RATE: f64 = 300.0;
/// Power-line notch center for the EMG path.
pub const EMG_NOTCH_HZ: f64 = 60.0;
/// EMG analysis band in Hz.
pub const EMG_BAND: (f64, f64) = (20.0, 500.0);
/// Butterworth prototype order for all analysis bandpasses.
pub const FILTER_ORDER: usize = 4;

/// One trial after preprocessing: ready for covariance estimation, feature
/// extraction, and decoding.
#[derive(Debug, Clone)]
pub struct PreprocessedTrial {
    pub label: GestureLabel,
    pub session: u32,
    pub block: u32,
    pub trial_index: u32,
    /// Per analysis band (α, β), the trial's 250 ms EEG windows.
    pub eeg_windows: [Vec<Window>; 2],
    /// Per window, the 6-channel EMG RMS vector.
    pub emg_rms: Vec<Array1<f64>>,
    /// Per window, a content hash covering provenance and sample data; used
    /// to audit that no test window enters a fitting call.
    pub window_hashes: Vec<u64>,
}

impl PreprocessedTrial {
    pub fn n_windows(&self) -> usize {
        self.emg_rms.len()
    }
}

struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf29ce484222325)
    }

    fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    fn update_f64s<'a>(&mut self, vals: impl Iterator<Item = &'a f64>) {
        for v in vals {
            self.update(&v.to_le_bytes());
        }
    }
}

/// Preprocesses one raw trial:
///
/// * EEG — decimate to 300 Hz, α/β zero-phase bandpass over the full 5 s,
///   baseline-correct against the first second, split the remaining 4 s into
///   sixteen 250 ms windows;
/// * EMG — 60 Hz notch plus 20–500 Hz bandpass at the native rate, discard
///   the baseline second, split into windows, reduce each to per-channel RMS.
pub fn preprocess_trial(trial: &TrialRecording) -> Result<PreprocessedTrial> {
    let eeg = downsample(&trial.eeg, EEG_TARGET_RATE)?;
    let mut eeg_windows: [Vec<Window>; 2] = [Vec::new(), Vec::new()];
    for (b, (low, high)) in BANDS.iter().enumerate() {
        let filtered = apply_filter(&eeg, &FilterSpec::bandpass(*low, *high, FILTER_ORDER))?;
        let corrected = baseline_correct(&filtered)?;
        let (windows, _) = split_windows(&corrected, trial.trial_index);
        eeg_windows[b] = windows;
    }

    let notched = apply_filter(&trial.emg, &FilterSpec::notch(EMG_NOTCH_HZ))?;
    let banded = apply_filter(
        &notched,
        &FilterSpec::bandpass(EMG_BAND.0, EMG_BAND.1, FILTER_ORDER),
    )?;
    let segment = post_baseline_segment(&banded)?;
    let (emg_windows, _) = split_windows(&segment, trial.trial_index);
    let emg_rms = emg_windows
        .iter()
        .map(window_rms)
        .collect::<Result<Vec<_>>>()?;

    // A one-sample-short modality can cost its final window; keep the
    // streams aligned by truncating to the common count.
    let n = eeg_windows[0]
        .len()
        .min(eeg_windows[1].len())
        .min(emg_rms.len());
    if n == 0 {
        return Err(Error::InsufficientData(format!(
            "trial s{} b{} t{} yielded no complete windows",
            trial.session, trial.block, trial.trial_index
        )));
    }
    let mut eeg_windows = eeg_windows;
    eeg_windows[0].truncate(n);
    eeg_windows[1].truncate(n);
    let mut emg_rms = emg_rms;
    emg_rms.truncate(n);

    let window_hashes = (0..n)
        .map(|w| {
            let mut h = Fnv1a::new();
            h.update(&trial.session.to_le_bytes());
            h.update(&trial.block.to_le_bytes());
            h.update(&trial.trial_index.to_le_bytes());
            h.update(&(w as u32).to_le_bytes());
            h.update_f64s(eeg_windows[0][w].samples.iter());
            h.update_f64s(eeg_windows[1][w].samples.iter());
            h.update_f64s(emg_rms[w].iter());
            h.0
        })
        .collect();

    Ok(PreprocessedTrial {
        label: trial.label,
        session: trial.session,
        block: trial.block,
        trial_index: trial.trial_index,
        eeg_windows,
        emg_rms,
        window_hashes,
    })
}

/// Preprocesses a batch of trials, in parallel when the `parallel` feature
/// is enabled. Order and contents match the sequential path exactly.
pub fn preprocess_all(trials: &[TrialRecording]) -> Result<Vec<PreprocessedTrial>> {
    crate::par::map_slice(trials, preprocess_trial)
        .into_iter()
        .collect()
}

/// Record of which windows entered fitting calls, for the no-leakage audit.
#[derive(Debug, Clone, Default)]
pub struct FitLog {
    pub window_hashes: HashSet<u64>,
    pub n_trials: usize,
    pub notes: Vec<String>,
}

impl FitLog {
    pub fn record_trial(&mut self, trial: &PreprocessedTrial) {
        self.window_hashes.extend(trial.window_hashes.iter().copied());
        self.n_trials += 1;
    }

    /// True when none of the given (test) window hashes entered training.
    pub fn is_disjoint_from(&self, hashes: &[u64]) -> bool {
        hashes.iter().all(|h| !self.window_hashes.contains(h))
    }
}

fn band_windows<'a>(
    trials: &[&'a PreprocessedTrial],
    band: usize,
    keep: impl Fn(&PreprocessedTrial) -> bool,
) -> Vec<&'a Window> {
    trials
        .iter()
        .filter(|t| keep(t))
        .flat_map(|t| t.eeg_windows[band].iter())
        .collect()
}

fn feature_matrix(rows: &[Array1<f64>]) -> Result<Array2<f64>> {
    let first = rows
        .first()
        .ok_or_else(|| Error::EmptyInput("no feature rows".into()))?;
    let mut m = Array2::zeros((rows.len(), first.len()));
    for (i, r) in rows.iter().enumerate() {
        m.row_mut(i).assign(r);
    }
    Ok(m)
}

fn require_class<'a>(
    trials: &[&'a PreprocessedTrial],
    what: &str,
    keep: impl Fn(&PreprocessedTrial) -> bool,
) -> Result<Vec<&'a PreprocessedTrial>> {
    let subset: Vec<&PreprocessedTrial> = trials.iter().copied().filter(|t| keep(t)).collect();
    if subset.is_empty() {
        return Err(Error::Stratification(format!(
            "no {what} trials in the training set"
        )));
    }
    Ok(subset)
}

/// Fits the EEG branch: the hand CSP on all trials, per-hand movement CSPs,
/// and the level-0/1 likelihoods over extracted FBCSP features.
pub fn train_eeg_branch(
    trials: &[&PreprocessedTrial],
    log: &mut FitLog,
) -> Result<EegBranch> {
    for t in trials {
        log.record_trial(t);
    }
    let right = require_class(trials, "Right-hand", |t| t.label.hand == Hand::Right)?;
    let left = require_class(trials, "Left-hand", |t| t.label.hand == Hand::Left)?;

    let hand_classes = [
        [
            band_windows(&right, 0, |_| true),
            band_windows(&left, 0, |_| true),
        ],
        [
            band_windows(&right, 1, |_| true),
            band_windows(&left, 1, |_| true),
        ],
    ];
    let csp_hand = fit_csp_model(&hand_classes, "s0:right-vs-left")?;

    let mut csp_movement = Vec::with_capacity(2);
    let mut kde_l0 = Vec::with_capacity(2);
    let mut kde_l1 = Vec::with_capacity(2);
    for (hand, subset) in [(Hand::Right, &right), (Hand::Left, &left)] {
        let rest = require_class(subset, "Rest", |t| t.label.gesture == Gesture::OpenPalm)?;
        let grasp = require_class(subset, "Grasp", |t| t.label.gesture != Gesture::OpenPalm)?;
        let movement_classes = [
            [
                band_windows(&rest, 0, |_| true),
                band_windows(&grasp, 0, |_| true),
            ],
            [
                band_windows(&rest, 1, |_| true),
                band_windows(&grasp, 1, |_| true),
            ],
        ];
        let csp = fit_csp_model(
            &movement_classes,
            &format!("s1:{hand:?}:rest-vs-grasp"),
        )?;

        // Level-0 likelihood: hand-CSP features over all of this hand's
        // windows.
        let mut l0_rows = Vec::new();
        for t in subset {
            for w in 0..t.n_windows() {
                l0_rows.push(extract_fbcsp(
                    [&t.eeg_windows[0][w], &t.eeg_windows[1][w]],
                    &csp_hand,
                )?);
            }
        }
        kde_l0.push(kde_fit(&feature_matrix(&l0_rows)?, &format!("eeg0:{hand:?}"))?);

        // Level-1 likelihoods: movement-CSP features per movement class.
        let mut l1_models = Vec::with_capacity(2);
        for (movement, class_trials) in [(Movement::Rest, &rest), (Movement::Grasp, &grasp)] {
            let mut rows = Vec::new();
            for t in class_trials.iter() {
                for w in 0..t.n_windows() {
                    rows.push(extract_fbcsp(
                        [&t.eeg_windows[0][w], &t.eeg_windows[1][w]],
                        &csp,
                    )?);
                }
            }
            l1_models.push(kde_fit(
                &feature_matrix(&rows)?,
                &format!("eeg1:{hand:?}:{movement:?}"),
            )?);
        }
        let grasp_kde = l1_models.pop().expect("two movements");
        let rest_kde = l1_models.pop().expect("two movements");
        kde_l1.push([rest_kde, grasp_kde]);
        csp_movement.push(csp);
    }

    let left_csp = csp_movement.pop().expect("two hands");
    let right_csp = csp_movement.pop().expect("two hands");
    let left_l0 = kde_l0.pop().expect("two hands");
    let right_l0 = kde_l0.pop().expect("two hands");
    let left_l1 = kde_l1.pop().expect("two hands");
    let right_l1 = kde_l1.pop().expect("two hands");
    Ok(EegBranch {
        csp_hand,
        csp_movement: [right_csp, left_csp],
        kde_l0: [right_l0, left_l0],
        kde_l1: [right_l1, left_l1],
    })
}

/// Fits one arm's EMG branch: NMF base over all the arm's RMS windows, then
/// per-state likelihoods over the resulting activations.
pub fn train_emg_branch(
    trials: &[&PreprocessedTrial],
    hand: Hand,
    seed: u64,
    log: &mut FitLog,
) -> Result<EmgBranch> {
    for t in trials {
        log.record_trial(t);
    }
    let own = require_class(trials, &format!("{hand:?}-hand"), |t| t.label.hand == hand)?;

    let all_rms: Vec<&Array1<f64>> = own.iter().flat_map(|t| t.emg_rms.iter()).collect();
    if all_rms.len() < N_SYNERGIES {
        return Err(Error::InsufficientData(format!(
            "{} EMG windows cannot support {N_SYNERGIES} synergies",
            all_rms.len()
        )));
    }
    let mut v = Array2::zeros((all_rms[0].len(), all_rms.len()));
    for (j, rms) in all_rms.iter().enumerate() {
        v.column_mut(j).assign(rms);
    }
    let nmf = nmf_fit(&v, N_SYNERGIES, NMF_MAX_ITER, NMF_TOL, seed)?;

    // Activations per trial, in trial order.
    let mut activations: Vec<(GestureLabel, Vec<Array1<f64>>)> = Vec::with_capacity(own.len());
    for t in &own {
        let acts = t
            .emg_rms
            .iter()
            .map(|rms| nmf_transform(&nmf, rms))
            .collect::<Result<Vec<_>>>()?;
        activations.push((t.label, acts));
    }
    let collect = |keep: &dyn Fn(GestureLabel) -> bool| -> Vec<Array1<f64>> {
        activations
            .iter()
            .filter(|(l, _)| keep(*l))
            .flat_map(|(_, a)| a.iter().cloned())
            .collect()
    };
    let fit = |rows: Vec<Array1<f64>>, state: String| -> Result<crate::kde::KdeModel> {
        if rows.is_empty() {
            return Err(Error::Stratification(format!(
                "no training windows for state {state}"
            )));
        }
        kde_fit(&feature_matrix(&rows)?, &state)
    };

    let kde_l1 = [
        fit(
            collect(&|l| l.gesture == Gesture::OpenPalm),
            format!("emg1:{hand:?}:Rest"),
        )?,
        fit(
            collect(&|l| l.gesture != Gesture::OpenPalm),
            format!("emg1:{hand:?}:Grasp"),
        )?,
    ];
    let mut l2 = Vec::with_capacity(2);
    for family in crate::decoder::GraspFamily::ALL {
        l2.push(fit(
            collect(&|l| {
                label_to_path(l).s2 == Some(family)
            }),
            format!("emg2:{hand:?}:{family:?}"),
        )?);
    }
    let mut l3 = Vec::with_capacity(4);
    for shape in GraspShape::ALL {
        l3.push(fit(
            collect(&|l| label_to_path(l).s3 == Some(shape)),
            format!("emg3:{hand:?}:{shape:?}"),
        )?);
    }
    let l2_precision = l2.pop().expect("two families");
    let l2_power = l2.pop().expect("two families");
    let l3_pp = l3.pop().expect("four shapes");
    let l3_pe = l3.pop().expect("four shapes");
    let l3_ps = l3.pop().expect("four shapes");
    let l3_mw = l3.pop().expect("four shapes");
    Ok(EmgBranch {
        nmf,
        kde_l1,
        kde_l2: [l2_power, l2_precision],
        kde_l3: [l3_mw, l3_ps, l3_pe, l3_pp],
    })
}

/// Trains the full hierarchy on the given trials. Returns the model and the
/// fit log listing every window hash that entered a fitting call.
pub fn train_hierarchy(
    trials: &[&PreprocessedTrial],
    seed: u64,
) -> Result<(HierarchyModel, FitLog)> {
    let mut log = FitLog::default();
    let eeg = train_eeg_branch(trials, &mut log)?;
    // record_trial dedupes via the hash set, but n_trials would double; keep
    // branch-local logs merged through one shared set instead.
    log.n_trials = trials.len();
    let right_trials: Vec<&PreprocessedTrial> = trials
        .iter()
        .copied()
        .filter(|t| t.label.hand == Hand::Right)
        .collect();
    let left_trials: Vec<&PreprocessedTrial> = trials
        .iter()
        .copied()
        .filter(|t| t.label.hand == Hand::Left)
        .collect();
    let mut scratch = FitLog::default();
    let right = train_emg_branch(&right_trials, Hand::Right, seed, &mut scratch)?;
    let left = train_emg_branch(&left_trials, Hand::Left, seed.wrapping_add(1), &mut scratch)?;
    Ok((
        HierarchyModel {
            eeg,
            emg: [right, left],
            default_prior: uniform_prior(),
        },
        log,
    ))
}

/// Extracts one window's features under every hand hypothesis.
pub fn window_features(
    model: &HierarchyModel,
    trial: &PreprocessedTrial,
    ordinal: usize,
) -> Result<WindowFeatures> {
    let windows = [
        &trial.eeg_windows[0][ordinal],
        &trial.eeg_windows[1][ordinal],
    ];
    let eeg_l0 = extract_fbcsp(windows, &model.eeg.csp_hand)?;
    let eeg_l1 = [
        extract_fbcsp(windows, &model.eeg.csp_movement[0])?,
        extract_fbcsp(windows, &model.eeg.csp_movement[1])?,
    ];
    let rms = &trial.emg_rms[ordinal];
    let emg = [
        nmf_transform(&model.emg[0].nmf, rms)?,
        nmf_transform(&model.emg[1].nmf, rms)?,
    ];
    Ok(WindowFeatures { eeg_l0, eeg_l1, emg })
}

/// Full 10-class MAP decode of one window.
pub fn decode_window(
    model: &HierarchyModel,
    prior: &ContextPrior,
    trial: &PreprocessedTrial,
    ordinal: usize,
) -> Result<(GestureLabel, [f64; N_LABELS])> {
    let feats = window_features(model, trial, ordinal)?;
    map_decode(model, prior, &feats)
}

/// EEG-only 4-class decode of one window; returns the (hand, movement)
/// class index.
pub fn decode_window_eeg4(
    eeg: &EegBranch,
    trial: &PreprocessedTrial,
    ordinal: usize,
) -> Result<usize> {
    let windows = [
        &trial.eeg_windows[0][ordinal],
        &trial.eeg_windows[1][ordinal],
    ];
    let l0 = extract_fbcsp(windows, &eeg.csp_hand)?;
    let l1 = [
        extract_fbcsp(windows, &eeg.csp_movement[0])?,
        extract_fbcsp(windows, &eeg.csp_movement[1])?,
    ];
    Ok(argmax_tiebreak(&eeg4_scores(eeg, &l0, &l1)?))
}

/// EMG-only 5-class decode of one window; returns the gesture index.
pub fn decode_window_emg5(
    branch: &EmgBranch,
    trial: &PreprocessedTrial,
    ordinal: usize,
) -> Result<usize> {
    let activation = nmf_transform(&branch.nmf, &trial.emg_rms[ordinal])?;
    Ok(argmax_tiebreak(&emg5_scores(branch, &activation)?))
}
