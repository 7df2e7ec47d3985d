//! Evaluation protocols: within-session repeated cross-validation, online
//! across-session transfer, and context-injection sweeps.
//!
//! All protocols stratify and split at the trial level, never the window
//! level, so windows from one trial cannot straddle the train/test boundary.
//! Every fitting call is logged by window hash; [`LeakageAudit`] carries the
//! evidence that no test window entered training.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{atomic_write, splitmix64};
use crate::decoder::{
    eeg4_class, inject_context, label_to_path, uniform_prior, ContextPrior, EegBranch, EmgBranch,
    Gesture, GestureLabel, GraspFamily, GraspShape, Hand, HierarchyModel, Movement, StateValue,
    ALL_LABELS,
};
use crate::error::{Error, Result};
use crate::pipeline::{
    decode_window, decode_window_eeg4, decode_window_emg5, train_eeg_branch, train_emg_branch,
    train_hierarchy, FitLog, PreprocessedTrial,
};

/// Canonical protocol shape: five folds, repeated five times.
pub const CV_FOLDS: usize = 5;
pub const CV_REPETITIONS: usize = 5;

/// The standard context-injection grid: one probability per hierarchy
/// level, p = 0.75 at level 0 down to 0.60 at level 3.
pub const CONTEXT_SWEEP_GRID: [(usize, f64); 4] = [(0, 0.75), (1, 0.70), (2, 0.65), (3, 0.60)];

/// Classifier modes reported in the accuracy tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Hand × movement (4 classes) from EEG features alone.
    Eeg4,
    /// One hand's five gestures from EMG features alone.
    Emg5(Hand),
    /// Full ten-gesture hybrid decode.
    Hbmi10,
}

/// The modes of the main accuracy table; EMG is reported for the right hand.
pub const REPORT_MODES: [Mode; 3] = [Mode::Eeg4, Mode::Emg5(Hand::Right), Mode::Hbmi10];

impl Mode {
    pub fn n_classes(self) -> usize {
        match self {
            Mode::Eeg4 => 4,
            Mode::Emg5(_) => 5,
            Mode::Hbmi10 => 10,
        }
    }

    /// This mode's class index for a trial label, or `None` when the trial
    /// is out of scope (the other hand's trials in EMG mode).
    pub fn class_of(self, label: GestureLabel) -> Option<usize> {
        match self {
            Mode::Eeg4 => Some(eeg4_class(label.hand, label_to_path(label).s1)),
            Mode::Emg5(hand) => (label.hand == hand).then(|| label.gesture.index()),
            Mode::Hbmi10 => Some(label.index()),
        }
    }

    pub fn class_name(self, class: usize) -> String {
        match self {
            Mode::Eeg4 => {
                let hand = if class < 2 { "Right" } else { "Left" };
                let movement = if class % 2 == 0 { "Rest" } else { "Grasp" };
                format!("{hand}-{movement}")
            }
            Mode::Emg5(_) => format!("{:?}", Gesture::ALL[class]),
            Mode::Hbmi10 => ALL_LABELS[class].to_string(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Eeg4 => "eeg-4class",
            Mode::Emg5(Hand::Right) => "emg-5class-right",
            Mode::Emg5(Hand::Left) => "emg-5class-left",
            Mode::Hbmi10 => "hbmi-10class",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolKind {
    WithinSession,
    OnlineAcrossSessions,
    ContextSweep,
}

/// A declarative protocol description, mainly for run configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalProtocol {
    pub kind: ProtocolKind,
    pub folds: usize,
    pub repetitions: usize,
    pub test_sessions: Vec<u32>,
    pub context_spec: Option<Vec<(usize, f64)>>,
}

impl EvalProtocol {
    pub fn within_session() -> Self {
        EvalProtocol {
            kind: ProtocolKind::WithinSession,
            folds: CV_FOLDS,
            repetitions: CV_REPETITIONS,
            test_sessions: Vec::new(),
            context_spec: None,
        }
    }

    pub fn online(test_sessions: Vec<u32>) -> Self {
        EvalProtocol {
            kind: ProtocolKind::OnlineAcrossSessions,
            folds: CV_FOLDS,
            repetitions: CV_REPETITIONS,
            test_sessions,
            context_spec: None,
        }
    }

    pub fn context_sweep(test_sessions: Vec<u32>, spec: Vec<(usize, f64)>) -> Self {
        EvalProtocol {
            kind: ProtocolKind::ContextSweep,
            folds: CV_FOLDS,
            repetitions: CV_REPETITIONS,
            test_sessions,
            context_spec: Some(spec),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Validation(format!("{} folds; need at least 2", self.folds)));
        }
        if self.repetitions < 1 {
            return Err(Error::Validation("at least one repetition required".into()));
        }
        if let Some(spec) = &self.context_spec {
            for &(level, p) in spec {
                if level > 3 {
                    return Err(Error::Validation(format!("context level {level} out of range")));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Validation(format!(
                        "context probability {p} outside [0,1]"
                    )));
                }
            }
        }
        if matches!(
            self.kind,
            ProtocolKind::OnlineAcrossSessions | ProtocolKind::ContextSweep
        ) && self.test_sessions.is_empty()
        {
            return Err(Error::Validation(
                "online/context protocols need at least one test session".into(),
            ));
        }
        Ok(())
    }
}

/// Accuracy, per-class recall, and the confusion matrix for one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub mode: Mode,
    /// Fraction of correctly classified windows: trace(confusion) / total.
    pub accuracy: f64,
    /// Counts with rows = true class, columns = predicted class.
    pub confusion: Array2<u64>,
    pub n_windows: usize,
    /// Diagonal over row sum, one entry per class (0 for unseen classes).
    pub per_class_recall: Vec<f64>,
}

/// One window's decode outcome, for the machine-readable decision log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub session: u32,
    pub block: u32,
    pub trial_index: u32,
    pub window: usize,
    pub true_class: usize,
    pub predicted_class: usize,
}

/// Evidence that no test window entered a fitting call.
#[derive(Debug, Clone, Default)]
pub struct LeakageAudit {
    /// Union of window hashes over every fitting call in the run.
    pub fit_hashes: HashSet<u64>,
    /// Union of window hashes decoded as test data.
    pub test_hashes: HashSet<u64>,
    /// Test windows whose hash appeared in the fitting inputs of the fold
    /// (or single fit) that scored them. Zero in a leak-free run.
    pub violations: usize,
    pub n_fits: usize,
}

/// The result of one protocol run.
#[derive(Debug, Clone)]
pub struct EvalRun {
    pub report: AccuracyReport,
    pub decisions: Vec<DecisionRecord>,
    pub audit: LeakageAudit,
    /// Per-repetition accuracy for repeated-CV runs; empty for single-fit
    /// protocols. The pooled accuracy equals its mean because every
    /// repetition scores the same window count.
    pub rep_accuracies: Vec<f64>,
}

/// Builds an [`AccuracyReport`] from (true, predicted) class-index pairs.
pub fn compute_report(mode: Mode, pairs: &[(usize, usize)]) -> Result<AccuracyReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no decisions to score".into()));
    }
    let n = mode.n_classes();
    let mut confusion = Array2::<u64>::zeros((n, n));
    for &(truth, pred) in pairs {
        if truth >= n || pred >= n {
            return Err(Error::Validation(format!(
                "class index ({truth}, {pred}) out of range for {mode}"
            )));
        }
        confusion[[truth, pred]] += 1;
    }
    let total: u64 = confusion.sum();
    let trace: u64 = (0..n).map(|i| confusion[[i, i]]).sum();
    let per_class_recall = (0..n)
        .map(|i| {
            let row: u64 = confusion.row(i).sum();
            if row == 0 {
                0.0
            } else {
                confusion[[i, i]] as f64 / row as f64
            }
        })
        .collect();
    Ok(AccuracyReport {
        mode,
        accuracy: trace as f64 / total as f64,
        confusion,
        n_windows: pairs.len(),
        per_class_recall,
    })
}

enum Fitted {
    Eeg4(EegBranch),
    Emg5(EmgBranch),
    Hbmi10(HierarchyModel),
}

fn fit_mode(
    mode: Mode,
    trials: &[&PreprocessedTrial],
    seed: u64,
    log: &mut FitLog,
) -> Result<Fitted> {
    match mode {
        Mode::Eeg4 => Ok(Fitted::Eeg4(train_eeg_branch(trials, log)?)),
        Mode::Emg5(hand) => Ok(Fitted::Emg5(train_emg_branch(trials, hand, seed, log)?)),
        Mode::Hbmi10 => {
            let (model, fit_log) = train_hierarchy(trials, seed)?;
            log.window_hashes.extend(fit_log.window_hashes.iter().copied());
            log.n_trials += fit_log.n_trials;
            Ok(Fitted::Hbmi10(model))
        }
    }
}

/// Decodes every window of every test trial; `priors` supplies one context
/// prior per trial (uniform in the no-context protocols). Trials run in
/// parallel; output order matches input order.
fn decode_test_set(
    fitted: &Fitted,
    test: &[&PreprocessedTrial],
    priors: &[ContextPrior],
) -> Result<Vec<Vec<usize>>> {
    assert_eq!(test.len(), priors.len());
    crate::par::map_range(0..test.len(), |i| {
        let t = test[i];
        (0..t.n_windows())
            .map(|w| match fitted {
                Fitted::Eeg4(branch) => decode_window_eeg4(branch, t, w),
                Fitted::Emg5(branch) => decode_window_emg5(branch, t, w),
                Fitted::Hbmi10(model) => {
                    decode_window(model, &priors[i], t, w).map(|(label, _)| label.index())
                }
            })
            .collect::<Result<Vec<usize>>>()
    })
    .into_iter()
    .collect()
}

fn push_decisions(
    decisions: &mut Vec<DecisionRecord>,
    mode: Mode,
    test: &[&PreprocessedTrial],
    predictions: &[Vec<usize>],
) {
    for (t, preds) in test.iter().zip(predictions) {
        let truth = mode.class_of(t.label).expect("test trials pre-filtered to mode scope");
        for (w, &pred) in preds.iter().enumerate() {
            decisions.push(DecisionRecord {
                session: t.session,
                block: t.block,
                trial_index: t.trial_index,
                window: w,
                true_class: truth,
                predicted_class: pred,
            });
        }
    }
}

fn audit_fold(
    audit: &mut LeakageAudit,
    log: &FitLog,
    test: &[&PreprocessedTrial],
) {
    audit.n_fits += 1;
    audit.fit_hashes.extend(log.window_hashes.iter().copied());
    for t in test {
        audit.test_hashes.extend(t.window_hashes.iter().copied());
        audit.violations += t
            .window_hashes
            .iter()
            .filter(|h| log.window_hashes.contains(h))
            .count();
    }
}

/// Groups trial indices by mode class and deals each shuffled group
/// round-robin across folds, so every fold's class mix matches the dataset's.
fn stratified_folds(
    trials: &[&PreprocessedTrial],
    mode: Mode,
    n_folds: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, t) in trials.iter().enumerate() {
        let class = mode.class_of(t.label).expect("trials pre-filtered to mode scope");
        by_class.entry(class).or_default().push(i);
    }
    let mut folds = vec![Vec::new(); n_folds];
    for (rank, (_, mut members)) in by_class.into_iter().enumerate() {
        members.shuffle(rng);
        for (i, idx) in members.into_iter().enumerate() {
            // Offset by class rank so remainders don't pile onto fold 0.
            folds[(i + rank) % n_folds].push(idx);
        }
    }
    folds
}

fn in_scope<'a>(
    trials: &'a [PreprocessedTrial],
    mode: Mode,
    keep: impl Fn(&PreprocessedTrial) -> bool,
) -> Vec<&'a PreprocessedTrial> {
    trials
        .iter()
        .filter(|t| keep(t) && mode.class_of(t.label).is_some())
        .collect()
}

/// 5×5-fold cross-validation within one session. Folds are stratified over
/// trials; every model is refit per fold on the training folds only, and the
/// confusion is pooled over all repetitions.
pub fn within_session_cv(
    trials: &[PreprocessedTrial],
    session: u32,
    mode: Mode,
    seed: u64,
) -> Result<EvalRun> {
    let in_session = in_scope(trials, mode, |t| t.session == session);
    if in_session.is_empty() {
        return Err(Error::Validation(format!(
            "no trials for session {session} in scope of {mode}"
        )));
    }
    let mut audit = LeakageAudit::default();
    let mut decisions = Vec::new();
    let mut rep_accuracies = Vec::with_capacity(CV_REPETITIONS);
    for rep in 0..CV_REPETITIONS {
        let rep_start = decisions.len();
        let rep_seed = splitmix64(seed ^ splitmix64(0x5245_5045 ^ rep as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
        let folds = stratified_folds(&in_session, mode, CV_FOLDS, &mut rng);
        for (f, fold) in folds.iter().enumerate() {
            let test_set: HashSet<usize> = fold.iter().copied().collect();
            let train: Vec<&PreprocessedTrial> = (0..in_session.len())
                .filter(|i| !test_set.contains(i))
                .map(|i| in_session[i])
                .collect();
            let test: Vec<&PreprocessedTrial> = fold.iter().map(|&i| in_session[i]).collect();
            let mut log = FitLog::default();
            let fit_seed = splitmix64(rep_seed ^ splitmix64(0x464f_4c44 ^ f as u64));
            let fitted = fit_mode(mode, &train, fit_seed, &mut log)?;
            audit_fold(&mut audit, &log, &test);
            let priors = vec![uniform_prior(); test.len()];
            let predictions = decode_test_set(&fitted, &test, &priors)?;
            push_decisions(&mut decisions, mode, &test, &predictions);
        }
        let rep_slice = &decisions[rep_start..];
        let correct = rep_slice.iter().filter(|d| d.true_class == d.predicted_class).count();
        rep_accuracies.push(correct as f64 / rep_slice.len().max(1) as f64);
    }
    let pairs: Vec<(usize, usize)> = decisions
        .iter()
        .map(|d| (d.true_class, d.predicted_class))
        .collect();
    Ok(EvalRun {
        report: compute_report(mode, &pairs)?,
        decisions,
        audit,
        rep_accuracies,
    })
}

fn online_split<'a>(
    trials: &'a [PreprocessedTrial],
    test_session: u32,
    mode: Mode,
) -> Result<(Vec<&'a PreprocessedTrial>, Vec<&'a PreprocessedTrial>)> {
    if test_session < 2 {
        return Err(Error::Validation(format!(
            "online protocol needs at least one prior session; test session {test_session}"
        )));
    }
    let present: HashSet<u32> = trials.iter().map(|t| t.session).collect();
    for s in 1..=test_session {
        if !present.contains(&s) {
            return Err(Error::Validation(format!(
                "online protocol on session {test_session} requires sessions 1..={test_session}; \
                 session {s} is missing"
            )));
        }
    }
    let train = in_scope(trials, mode, |t| t.session < test_session);
    let test = in_scope(trials, mode, |t| t.session == test_session);
    if train.is_empty() || test.is_empty() {
        return Err(Error::Validation(format!(
            "online split for session {test_session} has an empty side in scope of {mode}"
        )));
    }
    Ok((train, test))
}

/// Trains on all sessions before `test_session` pooled and tests on every
/// window of `test_session`; no test-session data reaches any fitting step.
pub fn online_eval(
    trials: &[PreprocessedTrial],
    test_session: u32,
    mode: Mode,
    seed: u64,
) -> Result<EvalRun> {
    let (train, test) = online_split(trials, test_session, mode)?;
    let mut log = FitLog::default();
    let fitted = fit_mode(mode, &train, seed, &mut log)?;
    let mut audit = LeakageAudit::default();
    audit_fold(&mut audit, &log, &test);
    let priors = vec![uniform_prior(); test.len()];
    let predictions = decode_test_set(&fitted, &test, &priors)?;
    let mut decisions = Vec::new();
    push_decisions(&mut decisions, mode, &test, &predictions);
    let pairs: Vec<(usize, usize)> = decisions
        .iter()
        .map(|d| (d.true_class, d.predicted_class))
        .collect();
    Ok(EvalRun {
        report: compute_report(mode, &pairs)?,
        decisions,
        audit,
        rep_accuracies: Vec::new(),
    })
}

/// The true state of `label` at a hierarchy level; `None` where the label's
/// path has no state (levels 2–3 of Rest gestures).
pub fn true_state_at(label: GestureLabel, level: usize) -> Option<StateValue> {
    let path = label_to_path(label);
    match level {
        0 => Some(StateValue::Hand(path.s0)),
        1 => Some(StateValue::Movement(path.s1)),
        2 => path.s2.map(StateValue::Family),
        3 => path.s3.map(StateValue::Shape),
        _ => None,
    }
}

/// One context-sweep configuration's outcome.
#[derive(Debug, Clone)]
pub struct ContextSweepRow {
    pub level: usize,
    pub p: f64,
    pub run: EvalRun,
}

/// Online-protocol decode under simulated context: for each `(level, p)`
/// configuration, every test window is decoded with a prior favoring that
/// window's true state at `level` with probability `p` (a correct external
/// classifier of confidence p). Rest trials keep the uniform prior at
/// levels 2–3, where their path has no state.
pub fn context_sweep(
    trials: &[PreprocessedTrial],
    test_session: u32,
    configs: &[(usize, f64)],
    seed: u64,
) -> Result<Vec<ContextSweepRow>> {
    context_sweep_with_error(trials, test_session, configs, 1.0, seed)
}

/// All states of one hierarchy level except `truth`, as prior-addressable
/// values.
fn wrong_states_at(level: usize, truth: StateValue) -> Vec<StateValue> {
    let all: Vec<StateValue> = match level {
        0 => Hand::ALL.iter().map(|&h| StateValue::Hand(h)).collect(),
        1 => Movement::ALL.iter().map(|&m| StateValue::Movement(m)).collect(),
        2 => GraspFamily::ALL.iter().map(|&f| StateValue::Family(f)).collect(),
        _ => GraspShape::ALL.iter().map(|&s| StateValue::Shape(s)).collect(),
    };
    all.into_iter().filter(|&s| s != truth).collect()
}

/// [`context_sweep`] with an imperfect external classifier: per test trial
/// the favored state is the true one with probability `correct_rate`,
/// otherwise a uniformly random wrong state of the same level. At
/// `correct_rate = 1.0` this is exactly `context_sweep` (no randomness is
/// consumed). Rest trials still keep the uniform prior at levels 2–3.
pub fn context_sweep_with_error(
    trials: &[PreprocessedTrial],
    test_session: u32,
    configs: &[(usize, f64)],
    correct_rate: f64,
    seed: u64,
) -> Result<Vec<ContextSweepRow>> {
    if !(0.0..=1.0).contains(&correct_rate) {
        return Err(Error::Validation(format!(
            "classifier correct rate {correct_rate} outside [0, 1]"
        )));
    }
    let mode = Mode::Hbmi10;
    let (train, test) = online_split(trials, test_session, mode)?;
    let mut log = FitLog::default();
    let fitted = fit_mode(mode, &train, seed, &mut log)?;
    let mut rows = Vec::with_capacity(configs.len());
    for (cfg_idx, &(level, p)) in configs.iter().enumerate() {
        let mut rng =
            ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(0x434e_5458 ^ cfg_idx as u64)));
        let priors: Vec<ContextPrior> = test
            .iter()
            .map(|t| match true_state_at(t.label, level) {
                Some(truth) => {
                    let favored = if correct_rate >= 1.0 || rng.random::<f64>() < correct_rate {
                        truth
                    } else {
                        let wrong = wrong_states_at(level, truth);
                        wrong[rng.random_range(0..wrong.len())]
                    };
                    inject_context(level, p, favored)
                }
                None => Ok(uniform_prior()),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut audit = LeakageAudit::default();
        audit_fold(&mut audit, &log, &test);
        let predictions = decode_test_set(&fitted, &test, &priors)?;
        let mut decisions = Vec::new();
        push_decisions(&mut decisions, mode, &test, &predictions);
        let pairs: Vec<(usize, usize)> = decisions
            .iter()
            .map(|d| (d.true_class, d.predicted_class))
            .collect();
        rows.push(ContextSweepRow {
            level,
            p,
            run: EvalRun {
                report: compute_report(mode, &pairs)?,
                decisions,
                audit,
                rep_accuracies: Vec::new(),
            },
        });
    }
    Ok(rows)
}

/// Returns a copy of the trials with labels permuted among trials (the label
/// multiset is preserved). Used for chance-level calibration.
pub fn permute_labels(trials: &[PreprocessedTrial], seed: u64) -> Vec<PreprocessedTrial> {
    let mut labels: Vec<GestureLabel> = trials.iter().map(|t| t.label).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labels.shuffle(&mut rng);
    trials
        .iter()
        .zip(labels)
        .map(|(t, label)| {
            let mut out = t.clone();
            out.label = label;
            out
        })
        .collect()
}

/// 95% normal-approximation confidence interval for a proportion `p`
/// estimated from `n` independent samples, clamped to [0, 1].
pub fn binomial_ci(p: f64, n: usize) -> (f64, f64) {
    let half = 1.96 * (p * (1.0 - p) / n as f64).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

/// Writes the per-window decision log as CSV with class names resolved.
pub fn write_decision_log(path: &Path, mode: Mode, decisions: &[DecisionRecord]) -> Result<()> {
    let mut out = String::from("session,block,trial,window,true,predicted\n");
    for d in decisions {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            d.session,
            d.block,
            d.trial_index,
            d.window,
            mode.class_name(d.true_class),
            mode.class_name(d.predicted_class),
        ));
    }
    atomic_write(path, out.as_bytes())
}

/// Writes an accuracy table with modes as rows and sessions as columns,
/// plus a trailing cross-session mean column.
pub fn write_report_table(
    path: &Path,
    sessions: &[u32],
    rows: &[(String, Vec<f64>)],
) -> Result<()> {
    let mut out = String::from("mode");
    for s in sessions {
        out.push_str(&format!(",s{s}"));
    }
    out.push_str(",mean\n");
    for (name, cells) in rows {
        if cells.len() != sessions.len() {
            return Err(Error::DimensionMismatch(format!(
                "row {name} has {} cells for {} sessions",
                cells.len(),
                sessions.len()
            )));
        }
        out.push_str(name);
        for c in cells {
            out.push_str(&format!(",{c:.4}"));
        }
        let mean = cells.iter().sum::<f64>() / cells.len().max(1) as f64;
        out.push_str(&format!(",{mean:.4}\n"));
    }
    atomic_write(path, out.as_bytes())
}
