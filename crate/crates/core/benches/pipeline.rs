//! Parallel-vs-sequential benchmarks for the batch-heavy stages: trial
//! preprocessing and whole-set window decoding.
//!
//! Both paths share one code base — `par::map_*` dispatches to rayon when
//! the `parallel` feature (default) is on, while the `*_seq` variants always
//! run inline — so this suite measures the real speedup of the default
//! build over the fallback on identical inputs.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use hbmi_core::datasets::{generate_synthetic, SynthConfig};
use hbmi_core::decoder::uniform_prior;
use hbmi_core::eval::{within_session_cv, Mode};
use hbmi_core::par::{map_range, map_range_seq, map_slice, map_slice_seq};
use hbmi_core::pipeline::{
    decode_window, preprocess_trial, train_hierarchy, PreprocessedTrial,
};
use hbmi_core::signals::TrialRecording;

fn bench_config(n_trials_per_block: u32) -> SynthConfig {
    SynthConfig {
        seed: 42,
        separability_eeg: 1.5,
        separability_emg: 1.5,
        noise_floor: 0.1,
        session_drift: 0.0,
        n_sessions: 1,
        n_blocks: 2,
        n_trials_per_block,
    }
}

fn raw_trials(n_trials_per_block: u32) -> Vec<TrialRecording> {
    generate_synthetic(&bench_config(n_trials_per_block))
        .expect("synthetic generation")
        .trials
}

fn preprocess_batch(c: &mut Criterion) {
    let trials = raw_trials(10);
    let mut group = c.benchmark_group("preprocess_batch_20_trials");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            let out = map_slice(black_box(&trials), |t| preprocess_trial(t).unwrap());
            black_box(out)
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            let out = map_slice_seq(black_box(&trials), |t| preprocess_trial(t).unwrap());
            black_box(out)
        })
    });
    group.finish();
}

fn decode_batch(c: &mut Criterion) {
    let trials = raw_trials(10);
    let prepped: Vec<PreprocessedTrial> =
        trials.iter().map(|t| preprocess_trial(t).unwrap()).collect();
    let refs: Vec<&PreprocessedTrial> = prepped.iter().collect();
    let (model, _) = train_hierarchy(&refs, 7).expect("training");
    let prior = uniform_prior();
    let jobs: Vec<(usize, usize)> = prepped
        .iter()
        .enumerate()
        .flat_map(|(i, t)| (0..t.n_windows()).map(move |w| (i, w)))
        .collect();

    let mut group = c.benchmark_group("decode_320_windows");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            let out = map_range(0..jobs.len(), |k| {
                let (i, w) = jobs[k];
                decode_window(&model, &prior, &prepped[i], w).unwrap().0
            });
            black_box(out)
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            let out = map_range_seq(0..jobs.len(), |k| {
                let (i, w) = jobs[k];
                decode_window(&model, &prior, &prepped[i], w).unwrap().0
            });
            black_box(out)
        })
    });
    group.finish();
}

fn cv_protocol(c: &mut Criterion) {
    // Two trials per gesture so every stratified fold keeps at least one
    // trial of each 4-class label on the training side.
    let trials = raw_trials(10);
    let prepped: Vec<PreprocessedTrial> =
        trials.iter().map(|t| preprocess_trial(t).unwrap()).collect();
    let mut group = c.benchmark_group("within_session_cv_eeg4");
    group.sample_size(10);
    // The CV protocol decodes through par::map_range internally, so the
    // default build exercises the rayon path end to end; the sequential
    // comparison for this stage lives in `decode_320_windows`.
    group.bench_function("full_5x5", |b| {
        b.iter(|| {
            let run = within_session_cv(black_box(&prepped), 1, Mode::Eeg4, 9).unwrap();
            black_box(run.report.accuracy)
        })
    });
    group.finish();
}

criterion_group!(benches, preprocess_batch, decode_batch, cv_protocol);
criterion_main!(benches);
