//! Recording types and EEG/EMG preprocessing.
//!
//! All operations are pure functions over immutable inputs: downsampling with
//! an anti-alias lowpass, baseline correction against the first second,
//! splitting into 250 ms windows, zero-phase IIR filtering and per-channel
//! RMS. Trials are therefore safe to process in parallel.

pub mod filter;

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::decoder::GestureLabel;
use crate::error::{Error, Result};

/// Nominal trial length in seconds (1 s baseline + 4 s of decodable signal).
pub const TRIAL_SECS: f64 = 5.0;
/// Length of the baseline segment subtracted from EEG trials.
pub const BASELINE_SECS: f64 = 1.0;
/// Decision windows are 250 ms long.
pub const WINDOW_SECS: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modality {
    Eeg,
    Emg,
}

/// A multichannel signal segment: rows are channels, columns are time
/// samples, amplitudes in (nominal) microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub samples: Array2<f64>,
    pub rate: f64,
    pub modality: Modality,
}

impl Recording {
    pub fn new(samples: Array2<f64>, rate: f64, modality: Modality) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::Domain(format!("sampling rate must be > 0, got {rate}")));
        }
        if samples.nrows() == 0 {
            return Err(Error::EmptyInput("recording has no channels".into()));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite sample value {bad}")));
        }
        Ok(Recording { samples, rate, modality })
    }

    pub fn channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.rate
    }
}

/// One five-second trial: simultaneous EEG and EMG plus provenance.
#[derive(Debug, Clone)]
pub struct TrialRecording {
    pub eeg: Recording,
    pub emg: Recording,
    pub label: GestureLabel,
    pub session: u32,
    pub block: u32,
    pub trial_index: u32,
}

impl TrialRecording {
    pub fn new(
        eeg: Recording,
        emg: Recording,
        label: GestureLabel,
        session: u32,
        block: u32,
        trial_index: u32,
    ) -> Result<Self> {
        if session == 0 || block == 0 {
            return Err(Error::Domain(
                "session and block numbers are 1-based".into(),
            ));
        }
        for rec in [&eeg, &emg] {
            let expect = TRIAL_SECS * rec.rate;
            if (rec.len() as f64 - expect).abs() > 1.0 {
                return Err(Error::Validation(format!(
                    "trial s{session} b{block} t{trial_index}: {:?} length {} samples, expected {} at {} Hz",
                    rec.modality,
                    rec.len(),
                    expect.round() as usize,
                    rec.rate
                )));
            }
        }
        Ok(TrialRecording { eeg, emg, label, session, block, trial_index })
    }
}

/// Position of a window within its source trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowOrigin {
    pub trial_index: u32,
    pub ordinal: u32,
}

/// One 250 ms decision window (channels x samples).
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub samples: Array2<f64>,
    pub origin: WindowOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FilterKind {
    Bandpass { low_hz: f64, high_hz: f64 },
    Notch { center_hz: f64 },
}

/// Specification of an IIR filter to apply to a recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub order: usize,
}

impl FilterSpec {
    pub fn bandpass(low_hz: f64, high_hz: f64, order: usize) -> Self {
        FilterSpec { kind: FilterKind::Bandpass { low_hz, high_hz }, order }
    }

    pub fn notch(center_hz: f64) -> Self {
        FilterSpec { kind: FilterKind::Notch { center_hz }, order: 2 }
    }

    fn design(&self, fs: f64) -> Result<Vec<filter::Sos>> {
        match self.kind {
            FilterKind::Bandpass { low_hz, high_hz } => {
                filter::butter_bandpass(self.order, low_hz, high_hz, fs)
            }
            FilterKind::Notch { center_hz } => filter::notch(center_hz, filter::NOTCH_Q, fs),
        }
    }
}

/// Integer-factor downsampling with an order-8 anti-alias Butterworth lowpass
/// at 0.4x the target rate, applied zero-phase before decimation.
pub fn downsample(rec: &Recording, target_rate: f64) -> Result<Recording> {
    if !(target_rate > 0.0) {
        return Err(Error::Domain(format!("target rate must be > 0, got {target_rate}")));
    }
    let ratio = rec.rate / target_rate;
    let factor = ratio.round();
    if (ratio - factor).abs() > 1e-9 || factor < 1.0 {
        return Err(Error::RateMismatch(format!(
            "{} Hz is not an integer multiple of {} Hz",
            rec.rate, target_rate
        )));
    }
    let factor = factor as usize;
    if factor == 1 {
        return Ok(rec.clone());
    }

    let sos = filter::butter_lowpass(8, 0.4 * target_rate, rec.rate)?;
    let n_out = rec.len() / factor;
    let mut out = Array2::<f64>::zeros((rec.channels(), n_out));
    for (ch, row) in rec.samples.outer_iter().enumerate() {
        let filtered = filter::sosfiltfilt(&sos, row.as_slice().expect("contiguous row"));
        for (j, slot) in out.row_mut(ch).iter_mut().enumerate() {
            *slot = filtered[j * factor];
        }
    }
    Recording::new(out, target_rate, rec.modality)
}

/// Subtracts each channel's mean over the first second and returns the
/// remaining 1 s - 5 s segment.
pub fn baseline_correct(rec: &Recording) -> Result<Recording> {
    let n_base = (BASELINE_SECS * rec.rate).round() as usize;
    let n_out = ((TRIAL_SECS - BASELINE_SECS) * rec.rate).round() as usize;
    // Tolerate a one-sample-short trial; anything shorter is an error.
    if rec.len() + 1 < n_base + n_out {
        return Err(Error::InsufficientDuration {
            need_s: TRIAL_SECS,
            have_s: rec.duration_secs(),
        });
    }
    let end = (n_base + n_out).min(rec.len());
    let baseline = rec.samples.slice(s![.., ..n_base]);
    let mut out = rec.samples.slice(s![.., n_base..end]).to_owned();
    for (ch, mut row) in out.outer_iter_mut().enumerate() {
        let mean = baseline.row(ch).mean().unwrap_or(0.0);
        row.mapv_inplace(|v| v - mean);
    }
    Recording::new(out, rec.rate, rec.modality)
}

/// Returns the 1 s - 5 s segment without baseline subtraction (EMG path).
pub fn post_baseline_segment(rec: &Recording) -> Result<Recording> {
    let n_base = (BASELINE_SECS * rec.rate).round() as usize;
    let n_out = ((TRIAL_SECS - BASELINE_SECS) * rec.rate).round() as usize;
    if rec.len() + 1 < n_base + n_out {
        return Err(Error::InsufficientDuration {
            need_s: TRIAL_SECS,
            have_s: rec.duration_secs(),
        });
    }
    let end = (n_base + n_out).min(rec.len());
    let out = rec.samples.slice(s![.., n_base..end]).to_owned();
    Recording::new(out, rec.rate, rec.modality)
}

/// Splits a recording into contiguous, non-overlapping 250 ms windows in
/// temporal order. A trailing partial window is dropped; the second return
/// value is the number of samples discarded that way.
pub fn split_windows(rec: &Recording, trial_index: u32) -> (Vec<Window>, usize) {
    let win_len = (WINDOW_SECS * rec.rate).round() as usize;
    if win_len == 0 || rec.len() < win_len {
        return (Vec::new(), rec.len());
    }
    let n_windows = rec.len() / win_len;
    let dropped = rec.len() - n_windows * win_len;
    let windows = (0..n_windows)
        .map(|i| Window {
            samples: rec
                .samples
                .slice(s![.., i * win_len..(i + 1) * win_len])
                .to_owned(),
            origin: WindowOrigin { trial_index, ordinal: i as u32 },
        })
        .collect();
    (windows, dropped)
}

/// Zero-phase (forward-backward) filtering of every channel.
pub fn apply_filter(rec: &Recording, spec: &FilterSpec) -> Result<Recording> {
    let sos = spec.design(rec.rate)?;
    let mut out = Array2::<f64>::zeros(rec.samples.raw_dim());
    for (ch, row) in rec.samples.outer_iter().enumerate() {
        let filtered = filter::sosfiltfilt(&sos, row.as_slice().expect("contiguous row"));
        out.row_mut(ch).iter_mut().zip(filtered).for_each(|(o, v)| *o = v);
    }
    Recording::new(out, rec.rate, rec.modality)
}

/// Per-channel root-mean-square of a window.
pub fn window_rms(w: &Window) -> Result<Array1<f64>> {
    if w.samples.ncols() == 0 {
        return Err(Error::EmptyInput("empty window".into()));
    }
    let n = w.samples.ncols() as f64;
    Ok(w.samples
        .outer_iter()
        .map(|row| (row.iter().map(|v| v * v).sum::<f64>() / n).sqrt())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rec(samples: Array2<f64>, rate: f64) -> Recording {
        Recording::new(samples, rate, Modality::Eeg).unwrap()
    }

    #[test]
    fn downsample_1200_to_300_shapes() {
        let r = rec(Array2::zeros((19, 4800)), 1200.0);
        let out = downsample(&r, 300.0).unwrap();
        assert_eq!(out.channels(), 19);
        assert_eq!(out.len(), 1200);
        assert_eq!(out.rate, 300.0);
    }

    #[test]
    fn downsample_identity_at_same_rate() {
        let r = rec(Array2::from_shape_fn((2, 600), |(i, j)| (i + j) as f64), 300.0);
        let out = downsample(&r, 300.0).unwrap();
        assert_eq!(out.samples, r.samples);
    }

    #[test]
    fn downsample_rejects_non_integer_ratio() {
        let r = rec(Array2::zeros((2, 1000)), 1000.0);
        assert!(matches!(downsample(&r, 300.0), Err(Error::RateMismatch(_))));
    }

    #[test]
    fn downsample_sine_matches_analytic() {
        // A 10 Hz sine is far below the 120 Hz anti-alias cutoff, so the
        // decimated samples must match the analytic sine at the new instants.
        let fs = 1200.0;
        let n = 6000;
        let samples = Array2::from_shape_fn((1, n), |(_, j)| {
            (2.0 * std::f64::consts::PI * 10.0 * j as f64 / fs).sin()
        });
        let out = downsample(&rec(samples, fs), 300.0).unwrap();
        let trim = 150; // half a second each side
        for j in trim..out.len() - trim {
            let expect = (2.0 * std::f64::consts::PI * 10.0 * j as f64 / 300.0).sin();
            assert!(
                (out.samples[[0, j]] - expect).abs() < 1e-3,
                "sample {j}: {} vs {expect}",
                out.samples[[0, j]]
            );
        }
    }

    #[test]
    fn baseline_constant_goes_to_zero() {
        let r = rec(Array2::from_elem((3, 1500), 4.2), 300.0);
        let out = baseline_correct(&r).unwrap();
        assert_eq!(out.len(), 1200);
        assert!(out.samples.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn baseline_zero_first_second() {
        let mut samples = Array2::zeros((1, 1500));
        samples.slice_mut(s![.., 300..]).fill(5.0);
        let out = baseline_correct(&rec(samples, 300.0)).unwrap();
        assert!(out.samples.iter().all(|v| (v - 5.0).abs() < 1e-12));
    }

    #[test]
    fn baseline_mean_arithmetic() {
        let mut rng_state = 123u64;
        let mut next = move || {
            // xorshift, good enough for an arithmetic identity test
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state % 10_000) as f64 / 10_000.0 - 0.5
        };
        let samples = Array2::from_shape_fn((4, 1500), |_| next());
        let r = rec(samples, 300.0);
        let out = baseline_correct(&r).unwrap();
        for ch in 0..4 {
            let orig_tail = r.samples.slice(s![ch, 300..]).mean().unwrap();
            let base = r.samples.slice(s![ch, ..300]).mean().unwrap();
            let got = out.samples.row(ch).mean().unwrap();
            assert_abs_diff_eq!(got, orig_tail - base, epsilon = 1e-12);
        }
    }

    #[test]
    fn baseline_rejects_short_trial() {
        let r = rec(Array2::zeros((2, 1000)), 300.0);
        assert!(matches!(
            baseline_correct(&r),
            Err(Error::InsufficientDuration { .. })
        ));
    }

    #[test]
    fn windows_16_per_4s() {
        let r = rec(Array2::zeros((19, 1200)), 300.0);
        let (windows, dropped) = split_windows(&r, 0);
        assert_eq!(windows.len(), 16);
        assert_eq!(dropped, 0);
        assert!(windows.iter().all(|w| w.samples.ncols() == 75));
        assert_eq!(windows[7].origin, WindowOrigin { trial_index: 0, ordinal: 7 });
    }

    #[test]
    fn windows_single_exact() {
        let r = rec(Array2::from_shape_fn((2, 75), |(i, j)| (i * 75 + j) as f64), 300.0);
        let (windows, dropped) = split_windows(&r, 3);
        assert_eq!(windows.len(), 1);
        assert_eq!(dropped, 0);
        assert_eq!(windows[0].samples, r.samples);
    }

    #[test]
    fn windows_drop_trailing_partial() {
        let r = rec(Array2::zeros((2, 1230)), 300.0); // 4.1 s
        let (windows, dropped) = split_windows(&r, 0);
        assert_eq!(windows.len(), 16);
        assert_eq!(dropped, 30);
    }

    #[test]
    fn bandpass_rejects_dc() {
        let r = rec(Array2::from_elem((1, 1200), 3.0), 300.0);
        let out = apply_filter(&r, &FilterSpec::bandpass(8.0, 15.0, 4)).unwrap();
        let mid = out.samples.slice(s![0, 300..900]);
        let max = mid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-6 * 3.0, "dc leak {max}");
    }

    #[test]
    fn bandpass_passes_11hz() {
        let fs = 300.0;
        let samples = Array2::from_shape_fn((1, 1200), |(_, j)| {
            (2.0 * std::f64::consts::PI * 11.0 * j as f64 / fs).sin()
        });
        let out = apply_filter(&rec(samples, fs), &FilterSpec::bandpass(8.0, 15.0, 4)).unwrap();
        let mid = out.samples.slice(s![0, 300..900]);
        let amp = (2.0 * mid.iter().map(|v| v * v).sum::<f64>() / 600.0).sqrt();
        // Forward-backward squares the single-pass response.
        let sos = filter::butter_bandpass(4, 8.0, 15.0, fs).unwrap();
        let expected = filter::response_magnitude(&sos, 11.0, fs).powi(2);
        assert_abs_diff_eq!(amp, expected, epsilon = 1e-3);
        assert!((amp - 1.0).abs() < 0.05, "11 Hz amplitude {amp}");
    }

    #[test]
    fn notch_rejects_60hz() {
        let fs = 1200.0;
        let samples = Array2::from_shape_fn((1, 6000), |(_, j)| {
            (2.0 * std::f64::consts::PI * 60.0 * j as f64 / fs).sin()
        });
        let out = apply_filter(&rec(samples, fs), &FilterSpec::notch(60.0)).unwrap();
        let mid = out.samples.slice(s![0, 1800..4200]);
        let amp = (2.0 * mid.iter().map(|v| v * v).sum::<f64>() / 2400.0).sqrt();
        assert!(amp < 0.05, "60 Hz residual {amp}");
    }

    #[test]
    fn filter_rejects_band_past_nyquist() {
        let r = rec(Array2::zeros((1, 600)), 300.0);
        assert!(matches!(
            apply_filter(&r, &FilterSpec::bandpass(20.0, 160.0, 4)),
            Err(Error::InvalidFilter(_))
        ));
        assert!(matches!(
            apply_filter(&r, &FilterSpec::notch(150.0)),
            Err(Error::InvalidFilter(_))
        ));
    }

    #[test]
    fn rms_examples() {
        let w = Window {
            samples: ndarray::array![[3.0, -3.0, 3.0, -3.0], [0.0, 0.0, 0.0, 0.0], [1.0, 2.0, 3.0, 4.0]],
            origin: WindowOrigin { trial_index: 0, ordinal: 0 },
        };
        let rms = window_rms(&w).unwrap();
        assert_abs_diff_eq!(rms[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rms[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rms[2], (30.0f64 / 4.0).sqrt(), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn rms_scale_equivariant(c in -50.0f64..50.0, vals in proptest::collection::vec(-10.0f64..10.0, 8)) {
            let samples = Array2::from_shape_vec((2, 4), vals.clone()).unwrap();
            let w = Window { samples, origin: WindowOrigin { trial_index: 0, ordinal: 0 } };
            let scaled = Window {
                samples: w.samples.mapv(|v| c * v),
                origin: w.origin,
            };
            let base = window_rms(&w).unwrap();
            let got = window_rms(&scaled).unwrap();
            for (g, b) in got.iter().zip(base.iter()) {
                prop_assert!((g - c.abs() * b).abs() < 1e-10);
            }
        }

        #[test]
        fn filter_is_linear(seed in 0u64..1000) {
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state % 20_000) as f64 / 10_000.0 - 1.0
            };
            let x = Array2::from_shape_fn((1, 600), |_| next());
            let y = Array2::from_shape_fn((1, 600), |_| next());
            let (a, b) = (1.7, -0.6);
            let spec = FilterSpec::bandpass(8.0, 15.0, 4);
            let fx = apply_filter(&rec(x.clone(), 300.0), &spec).unwrap();
            let fy = apply_filter(&rec(y.clone(), 300.0), &spec).unwrap();
            let combo = apply_filter(&rec(a * &x + b * &y, 300.0), &spec).unwrap();
            let scale = combo.samples.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (c, (px, py)) in combo.samples.iter().zip(fx.samples.iter().zip(fy.samples.iter())) {
                prop_assert!((c - (a * px + b * py)).abs() < 1e-9 * scale);
            }
        }
    }
}
