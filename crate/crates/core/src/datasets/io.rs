//! Disk formats: trial CSVs, the dataset manifest, and model bundles.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{DatasetManifest, SyntheticDataset, TrialDescriptor};
use crate::decoder::{ContextPrior, EegBranch, EmgBranch, HierarchyModel};
use crate::error::{Error, Result};
use crate::signals::{Modality, Recording, TrialRecording, TRIAL_SECS};

/// Version tag of the model-bundle directory format. Compatibility policy:
/// additive fields only within a version.
pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// Writes bytes to a temporary sibling file and renames it into place, so a
/// crash never leaves a half-written output.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Validation(format!("not a file path: {}", path.display())))?;
    let tmp = parent.join(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn format_csv(samples: &Array2<f64>) -> String {
    let mut out = String::with_capacity(samples.len() * 20);
    for row in samples.outer_iter() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.push(',');
            }
            write!(out, "{v}").expect("string write");
            first = false;
        }
        out.push('\n');
    }
    out
}

fn parse_csv(path: &Path, expect_channels: usize, expect_samples: usize, rate: f64) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(expect_channels);
    for (line_no, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(expect_samples);
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                file: path.display().to_string(),
                line: line_no + 1,
                message: format!("bad number {field:?}: {e}"),
            })?;
            row.push(v);
        }
        if row.len() != expect_samples {
            return Err(Error::Validation(format!(
                "{}: line {} has {} samples, expected {} samples at {} Hz ({} s trial)",
                path.display(),
                line_no + 1,
                row.len(),
                expect_samples,
                rate,
                TRIAL_SECS,
            )));
        }
        rows.push(row);
    }
    if rows.len() != expect_channels {
        return Err(Error::Validation(format!(
            "{}: {} channel rows, expected {expect_channels}",
            path.display(),
            rows.len()
        )));
    }
    let mut out = Array2::zeros((expect_channels, expect_samples));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Validation(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Writes the dataset (manifest plus one CSV per trial per modality) under
/// `root`, creating directories as needed.
pub fn write_dataset(dataset: &SyntheticDataset, root: &Path) -> Result<()> {
    let trials_dir = root.join("trials");
    fs::create_dir_all(&trials_dir).map_err(|e| Error::io(&trials_dir, e))?;
    write_json(&root.join("manifest"), &dataset.manifest)?;

    let mut by_key = std::collections::HashMap::new();
    for trial in &dataset.trials {
        by_key.insert((trial.session, trial.block, trial.trial_index), trial);
    }
    for session in &dataset.manifest.sessions {
        for block in &session.blocks {
            for desc in &block.trials {
                let trial = by_key
                    .get(&(session.session, block.block, desc.trial_index))
                    .ok_or_else(|| {
                        Error::Validation(format!(
                            "manifest references s{} b{} t{} but the dataset has no such trial",
                            session.session, block.block, desc.trial_index
                        ))
                    })?;
                atomic_write(
                    &root.join(&desc.eeg_file),
                    format_csv(&trial.eeg.samples).as_bytes(),
                )?;
                atomic_write(
                    &root.join(&desc.emg_file),
                    format_csv(&trial.emg.samples).as_bytes(),
                )?;
            }
        }
    }
    Ok(())
}

/// A dataset directory opened for reading; trials load lazily.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub manifest: DatasetManifest,
    root: PathBuf,
}

impl LoadedDataset {
    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Loads one trial's recordings from disk, validating shapes against
    /// the manifest's declared rates and channel lists.
    pub fn load_trial(
        &self,
        session: u32,
        block: u32,
        desc: &TrialDescriptor,
    ) -> Result<TrialRecording> {
        let m = &self.manifest;
        let eeg_samples = parse_csv(
            &self.root.join(&desc.eeg_file),
            m.eeg_channels.len(),
            (TRIAL_SECS * m.eeg_rate_hz).round() as usize,
            m.eeg_rate_hz,
        )?;
        let emg_samples = parse_csv(
            &self.root.join(&desc.emg_file),
            m.emg_channels.len(),
            (TRIAL_SECS * m.emg_rate_hz).round() as usize,
            m.emg_rate_hz,
        )?;
        TrialRecording::new(
            Recording::new(eeg_samples, m.eeg_rate_hz, Modality::Eeg)?,
            Recording::new(emg_samples, m.emg_rate_hz, Modality::Emg)?,
            desc.label,
            session,
            block,
            desc.trial_index,
        )
    }

    /// Loads every trial in manifest order.
    pub fn load_all(&self) -> Result<Vec<TrialRecording>> {
        let mut out = Vec::with_capacity(self.manifest.n_trials());
        for session in &self.manifest.sessions {
            for block in &session.blocks {
                for desc in &block.trials {
                    out.push(self.load_trial(session.session, block.block, desc)?);
                }
            }
        }
        Ok(out)
    }
}

/// Opens a dataset directory: parses the manifest and checks every
/// referenced trial file exists.
pub fn load_dataset(root: &Path) -> Result<LoadedDataset> {
    let manifest: DatasetManifest = read_json(&root.join("manifest"))?;
    for session in &manifest.sessions {
        for block in &session.blocks {
            for desc in &block.trials {
                for file in [&desc.eeg_file, &desc.emg_file] {
                    let path = root.join(file);
                    if !path.is_file() {
                        return Err(Error::Validation(format!(
                            "manifest references missing trial file {file}"
                        )));
                    }
                }
            }
        }
    }
    Ok(LoadedDataset { manifest, root: root.to_path_buf() })
}

#[derive(Debug, Serialize, serde::Deserialize)]
struct BundleVersion {
    format_version: u32,
}

/// Saves a model as a directory of per-component JSON files.
pub fn save_model_bundle(model: &HierarchyModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("version.json"), &BundleVersion { format_version: BUNDLE_FORMAT_VERSION })?;
    write_json(&dir.join("eeg.json"), &model.eeg)?;
    write_json(&dir.join("emg_right.json"), &model.emg[0])?;
    write_json(&dir.join("emg_left.json"), &model.emg[1])?;
    write_json(&dir.join("prior.json"), &model.default_prior)?;
    Ok(())
}

/// Loads a model bundle, failing with a model-incomplete error when a
/// component file is absent.
pub fn load_model_bundle(dir: &Path) -> Result<HierarchyModel> {
    for required in ["version.json", "eeg.json", "emg_right.json", "emg_left.json", "prior.json"] {
        if !dir.join(required).is_file() {
            return Err(Error::ModelIncomplete(format!(
                "bundle {} is missing {required}",
                dir.display()
            )));
        }
    }
    let version: BundleVersion = read_json(&dir.join("version.json"))?;
    if version.format_version != BUNDLE_FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "bundle format version {} unsupported (expected {BUNDLE_FORMAT_VERSION})",
            version.format_version
        )));
    }
    let eeg: EegBranch = read_json(&dir.join("eeg.json"))?;
    let emg_right: EmgBranch = read_json(&dir.join("emg_right.json"))?;
    let emg_left: EmgBranch = read_json(&dir.join("emg_left.json"))?;
    let prior: ContextPrior = read_json(&dir.join("prior.json"))?;
    let model = HierarchyModel { eeg, emg: [emg_right, emg_left], default_prior: prior };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate_synthetic, SynthConfig};
    use crate::decoder::test_support::{random_features_near_model, random_model, TINY_DIMS};
    use crate::decoder::{map_decode, uniform_prior};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_config() -> SynthConfig {
        SynthConfig {
            seed: 12,
            separability_eeg: 0.5,
            separability_emg: 0.5,
            noise_floor: 0.1,
            session_drift: 0.0,
            n_sessions: 1,
            n_blocks: 2,
            n_trials_per_block: 2,
        }
    }

    #[test]
    fn dataset_roundtrip_is_bit_exact() {
        let ds = generate_synthetic(&tiny_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.manifest, ds.manifest);
        let trials = loaded.load_all().unwrap();
        assert_eq!(trials.len(), ds.trials.len());
        for (a, b) in trials.iter().zip(ds.trials.iter()) {
            assert_eq!(a.eeg.samples, b.eeg.samples, "EEG roundtrip drifted");
            assert_eq!(a.emg.samples, b.emg.samples, "EMG roundtrip drifted");
            assert_eq!(a.label, b.label);
            assert_eq!((a.session, a.block, a.trial_index), (b.session, b.block, b.trial_index));
        }
    }

    #[test]
    fn writes_are_deterministic() {
        let ds = generate_synthetic(&tiny_config()).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_dataset(&ds, d1.path()).unwrap();
        write_dataset(&ds, d2.path()).unwrap();
        for rel in ["manifest", "trials/s1_b1_t0_eeg.csv", "trials/s1_b2_t1_emg.csv"] {
            let a = fs::read(d1.path().join(rel)).unwrap();
            let b = fs::read(d2.path().join(rel)).unwrap();
            assert_eq!(a, b, "file {rel} differs between runs");
        }
    }

    #[test]
    fn missing_trial_file_is_named() {
        let ds = generate_synthetic(&tiny_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        fs::remove_file(dir.path().join("trials/s1_b1_t1_emg.csv")).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("s1_b1_t1_emg.csv"), "{err}");
    }

    #[test]
    fn truncated_trial_cites_expected_shape() {
        let ds = generate_synthetic(&tiny_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        // Truncate one EEG file to 100 samples per row.
        let victim = dir.path().join("trials/s1_b1_t0_eeg.csv");
        let text = fs::read_to_string(&victim).unwrap();
        let short: Vec<String> = text
            .lines()
            .map(|l| l.split(',').take(100).collect::<Vec<_>>().join(","))
            .collect();
        fs::write(&victim, short.join("\n")).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        let err = loaded.load_all().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 6000 samples at 1200 Hz"), "{msg}");
    }

    #[test]
    fn corrupt_number_reports_file_and_line() {
        let ds = generate_synthetic(&tiny_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        let victim = dir.path().join("trials/s1_b1_t0_emg.csv");
        let mut text = fs::read_to_string(&victim).unwrap();
        text = text.replacen(',', ",oops,", 1);
        fs::write(&victim, text).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        let err = loaded.load_all().unwrap_err();
        match err {
            Error::Parse { file, line, .. } => {
                assert!(file.contains("s1_b1_t0_emg.csv"));
                assert_eq!(line, 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bundle_roundtrip_preserves_decisions_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let model = random_model(&mut rng, TINY_DIMS);
        let dir = tempfile::tempdir().unwrap();
        save_model_bundle(&model, dir.path()).unwrap();
        let loaded = load_model_bundle(dir.path()).unwrap();
        let prior = uniform_prior();
        for _ in 0..100 {
            let feats = random_features_near_model(&mut rng, &model);
            let (l1, s1) = map_decode(&model, &prior, &feats).unwrap();
            let (l2, s2) = map_decode(&loaded, &prior, &feats).unwrap();
            assert_eq!(l1, l2);
            assert_eq!(s1, s2, "scores must be bit-identical after roundtrip");
        }
    }

    #[test]
    fn bundle_missing_component_is_model_incomplete() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = random_model(&mut rng, TINY_DIMS);
        let dir = tempfile::tempdir().unwrap();
        save_model_bundle(&model, dir.path()).unwrap();
        fs::remove_file(dir.path().join("emg_left.json")).unwrap();
        let err = load_model_bundle(dir.path()).unwrap_err();
        assert!(matches!(err, Error::ModelIncomplete(_)), "{err:?}");
        assert!(err.to_string().contains("emg_left.json"));
    }

    #[test]
    fn bundle_wrong_version_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = random_model(&mut rng, TINY_DIMS);
        let dir = tempfile::tempdir().unwrap();
        save_model_bundle(&model, dir.path()).unwrap();
        fs::write(
            dir.path().join("version.json"),
            "{\"format_version\": 99}\n",
        )
        .unwrap();
        assert!(matches!(
            load_model_bundle(dir.path()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn atomic_write_replaces_existing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        atomic_write(&path, b"first").unwrap();
        atomic_write(&path, b"second").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"second");
        // No stray temp files left behind.
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }
}
