//! `hbmi` — command-line entry point for the hybrid EEG/EMG gesture-decoding
//! toolkit: synthetic-dataset generation, model training, window decoding,
//! and the three evaluation protocols, wired into reproducible runs.
//!
//! Every command resolves its parameters from long-name flags layered over
//! an optional JSON config file (flags win), echoes the fully resolved
//! configuration into the output directory, and writes all outputs
//! atomically.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/validation error,
//! 3 numerical failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hbmi_core::datasets::{
    atomic_write, generate_synthetic, load_dataset, load_model_bundle, save_model_bundle,
    write_dataset, SynthConfig,
};
use hbmi_core::decoder::{uniform_prior, Hand};
use hbmi_core::eval::{
    context_sweep_with_error, online_eval, within_session_cv, write_decision_log,
    write_report_table, DecisionRecord, EvalRun, Mode, CONTEXT_SWEEP_GRID,
};
use hbmi_core::pipeline::{decode_window, preprocess_all, train_hierarchy, PreprocessedTrial};
use hbmi_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hbmi",
    version,
    about = "Hybrid EEG/EMG gesture decoding: synthesize, train, decode, evaluate",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multichannel EEG+EMG gesture dataset.
    Synth(SynthArgs),
    /// Train a full decoder model from a dataset and save the bundle.
    Train(TrainArgs),
    /// Run a within-session or online evaluation protocol.
    Eval(EvalArgs),
    /// Decode every window of a dataset with a trained model bundle.
    Decode(DecodeArgs),
    /// Sweep simulated context injection over an online-protocol decode.
    Context(ContextArgs),
}

/// Flags shared by every subcommand.
#[derive(Args)]
struct Common {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of recording sessions.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    sessions: Option<u32>,
    /// Blocks per session.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    blocks: Option<u32>,
    /// Trials per block.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    trials_per_block: Option<u32>,
    /// Scale of label-dependent EEG structure (0 = pure noise).
    #[arg(long)]
    separability_eeg: Option<f64>,
    /// Scale of label-dependent EMG structure (0 = pure noise).
    #[arg(long)]
    separability_emg: Option<f64>,
    /// Baseline noise amplitude.
    #[arg(long)]
    noise_floor: Option<f64>,
    /// Per-session drift of mixing matrices and channel gains.
    #[arg(long)]
    session_drift: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset directory (as written by `synth`).
    #[arg(long)]
    data: PathBuf,
    /// Training seed for the factorization stages.
    #[arg(long)]
    seed: Option<u64>,
    /// Sessions to train on, comma-separated (default: all).
    #[arg(long, value_delimiter = ',')]
    sessions: Vec<u32>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    Within,
    Online,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Eeg4,
    Emg5Right,
    Emg5Left,
    Hbmi10,
}

impl ModeArg {
    fn to_mode(self) -> Mode {
        match self {
            ModeArg::Eeg4 => Mode::Eeg4,
            ModeArg::Emg5Right => Mode::Emg5(Hand::Right),
            ModeArg::Emg5Left => Mode::Emg5(Hand::Left),
            ModeArg::Hbmi10 => Mode::Hbmi10,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Evaluation protocol.
    #[arg(long, value_enum)]
    protocol: Option<ProtocolArg>,
    /// Classifier mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Sessions to evaluate within-session, comma-separated (default: all).
    #[arg(long, value_delimiter = ',')]
    session: Vec<u32>,
    /// Held-out session for the online protocol.
    #[arg(long)]
    test_session: Option<u32>,
    /// Protocol seed (fold shuffles and factorization inits).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Model bundle directory (as written by `train`).
    #[arg(long)]
    model: PathBuf,
    /// Restrict to one session.
    #[arg(long)]
    session: Option<u32>,
    /// Restrict to one block.
    #[arg(long)]
    block: Option<u32>,
}

#[derive(Args)]
struct ContextArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Held-out session decoded under context.
    #[arg(long)]
    test_session: Option<u32>,
    /// Hierarchy level to inject at (0–3); requires --p.
    #[arg(long, requires = "p")]
    level: Option<usize>,
    /// Context probability for the favored state; requires --level.
    #[arg(long, requires = "level")]
    p: Option<f64>,
    /// Probability the simulated classifier favors the true state
    /// (1.0 = always correct).
    #[arg(long)]
    favored_error_rate: Option<f64>,
    /// Training seed.
    #[arg(long)]
    seed: Option<u64>,
}

/// Optional JSON config file: top-level shared values plus one section per
/// command. Flags override anything given here.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    jobs: Option<usize>,
    #[serde(default)]
    synth: SynthSection,
    #[serde(default)]
    train: TrainSection,
    #[serde(default)]
    eval: EvalSection,
    #[serde(default)]
    context: ContextSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthSection {
    #[serde(default)]
    sessions: Option<u32>,
    #[serde(default)]
    blocks: Option<u32>,
    #[serde(default)]
    trials_per_block: Option<u32>,
    #[serde(default)]
    separability_eeg: Option<f64>,
    #[serde(default)]
    separability_emg: Option<f64>,
    #[serde(default)]
    noise_floor: Option<f64>,
    #[serde(default)]
    session_drift: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainSection {
    #[serde(default)]
    sessions: Option<Vec<u32>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalSection {
    #[serde(default)]
    protocol: Option<String>,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    sessions: Option<Vec<u32>>,
    #[serde(default)]
    test_session: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContextSection {
    #[serde(default)]
    test_session: Option<u32>,
    #[serde(default)]
    level: Option<usize>,
    #[serde(default)]
    p: Option<f64>,
    #[serde(default)]
    favored_error_rate: Option<f64>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Validation(format!("config file {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text).map_err(|e| {
        Error::Validation(format!("config file {}: {e}", path.display()))
    })
}

fn parse_mode(name: &str) -> Result<Mode> {
    match name {
        "eeg4" => Ok(Mode::Eeg4),
        "emg5-right" => Ok(Mode::Emg5(Hand::Right)),
        "emg5-left" => Ok(Mode::Emg5(Hand::Left)),
        "hbmi10" => Ok(Mode::Hbmi10),
        other => Err(Error::Validation(format!(
            "unknown mode {other:?}; expected eeg4, emg5-right, emg5-left, or hbmi10"
        ))),
    }
}

fn mode_tag(mode: Mode) -> &'static str {
    match mode {
        Mode::Eeg4 => "eeg4",
        Mode::Emg5(Hand::Right) => "emg5-right",
        Mode::Emg5(Hand::Left) => "emg5-left",
        Mode::Hbmi10 => "hbmi10",
    }
}

/// Serializes `config` as pretty JSON into `out/run_config.json`.
fn echo_config<T: Serialize>(out: &Path, config: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(config)
        .map_err(|e| Error::Validation(format!("serializing run config: {e}")))?;
    text.push('\n');
    atomic_write(&out.join("run_config.json"), text.as_bytes())
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::Validation(format!(
        "cannot create output directory {}: {e}",
        out.display()
    )))
}

fn configure_jobs(flag: Option<usize>, file: Option<usize>) {
    if let Some(jobs) = flag.or(file) {
        // Only configurable once per process; later calls are harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
}

fn load_trials(data: &Path) -> Result<Vec<PreprocessedTrial>> {
    let ds = load_dataset(data)?;
    let raw = ds.load_all()?;
    preprocess_all(&raw)
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let file = load_file_config(args.common.config.as_deref())?;
    configure_jobs(args.common.jobs, file.jobs);
    let defaults = SynthConfig::full_layout(0);
    let config = SynthConfig {
        seed: args.seed.or(file.seed).unwrap_or(7),
        separability_eeg: args
            .separability_eeg
            .or(file.synth.separability_eeg)
            .unwrap_or(defaults.separability_eeg),
        separability_emg: args
            .separability_emg
            .or(file.synth.separability_emg)
            .unwrap_or(defaults.separability_emg),
        noise_floor: args.noise_floor.or(file.synth.noise_floor).unwrap_or(defaults.noise_floor),
        session_drift: args
            .session_drift
            .or(file.synth.session_drift)
            .unwrap_or(defaults.session_drift),
        n_sessions: args.sessions.or(file.synth.sessions).unwrap_or(defaults.n_sessions),
        n_blocks: args.blocks.or(file.synth.blocks).unwrap_or(defaults.n_blocks),
        n_trials_per_block: args
            .trials_per_block
            .or(file.synth.trials_per_block)
            .unwrap_or(defaults.n_trials_per_block),
    };

    let dataset = generate_synthetic(&config)?;
    ensure_out_dir(&args.common.out)?;
    write_dataset(&dataset, &args.common.out)?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        command: &'a str,
        out: String,
        jobs: Option<usize>,
        synth: &'a SynthConfig,
    }
    echo_config(
        &args.common.out,
        &Resolved {
            command: "synth",
            out: args.common.out.display().to_string(),
            jobs: args.common.jobs.or(file.jobs),
            synth: &config,
        },
    )?;
    println!(
        "wrote {} trials ({} sessions x {} blocks x {}) to {}",
        dataset.manifest.n_trials(),
        config.n_sessions,
        config.n_blocks,
        config.n_trials_per_block,
        args.common.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let file = load_file_config(args.common.config.as_deref())?;
    configure_jobs(args.common.jobs, file.jobs);
    let seed = args.seed.or(file.seed).unwrap_or(7);
    let sessions: Option<Vec<u32>> = if args.sessions.is_empty() {
        file.train.sessions.clone()
    } else {
        Some(args.sessions.clone())
    };

    let trials = load_trials(&args.data)?;
    let selected: Vec<&PreprocessedTrial> = match &sessions {
        Some(list) => trials.iter().filter(|t| list.contains(&t.session)).collect(),
        None => trials.iter().collect(),
    };
    if selected.is_empty() {
        return Err(Error::Validation(format!(
            "no trials in {} match sessions {sessions:?}",
            args.data.display()
        )));
    }
    let (model, log) = train_hierarchy(&selected, seed)?;

    ensure_out_dir(&args.common.out)?;
    save_model_bundle(&model, &args.common.out)?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        command: &'a str,
        data: String,
        out: String,
        jobs: Option<usize>,
        seed: u64,
        sessions: Option<Vec<u32>>,
    }
    echo_config(
        &args.common.out,
        &Resolved {
            command: "train",
            data: args.data.display().to_string(),
            out: args.common.out.display().to_string(),
            jobs: args.common.jobs.or(file.jobs),
            seed,
            sessions,
        },
    )?;
    println!(
        "trained on {} trials ({} fitted windows); bundle in {}",
        selected.len(),
        log.window_hashes.len(),
        args.common.out.display()
    );
    Ok(())
}

fn write_repetitions_csv(path: &Path, rows: &[(u32, &EvalRun)]) -> Result<()> {
    let mut out = String::from("session");
    let n_reps = rows.first().map_or(0, |(_, r)| r.rep_accuracies.len());
    for r in 1..=n_reps {
        let _ = write!(out, ",rep{r}");
    }
    out.push_str(",mean\n");
    for (session, run) in rows {
        let _ = write!(out, "{session}");
        for acc in &run.rep_accuracies {
            let _ = write!(out, ",{acc:.4}");
        }
        let mean =
            run.rep_accuracies.iter().sum::<f64>() / run.rep_accuracies.len().max(1) as f64;
        let _ = writeln!(out, ",{mean:.4}");
    }
    atomic_write(path, out.as_bytes())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let file = load_file_config(args.common.config.as_deref())?;
    configure_jobs(args.common.jobs, file.jobs);
    let seed = args.seed.or(file.seed).unwrap_or(7);
    let protocol = match (args.protocol, file.eval.protocol.as_deref()) {
        (Some(p), _) => p,
        (None, Some("within")) => ProtocolArg::Within,
        (None, Some("online")) => ProtocolArg::Online,
        (None, Some(other)) => {
            return Err(Error::Validation(format!(
                "unknown protocol {other:?} in config file; expected within or online"
            )))
        }
        (None, None) => ProtocolArg::Within,
    };
    let mode = match (args.mode, file.eval.mode.as_deref()) {
        (Some(m), _) => m.to_mode(),
        (None, Some(name)) => parse_mode(name)?,
        (None, None) => Mode::Hbmi10,
    };

    let trials = load_trials(&args.data)?;
    ensure_out_dir(&args.common.out)?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        command: &'a str,
        data: String,
        out: String,
        jobs: Option<usize>,
        seed: u64,
        protocol: &'a str,
        mode: &'a str,
        sessions: Vec<u32>,
        test_session: Option<u32>,
    }

    match protocol {
        ProtocolArg::Within => {
            let mut sessions: Vec<u32> = if !args.session.is_empty() {
                args.session.clone()
            } else if let Some(list) = file.eval.sessions.clone() {
                list
            } else {
                let mut all: Vec<u32> = trials.iter().map(|t| t.session).collect();
                all.sort_unstable();
                all.dedup();
                all
            };
            sessions.sort_unstable();
            sessions.dedup();

            let mut accs = Vec::with_capacity(sessions.len());
            let mut runs = Vec::with_capacity(sessions.len());
            let mut decisions: Vec<DecisionRecord> = Vec::new();
            for &s in &sessions {
                let run = within_session_cv(&trials, s, mode, seed)?;
                println!(
                    "within-session s{s} {}: accuracy {:.4} over {} windows",
                    mode,
                    run.report.accuracy,
                    run.report.n_windows
                );
                accs.push(run.report.accuracy);
                decisions.extend(run.decisions.iter().copied());
                runs.push((s, run));
            }
            write_report_table(
                &args.common.out.join("report.csv"),
                &sessions,
                &[(mode_tag(mode).to_string(), accs)],
            )?;
            let rep_rows: Vec<(u32, &EvalRun)> = runs.iter().map(|(s, r)| (*s, r)).collect();
            write_repetitions_csv(&args.common.out.join("repetitions.csv"), &rep_rows)?;
            write_decision_log(&args.common.out.join("decisions.csv"), mode, &decisions)?;
            echo_config(
                &args.common.out,
                &Resolved {
                    command: "eval",
                    data: args.data.display().to_string(),
                    out: args.common.out.display().to_string(),
                    jobs: args.common.jobs.or(file.jobs),
                    seed,
                    protocol: "within",
                    mode: mode_tag(mode),
                    sessions,
                    test_session: None,
                },
            )?;
        }
        ProtocolArg::Online => {
            let test_session = args
                .test_session
                .or(file.eval.test_session)
                .ok_or_else(|| Error::Validation("online protocol requires --test-session".into()))?;
            let run = online_eval(&trials, test_session, mode, seed)?;
            println!(
                "online s{test_session} {}: accuracy {:.4} over {} windows \
                 (trained on sessions 1..{test_session}; {} leaked windows)",
                mode,
                run.report.accuracy,
                run.report.n_windows,
                run.audit.violations
            );
            write_report_table(
                &args.common.out.join("report.csv"),
                &[test_session],
                &[(mode_tag(mode).to_string(), vec![run.report.accuracy])],
            )?;
            write_decision_log(&args.common.out.join("decisions.csv"), mode, &run.decisions)?;
            let audit = serde_json::json!({
                "n_fits": run.audit.n_fits,
                "fit_windows": run.audit.fit_hashes.len(),
                "test_windows": run.audit.test_hashes.len(),
                "violations": run.audit.violations,
            });
            atomic_write(
                &args.common.out.join("audit.json"),
                format!("{audit:#}\n").as_bytes(),
            )?;
            echo_config(
                &args.common.out,
                &Resolved {
                    command: "eval",
                    data: args.data.display().to_string(),
                    out: args.common.out.display().to_string(),
                    jobs: args.common.jobs.or(file.jobs),
                    seed,
                    protocol: "online",
                    mode: mode_tag(mode),
                    sessions: Vec::new(),
                    test_session: Some(test_session),
                },
            )?;
        }
    }
    Ok(())
}

fn cmd_decode(args: DecodeArgs) -> Result<()> {
    let file = load_file_config(args.common.config.as_deref())?;
    configure_jobs(args.common.jobs, file.jobs);
    let model = load_model_bundle(&args.model)?;
    let trials = load_trials(&args.data)?;
    let selected: Vec<&PreprocessedTrial> = trials
        .iter()
        .filter(|t| args.session.is_none_or(|s| t.session == s))
        .filter(|t| args.block.is_none_or(|b| t.block == b))
        .collect();
    if selected.is_empty() {
        return Err(Error::Validation(format!(
            "no trials in {} match session {:?} block {:?}",
            args.data.display(),
            args.session,
            args.block
        )));
    }

    let prior = uniform_prior();
    let mut decisions = Vec::new();
    let mut correct = 0usize;
    for trial in &selected {
        for w in 0..trial.n_windows() {
            let (label, _) = decode_window(&model, &prior, trial, w)?;
            correct += usize::from(label == trial.label);
            decisions.push(DecisionRecord {
                session: trial.session,
                block: trial.block,
                trial_index: trial.trial_index,
                window: w,
                true_class: trial.label.index(),
                predicted_class: label.index(),
            });
        }
    }

    ensure_out_dir(&args.common.out)?;
    write_decision_log(&args.common.out.join("decisions.csv"), Mode::Hbmi10, &decisions)?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        command: &'a str,
        data: String,
        model: String,
        out: String,
        jobs: Option<usize>,
        session: Option<u32>,
        block: Option<u32>,
    }
    echo_config(
        &args.common.out,
        &Resolved {
            command: "decode",
            data: args.data.display().to_string(),
            model: args.model.display().to_string(),
            out: args.common.out.display().to_string(),
            jobs: args.common.jobs.or(file.jobs),
            session: args.session,
            block: args.block,
        },
    )?;
    println!(
        "decoded {} windows from {} trials; {:.4} match the recorded labels",
        decisions.len(),
        selected.len(),
        correct as f64 / decisions.len().max(1) as f64
    );
    Ok(())
}

fn cmd_context(args: ContextArgs) -> Result<()> {
    let file = load_file_config(args.common.config.as_deref())?;
    configure_jobs(args.common.jobs, file.jobs);
    let seed = args.seed.or(file.seed).unwrap_or(7);
    let test_session = args
        .test_session
        .or(file.context.test_session)
        .ok_or_else(|| Error::Validation("context sweep requires --test-session".into()))?;
    let level = args.level.or(file.context.level);
    let p = args.p.or(file.context.p);
    let grid: Vec<(usize, f64)> = match (level, p) {
        (Some(l), Some(p)) => vec![(l, p)],
        (None, None) => CONTEXT_SWEEP_GRID.to_vec(),
        _ => {
            return Err(Error::Validation(
                "--level and --p must be given together".into(),
            ))
        }
    };
    let correct_rate = args.favored_error_rate.or(file.context.favored_error_rate).unwrap_or(1.0);

    let trials = load_trials(&args.data)?;
    let rows = context_sweep_with_error(&trials, test_session, &grid, correct_rate, seed)?;

    ensure_out_dir(&args.common.out)?;
    let mut sweep = String::from("level,p,accuracy,n_windows\n");
    for row in &rows {
        println!(
            "context level {} p {:.2}: accuracy {:.4} over {} windows",
            row.level, row.p, row.run.report.accuracy, row.run.report.n_windows
        );
        let _ = writeln!(
            sweep,
            "{},{:.2},{:.4},{}",
            row.level, row.p, row.run.report.accuracy, row.run.report.n_windows
        );
    }
    atomic_write(&args.common.out.join("sweep.csv"), sweep.as_bytes())?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        command: &'a str,
        data: String,
        out: String,
        jobs: Option<usize>,
        seed: u64,
        test_session: u32,
        grid: Vec<(usize, f64)>,
        favored_error_rate: f64,
    }
    echo_config(
        &args.common.out,
        &Resolved {
            command: "context",
            data: args.data.display().to_string(),
            out: args.common.out.display().to_string(),
            jobs: args.common.jobs.or(file.jobs),
            seed,
            test_session,
            grid,
            favored_error_rate: correct_rate,
        },
    )?;
    Ok(())
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Context(args) => cmd_context(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hbmi: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
