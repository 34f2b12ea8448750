mod commands;
mod error;
mod inputs;
mod manifest;
mod svg;

use clap::{Parser, Subcommand};
use commands::{Ctx, Outcome};
use error::CliError;
use inputs::{Inputs, MANIFEST};
use manifest::{Decisions, RunManifest};
use std::path::PathBuf;

/// Predict P300 speller performance from resting-state EEG.
#[derive(Parser, Debug)]
#[command(name = "bci-predict", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input directory; may be given more than once.
    #[arg(long = "in", global = true)]
    inputs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated subject ids to restrict the run to.
    #[arg(long, global = true, value_delimiter = ',')]
    subjects: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Generate a synthetic cohort or a single subject.
    Synth,
    /// Filter, epoch and clean raw recordings.
    Preprocess,
    /// Resting-state band power and synchrony per region.
    Features,
    /// Train the speller classifier and score accuracy by sequence count.
    Classify,
    /// Correlate resting features with speller performance.
    Correlate,
    /// Fit or apply the performance regression.
    Predict,
    /// Target versus non-target band dynamics with permutation tests.
    Dynamics,
    /// Summarize result tables as markdown.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Preprocess => "preprocess",
            Command::Features => "features",
            Command::Classify => "classify",
            Command::Correlate => "correlate",
            Command::Predict => "predict",
            Command::Dynamics => "dynamics",
            Command::Report => "report",
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("BCI_PREDICT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("BCI_PREDICT_THREADS must be a positive integer, got {v:?}")))?;
    // A second initialization can only happen in-process and is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn same_dir(a: &std::path::Path, b: &std::path::Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    configure_threads()?;
    let out = cli.out.ok_or_else(|| CliError::Usage("--out is required".into()))?;
    if cli.inputs.iter().any(|i| same_dir(i, &out)) {
        return Err(CliError::Usage("--out must differ from every --in directory".into()));
    }
    let inputs = Inputs::new(cli.inputs)?;
    std::fs::create_dir_all(&out).map_err(|e| CliError::data(format!("{}: {e}", out.display())))?;
    let mut ctx = Ctx {
        inputs,
        out,
        seed: cli.seed,
        subjects: cli.subjects,
        config: cli.config,
        outputs: Vec::new(),
    };
    let outcome: Outcome = match cli.command {
        Command::Synth => commands::synth(&mut ctx),
        Command::Preprocess => commands::preprocess(&mut ctx),
        Command::Features => commands::features(&mut ctx),
        Command::Classify => commands::classify(&mut ctx),
        Command::Correlate => commands::correlate(&mut ctx),
        Command::Predict => commands::predict(&mut ctx),
        Command::Dynamics => commands::dynamics(&mut ctx),
        Command::Report => commands::report(&mut ctx),
    }?;

    let mut inputs = ctx.inputs.hashes();
    if let Some(cfg) = &ctx.config {
        let bytes = std::fs::read(cfg).map_err(|e| CliError::data(format!("{}: {e}", cfg.display())))?;
        use sha2::Digest;
        inputs.insert("<config>".into(), hex::encode(sha2::Sha256::digest(&bytes)));
    }
    let mut outputs = ctx.outputs.clone();
    outputs.sort();
    let n_outputs = outputs.len();
    let manifest = RunManifest {
        tool: "bci-predict",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        config: outcome.config,
        decisions: Decisions {
            rejection_rule: format!(
                "drop an epoch when more than {:.0}% of channels exceed {} uV peak-to-peak, otherwise interpolate the offending channels",
                100.0 * outcome.reject_channel_fraction,
                outcome.artifact_threshold_uv
            ),
            resting_epoch_s: outcome.resting_epoch_s,
            svm_c: outcome.svm_c,
            seed: ctx.seed(),
        },
        subjects: outcome.subjects,
        inputs,
        outputs,
    };
    let path = ctx.out.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(format!(
        "{}: {} subjects, {} files written to {}",
        cli.command.name(),
        manifest.subjects.len(),
        n_outputs + 1,
        ctx.out.display()
    ))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                std::process::exit(0);
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("bci-predict: usage error: {}", first.trim_start_matches("error: "));
            std::process::exit(CliError::Usage(String::new()).exit_code());
        }
    };
    match run(cli) {
        Ok(line) => eprintln!("bci-predict: {line}"),
        Err(e) => {
            eprintln!("bci-predict: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
