use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use svc_forge::BitDepth;

#[derive(Debug, Parser)]
#[command(name = "svc-forge", version, about = "Deterministic augmentation for singing-voice-conversion training data")]
pub struct Cli {
    /// Seed for every random draw (`run` uses it as the master seed).
    #[arg(long, global = true, env = "SVC_FORGE_SEED")]
    pub seed: Option<u64>,

    /// Pipeline configuration JSON; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract a YIN F0 contour from a WAV file.
    ExtractF0(ExtractF0Args),
    /// Apply seeded jitter/glide/jump segments to an F0 contour.
    PerturbF0(PerturbF0Args),
    /// Run the harmony/echo/reverb chain on a WAV file.
    Fx(FxArgs),
    /// Synthesize a harmonic-plus-noise excitation from an F0 contour.
    Excite(ExciteArgs),
    /// Generate augmented training pairs for a corpus.
    Run(RunArgs),
    /// Summarize a manifest against the configured probabilities.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct ExtractF0Args {
    /// Input WAV file.
    #[arg(long = "in", value_name = "WAV")]
    pub input: PathBuf,
    /// Output F0 contour JSON.
    #[arg(long, value_name = "JSON")]
    pub out: PathBuf,
    /// Lowest candidate F0 in Hz [default: 50].
    #[arg(long)]
    pub fmin: Option<f64>,
    /// Highest candidate F0 in Hz [default: 1100].
    #[arg(long)]
    pub fmax: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct PerturbProbs {
    /// Per-segment jitter probability [default: 0.15].
    #[arg(long)]
    pub p_jit: Option<f64>,
    /// Per-segment glide probability [default: 0.15].
    #[arg(long)]
    pub p_gld: Option<f64>,
    /// Per-segment jump probability [default: 0.2].
    #[arg(long)]
    pub p_jmp: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct EffectProbs {
    /// Harmony trigger probability [default: 0.3].
    #[arg(long)]
    pub p_h: Option<f64>,
    /// Echo trigger probability [default: 0.4].
    #[arg(long)]
    pub p_e: Option<f64>,
    /// Reverb trigger probability [default: 0.4].
    #[arg(long)]
    pub p_r: Option<f64>,
    /// Harmony wet mix [default: 0.4].
    #[arg(long)]
    pub mix_h: Option<f64>,
    /// Echo wet mix [default: 0.35].
    #[arg(long)]
    pub mix_e: Option<f64>,
    /// Reverb wet mix [default: 0.5].
    #[arg(long)]
    pub mix_r: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PerturbF0Args {
    /// Input F0 contour JSON.
    #[arg(long = "in", value_name = "JSON")]
    pub input: PathBuf,
    /// Output F0 contour JSON.
    #[arg(long, value_name = "JSON")]
    pub out: PathBuf,
    /// Also write the segment plan here.
    #[arg(long, value_name = "JSON")]
    pub plan_out: Option<PathBuf>,
    #[command(flatten)]
    pub probs: PerturbProbs,
}

#[derive(Debug, Args)]
pub struct FxArgs {
    /// Input WAV file.
    #[arg(long = "in", value_name = "WAV")]
    pub input: PathBuf,
    /// Output WAV file.
    #[arg(long, value_name = "WAV")]
    pub out: PathBuf,
    /// Force an effect on instead of drawing it: `harmony=SEMITONES`,
    /// `echo=DELAY_S[:FEEDBACK]` or `reverb=RT60_S`. Repeatable; when given,
    /// only forced effects run.
    #[arg(long, value_name = "EFFECT=VALUE")]
    pub force: Vec<String>,
    #[command(flatten)]
    pub probs: EffectProbs,
    /// Output sample format: 16, 24 or float32 [default: float32].
    #[arg(long)]
    pub bit_depth: Option<BitDepth>,
    /// Also write the effect trace here.
    #[arg(long, value_name = "JSON")]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExciteArgs {
    /// F0 contour JSON.
    #[arg(long, value_name = "JSON")]
    pub f0: PathBuf,
    /// Output WAV file.
    #[arg(long, value_name = "WAV")]
    pub out: PathBuf,
    /// Number of harmonics H.
    #[arg(long, default_value_t = 8)]
    pub harmonics: usize,
    /// Sine amplitude.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Unvoiced noise standard deviation.
    #[arg(long, default_value_t = 0.003)]
    pub sigma: f64,
    /// Write the voiced mask as a JSON array of 0/1.
    #[arg(long, value_name = "JSON")]
    pub mask_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Input directory (searched recursively for .wav) or WAV files.
    #[arg(long = "in", value_name = "PATH", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Output directory; defaults to `output_dir` from the config.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads [default: available cores].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output sample format: 16, 24 or float32 [default: float32].
    #[arg(long)]
    pub bit_depth: Option<BitDepth>,
    #[command(flatten)]
    pub perturb: PerturbProbs,
    #[command(flatten)]
    pub effects: EffectProbs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Manifest written by `run`.
    #[arg(value_name = "MANIFEST")]
    pub manifest: PathBuf,
}
