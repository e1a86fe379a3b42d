//! Training-pair generation: for each clean input, emit the augmented
//! waveform, the perturbed F0 contour and the untouched clean target.
//!
//! F0 is always extracted from the clean waveform; the wet effect chain
//! only ever touches the audio path.

mod batch;
mod stats;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{quantize_to_depth, AudioError, BitDepth, FrameSpec, Waveform};
use crate::f0::{extract_f0, perturb_f0, F0Contour, F0Error, F0Range, PerturbationConfig, SegmentPlan};
use crate::fx::{apply_chain, draw_chain, EffectChainConfig, EffectTrace, FxError};
use crate::seed;

pub use batch::{collect_inputs, run_batch, BatchInput, BatchReport, InputFile, ManifestEntry, SampleRecord, MANIFEST_NAME};
pub use stats::{stats_report, RateCheck, StatsReport};

/// Every violated constraint of a configuration, reported together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot parse config {path}: {source}")]
    ConfigParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("input sample rate {got} Hz violates the required {expected} Hz")]
    SampleRate { expected: u32, got: u32 },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    F0(#[from] F0Error),
    #[error(transparent)]
    Fx(#[from] FxError),
    #[error("no input files found")]
    NoInputs,
    #[error("cannot create output directory {path}: {source}")]
    OutputDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Workers(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub perturbation: PerturbationConfig,
    pub effects: EffectChainConfig,
    pub frame: FrameSpec,
    /// F0 search range `[min, max]` in Hz.
    pub f0_range: [f64; 2],
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
    pub bit_depth: BitDepth,
    pub require_sample_rate: Option<u32>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let range = F0Range::default();
        Self {
            perturbation: PerturbationConfig::default(),
            effects: EffectChainConfig::default(),
            frame: FrameSpec::default(),
            f0_range: [range.min_hz, range.max_hz],
            master_seed: 0,
            output_dir: None,
            bit_depth: BitDepth::default(),
            require_sample_rate: None,
        }
    }
}

impl PipelineConfig {
    /// All probabilities zero: augmented audio and F0 equal the clean inputs.
    pub fn dry() -> Self {
        Self {
            perturbation: PerturbationConfig::disabled(),
            effects: EffectChainConfig::disabled(),
            ..Self::default()
        }
    }

    pub fn f0_range(&self) -> F0Range {
        F0Range::new(self.f0_range[0], self.f0_range[1])
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = self.perturbation.violations();
        out.extend(self.effects.violations());
        out.extend(self.frame.violations().into_iter().map(|v| format!("frame: {v}")));
        out.extend(self.f0_range().violations(self.require_sample_rate));
        if self.require_sample_rate == Some(0) {
            out.push("require_sample_rate must be positive".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { violations })
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| PipelineError::ConfigParse {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// One generated training triple plus its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub augmented: Waveform,
    pub target: Waveform,
    pub f0_clean: F0Contour,
    pub f0_pert: F0Contour,
    pub segment_plan: SegmentPlan,
    pub effect_trace: EffectTrace,
    pub per_file_seed: u64,
}

/// Draws the perturbation plan and effect trace for an already-extracted
/// contour without rendering audio. Uses the same sub-seeds as
/// [`augment_sample`], so the results match a full run.
pub fn plan_sample(
    f0_clean: &F0Contour,
    cfg: &PipelineConfig,
    per_file_seed: u64,
) -> (F0Contour, SegmentPlan, EffectTrace) {
    let (f0_pert, plan) = perturb_f0(
        f0_clean,
        &cfg.perturbation,
        seed::derive(per_file_seed, seed::STREAM_F0),
    );
    let trace = draw_chain(&cfg.effects, seed::derive(per_file_seed, seed::STREAM_FX));
    (f0_pert, plan, trace)
}

/// Generates one training triple from a clean waveform.
///
/// The clean input is first quantized to the configured storage depth so the
/// written target is byte-identical to it and F0 replays exactly from disk.
pub fn augment_sample(
    x: &Waveform,
    cfg: &PipelineConfig,
    per_file_seed: u64,
) -> Result<AugmentedSample, PipelineError> {
    cfg.validate()?;
    if let Some(expected) = cfg.require_sample_rate {
        if x.sample_rate() != expected {
            return Err(PipelineError::SampleRate {
                expected,
                got: x.sample_rate(),
            });
        }
    }
    let target = quantize_to_depth(x, cfg.bit_depth);
    let f0_clean = extract_f0(&target, cfg.frame, cfg.f0_range())?;
    let (f0_pert, segment_plan) = perturb_f0(
        &f0_clean,
        &cfg.perturbation,
        seed::derive(per_file_seed, seed::STREAM_F0),
    );
    let (augmented, effect_trace) = apply_chain(
        &target,
        &cfg.effects,
        seed::derive(per_file_seed, seed::STREAM_FX),
    )?;
    Ok(AugmentedSample {
        augmented,
        target,
        f0_clean,
        f0_pert,
        segment_plan,
        effect_trace,
        per_file_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Sung-like test signal: 220 Hz tone with 0.1 s gaps every 0.5 s.
    fn phrase(secs: f64) -> Waveform {
        let sr = 44_100.0;
        let s: Vec<f64> = (0..(secs * sr) as usize)
            .map(|i| {
                let t = i as f64 / sr;
                if t % 0.5 < 0.4 {
                    0.5 * (2.0 * PI * 220.0 * t).sin()
                } else {
                    0.0
                }
            })
            .collect();
        Waveform::from_f64(&s, 44_100).unwrap()
    }

    #[test]
    fn default_config_valid_and_round_trips() {
        let cfg = PipelineConfig::default();
        assert!(cfg.validate().is_ok());
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(PipelineConfig::from_json(&json).unwrap(), cfg);
        let partial = PipelineConfig::from_json(r#"{"master_seed": 9, "bit_depth": "16"}"#).unwrap();
        assert_eq!(partial.master_seed, 9);
        assert_eq!(partial.bit_depth, BitDepth::Pcm16);
        assert_eq!(partial.effects, EffectChainConfig::default());
        assert!(PipelineConfig::from_json(r#"{"master_sed": 9}"#).is_err());
    }

    #[test]
    fn violations_are_collected() {
        let mut cfg = PipelineConfig::default();
        cfg.perturbation.p_jit = 0.6;
        cfg.perturbation.p_gld = 0.4;
        cfg.perturbation.p_jmp = 0.2;
        cfg.effects.mix_r = 1.5;
        cfg.f0_range = [500.0, 100.0];
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.violations.len(), 3, "{err}");
    }

    #[test]
    fn dry_step_is_identity() {
        let x = phrase(1.5);
        let out = augment_sample(&x, &PipelineConfig::dry(), 77).unwrap();
        assert_eq!(out.augmented, x);
        assert_eq!(out.target, x);
        assert_eq!(out.f0_pert, out.f0_clean);
    }

    #[test]
    fn step_is_deterministic_and_aligned() {
        let x = phrase(2.0);
        let mut cfg = PipelineConfig::default();
        cfg.effects.p_h = 0.9;
        cfg.effects.p_e = 0.9;
        cfg.effects.p_r = 0.9;
        for s in 0..4 {
            let a = augment_sample(&x, &cfg, s).unwrap();
            let b = augment_sample(&x, &cfg, s).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.augmented.len(), a.target.len());
            assert_eq!(a.f0_clean.len(), a.f0_pert.len());
            let (f0_pert, plan, trace) = plan_sample(&a.f0_clean, &cfg, s);
            assert_eq!((f0_pert, plan, trace), (a.f0_pert.clone(), a.segment_plan.clone(), a.effect_trace.clone()));
        }
    }

    #[test]
    fn f0_comes_from_clean_audio() {
        let x = phrase(1.5);
        let mut cfg = PipelineConfig::default();
        cfg.effects.p_h = 0.99;
        cfg.effects.p_e = 0.99;
        cfg.effects.p_r = 0.99;
        let out = augment_sample(&x, &cfg, 5).unwrap();
        let direct = extract_f0(&x, cfg.frame, cfg.f0_range()).unwrap();
        assert_eq!(out.f0_clean, direct);
    }

    #[test]
    fn sample_rate_policy_and_short_input() {
        let cfg = PipelineConfig {
            require_sample_rate: Some(48_000),
            ..PipelineConfig::default()
        };
        assert!(matches!(
            augment_sample(&phrase(0.5), &cfg, 0),
            Err(PipelineError::SampleRate { .. })
        ));
        let short = Waveform::silence(1000, 44_100).unwrap();
        assert!(matches!(
            augment_sample(&short, &PipelineConfig::default(), 0),
            Err(PipelineError::F0(F0Error::TooShort { .. }))
        ));
    }
}
