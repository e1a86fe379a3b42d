//! Wet-sound simulation: harmony, echo and reverb, each triggered by an
//! independent seeded coin flip and applied in that fixed order.
//!
//! Every effect mixes as `(1−mix)·dry + mix·wet` and returns exactly as many
//! samples as it was given, so augmented audio stays aligned with the clean
//! target.

mod echo;
mod harmony;
mod reverb;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{peak_guard, Waveform};
use crate::seed;

pub use echo::apply_echo;
pub use harmony::{apply_harmony, pitch_shift, MAX_INTERVAL_SEMITONES};
pub use reverb::{apply_reverb, comb_feedback, SchroederReverb, ALLPASS_GAIN, COMB_DELAYS_MS};

#[derive(Debug, Error)]
pub enum FxError {
    #[error("invalid effect parameter: {0}")]
    InvalidParameter(String),
}

pub(crate) fn check_mix(m: f64) -> Result<(), FxError> {
    if (0.0..=1.0).contains(&m) {
        Ok(())
    } else {
        Err(FxError::InvalidParameter(format!(
            "mix ratio must be in [0, 1] (got {m})"
        )))
    }
}

/// `(1−m)·dry + m·wet`, with `wet` read up to `dry.len()` samples.
pub(crate) fn mix(dry: &Waveform, wet: &[f64], m: f64) -> Waveform {
    let samples: Vec<f32> = dry
        .samples()
        .iter()
        .zip(wet.iter().chain(std::iter::repeat(&0.0)))
        .map(|(&d, &w)| ((1.0 - m) * f64::from(d) + m * w) as f32)
        .collect();
    Waveform::new(samples, dry.sample_rate()).expect("mix of finite inputs is finite")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffectChainConfig {
    pub p_h: f64,
    pub p_e: f64,
    pub p_r: f64,
    pub mix_h: f64,
    pub mix_e: f64,
    pub mix_r: f64,
    /// Candidate harmony intervals in semitones, drawn uniformly.
    pub harmony_intervals: Vec<f64>,
    /// Echo delay range in seconds.
    pub echo_delay: [f64; 2],
    pub echo_feedback: [f64; 2],
    /// Reverb RT60 range in seconds.
    pub reverb_rt60: [f64; 2],
}

impl Default for EffectChainConfig {
    fn default() -> Self {
        Self {
            p_h: 0.3,
            p_e: 0.4,
            p_r: 0.4,
            mix_h: 0.4,
            mix_e: 0.35,
            mix_r: 0.5,
            harmony_intervals: vec![3.0, 4.0, 5.0, 7.0, -5.0],
            echo_delay: [0.08, 0.3],
            echo_feedback: [0.3, 0.6],
            reverb_rt60: [0.3, 1.2],
        }
    }
}

impl EffectChainConfig {
    pub fn disabled() -> Self {
        Self {
            p_h: 0.0,
            p_e: 0.0,
            p_r: 0.0,
            ..Self::default()
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, p) in [("p_h", self.p_h), ("p_e", self.p_e), ("p_r", self.p_r)] {
            if !(0.0..1.0).contains(&p) {
                out.push(format!("effects.{name} must be in [0, 1) (got {p})"));
            }
        }
        for (name, m) in [("mix_h", self.mix_h), ("mix_e", self.mix_e), ("mix_r", self.mix_r)] {
            if !(0.0..=1.0).contains(&m) {
                out.push(format!("effects.{name} must be in [0, 1] (got {m})"));
            }
        }
        if self.harmony_intervals.is_empty() {
            out.push("effects.harmony_intervals must not be empty".to_string());
        }
        if let Some(bad) = self
            .harmony_intervals
            .iter()
            .find(|i| !(..=MAX_INTERVAL_SEMITONES).contains(&i.abs()))
        {
            out.push(format!(
                "effects.harmony_intervals must lie within ±12 semitones (got {bad})"
            ));
        }
        let [dlo, dhi] = self.echo_delay;
        if !(dlo > 0.0 && dlo <= dhi) {
            out.push(format!(
                "effects.echo_delay must satisfy 0 < lo <= hi (got [{dlo}, {dhi}])"
            ));
        }
        let [glo, ghi] = self.echo_feedback;
        if !(glo >= 0.0 && glo <= ghi && ghi < 1.0) {
            out.push(format!(
                "effects.echo_feedback must satisfy 0 <= lo <= hi < 1 (got [{glo}, {ghi}])"
            ));
        }
        let [rlo, rhi] = self.reverb_rt60;
        if !(rlo > 0.0 && rlo <= rhi) {
            out.push(format!(
                "effects.reverb_rt60 must satisfy 0 < lo <= hi (got [{rlo}, {rhi}])"
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HarmonyTrace {
    pub applied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_semitones: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EchoTrace {
    pub applied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReverbTrace {
    pub applied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rt60_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<f64>,
    /// Seed of the reverb network's delay spread.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network_seed: Option<u64>,
}

/// Which effects fired, with the parameters drawn for each.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EffectTrace {
    pub harmony: HarmonyTrace,
    pub echo: EchoTrace,
    pub reverb: ReverbTrace,
    /// Applied effects in processing order.
    pub order: Vec<String>,
    pub seed: u64,
}

impl EffectTrace {
    pub fn any_applied(&self) -> bool {
        self.harmony.applied || self.echo.applied || self.reverb.applied
    }

    fn fill_order(&mut self) {
        self.order = [
            ("harmony", self.harmony.applied),
            ("echo", self.echo.applied),
            ("reverb", self.reverb.applied),
        ]
        .into_iter()
        .filter(|(_, on)| *on)
        .map(|(n, _)| n.to_string())
        .collect();
    }

    /// Trace that forces the given effects on with explicit parameters.
    pub fn forced(
        harmony: Option<(f64, f64)>,
        echo: Option<(f64, f64, f64)>,
        reverb: Option<(f64, f64)>,
        seed: u64,
    ) -> Self {
        let mut t = EffectTrace {
            seed,
            ..Default::default()
        };
        if let Some((interval, mix)) = harmony {
            t.harmony = HarmonyTrace {
                applied: true,
                interval_semitones: Some(interval),
                mix: Some(mix),
            };
        }
        if let Some((delay, feedback, mix)) = echo {
            t.echo = EchoTrace {
                applied: true,
                delay_s: Some(delay),
                feedback: Some(feedback),
                mix: Some(mix),
            };
        }
        if let Some((rt60, mix)) = reverb {
            t.reverb = ReverbTrace {
                applied: true,
                rt60_s: Some(rt60),
                mix: Some(mix),
                network_seed: Some(seed::derive(seed, 4)),
            };
        }
        t.fill_order();
        t
    }
}

/// Draws activations and parameters without touching audio.
///
/// The three coin flips come from their own stream, and each effect's
/// parameters from another, so activations are independent of each other
/// and of the parameter draws.
pub fn draw_chain(cfg: &EffectChainConfig, seed: u64) -> EffectTrace {
    let mut coins = seed::rng(seed, 0);
    let fires = [cfg.p_h, cfg.p_e, cfg.p_r].map(|p| coins.random::<f64>() < p);
    let mut trace = EffectTrace {
        seed,
        ..Default::default()
    };
    if fires[0] {
        let mut rng = seed::rng(seed, 1);
        let interval = cfg.harmony_intervals[rng.random_range(0..cfg.harmony_intervals.len())];
        trace.harmony = HarmonyTrace {
            applied: true,
            interval_semitones: Some(interval),
            mix: Some(cfg.mix_h),
        };
    }
    if fires[1] {
        let mut rng = seed::rng(seed, 2);
        let [dlo, dhi] = cfg.echo_delay;
        let [glo, ghi] = cfg.echo_feedback;
        trace.echo = EchoTrace {
            applied: true,
            delay_s: Some(rng.random_range(dlo..=dhi)),
            feedback: Some(rng.random_range(glo..=ghi)),
            mix: Some(cfg.mix_e),
        };
    }
    if fires[2] {
        let mut rng = seed::rng(seed, 3);
        let [lo, hi] = cfg.reverb_rt60;
        trace.reverb = ReverbTrace {
            applied: true,
            rt60_s: Some(rng.random_range(lo..=hi)),
            mix: Some(cfg.mix_r),
            network_seed: Some(seed::derive(seed, 4)),
        };
    }
    trace.fill_order();
    trace
}

fn missing(what: &str) -> FxError {
    FxError::InvalidParameter(format!("trace is missing {what}"))
}

/// Replays a trace: harmony, then echo, then reverb, then peak guard.
/// A trace with nothing applied returns the input unchanged.
pub fn render_chain(w: &Waveform, trace: &EffectTrace) -> Result<Waveform, FxError> {
    if !trace.any_applied() {
        return Ok(w.clone());
    }
    let mut out = w.clone();
    if trace.harmony.applied {
        let h = &trace.harmony;
        out = apply_harmony(
            &out,
            h.interval_semitones.ok_or_else(|| missing("harmony interval"))?,
            h.mix.ok_or_else(|| missing("harmony mix"))?,
        )?;
    }
    if trace.echo.applied {
        let e = &trace.echo;
        out = apply_echo(
            &out,
            e.delay_s.ok_or_else(|| missing("echo delay"))?,
            e.feedback.ok_or_else(|| missing("echo feedback"))?,
            e.mix.ok_or_else(|| missing("echo mix"))?,
        )?;
    }
    if trace.reverb.applied {
        let r = &trace.reverb;
        out = apply_reverb(
            &out,
            r.rt60_s.ok_or_else(|| missing("reverb rt60"))?,
            r.mix.ok_or_else(|| missing("reverb mix"))?,
            r.network_seed.unwrap_or(trace.seed),
        )?;
    }
    Ok(peak_guard(out))
}

/// Draws and applies the effect chain.
pub fn apply_chain(
    w: &Waveform,
    cfg: &EffectChainConfig,
    seed: u64,
) -> Result<(Waveform, EffectTrace), FxError> {
    let violations = cfg.violations();
    if !violations.is_empty() {
        return Err(FxError::InvalidParameter(violations.join("; ")));
    }
    let trace = draw_chain(cfg, seed);
    let out = render_chain(w, &trace)?;
    Ok((out, trace))
}
