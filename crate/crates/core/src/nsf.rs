//! Harmonic-plus-noise source excitation driven by an F0 contour.
//!
//! Voiced samples carry `tanh(Σ_j W[j]·α·sin(φ_j) + b)` where
//! `φ_j = 2π·j·Σ_{u≤t} f0(u)/fs` is a cumulative (phase-continuous)
//! phase; unvoiced samples carry Gaussian noise. The merge projection is
//! fixed, never trained.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioError, Waveform, DEFAULT_SAMPLE_RATE};
use crate::f0::F0Contour;
use crate::seed;

#[derive(Debug, Error)]
pub enum NsfError {
    #[error("contour has no frames")]
    EmptyContour,
    #[error("contour sample rate {contour} Hz differs from excitation rate {target} Hz")]
    SampleRateMismatch { contour: u32, target: u32 },
    #[error("expected {expected} harmonic channels, got {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("invalid NSF config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NsfConfig {
    pub num_harmonics: usize,
    pub sine_amplitude: f64,
    pub noise_std: f64,
    /// One weight per harmonic; empty means uniform `1/H`.
    pub merge_weights: Vec<f64>,
    pub merge_bias: f64,
    pub sample_rate: u32,
    /// Seeded random initial phase per harmonic instead of zero.
    pub random_phase: bool,
}

impl Default for NsfConfig {
    fn default() -> Self {
        Self {
            num_harmonics: 8,
            sine_amplitude: 0.1,
            noise_std: 0.003,
            merge_weights: Vec::new(),
            merge_bias: 0.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            random_phase: false,
        }
    }
}

impl NsfConfig {
    pub fn with_harmonics(num_harmonics: usize) -> Self {
        Self {
            num_harmonics,
            ..Self::default()
        }
    }

    /// Effective merge weights (uniform `1/H` when none were given).
    pub fn weights(&self) -> Vec<f64> {
        if self.merge_weights.is_empty() {
            vec![1.0 / self.num_harmonics as f64; self.num_harmonics]
        } else {
            self.merge_weights.clone()
        }
    }

    pub fn validate(&self) -> Result<(), NsfError> {
        let mut v = Vec::new();
        if self.num_harmonics == 0 {
            v.push("num_harmonics must be >= 1".to_string());
        }
        if !(0.0..).contains(&self.noise_std) {
            v.push(format!("noise_std must be >= 0 (got {})", self.noise_std));
        }
        if !self.merge_weights.is_empty() && self.merge_weights.len() != self.num_harmonics {
            v.push(format!(
                "merge_weights has {} entries for {} harmonics",
                self.merge_weights.len(),
                self.num_harmonics
            ));
        }
        if self.sample_rate == 0 {
            v.push("sample_rate must be positive".to_string());
        }
        if !self.sine_amplitude.is_finite() || !self.merge_bias.is_finite() {
            v.push("sine_amplitude and merge_bias must be finite".to_string());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(NsfError::InvalidConfig(v.join("; ")))
        }
    }
}

/// Frame-rate contour to a per-sample frequency track.
///
/// Frame `i` sits at sample `i·hop`. Between two voiced frames the track is
/// linearly interpolated; a voiced frame followed by an unvoiced one is held
/// for its hop; unvoiced frames give 0. Length is `frames·hop`.
pub fn upsample_f0(contour: &F0Contour, sample_rate: u32) -> Result<Vec<f64>, NsfError> {
    if contour.is_empty() {
        return Err(NsfError::EmptyContour);
    }
    let spec = contour.frame_spec();
    if spec.sample_rate != sample_rate {
        return Err(NsfError::SampleRateMismatch {
            contour: spec.sample_rate,
            target: sample_rate,
        });
    }
    let hop = spec.hop_size;
    let v = contour.values();
    let mut track = Vec::with_capacity(v.len() * hop);
    for i in 0..v.len() {
        let cur = v[i];
        let next = v.get(i + 1).copied().unwrap_or(0.0);
        for k in 0..hop {
            let f = if cur <= 0.0 {
                0.0
            } else if next > 0.0 {
                cur + (next - cur) * k as f64 / hop as f64
            } else {
                cur
            };
            track.push(f);
        }
    }
    Ok(track)
}

/// Cumulative phase of the fundamental in cycles, `Σ_{u≤t} f0(u)/fs`.
pub fn cumulative_cycles(f0_track: &[f64], sample_rate: u32) -> Vec<f64> {
    let fs = f64::from(sample_rate);
    let mut acc = 0.0;
    f0_track
        .iter()
        .map(|&f| {
            acc += f / fs;
            acc
        })
        .collect()
}

/// `H` sinusoid channels `α·sin(2π·j·cycles(t) + θ_j)`, zero where unvoiced
/// or where `j·f0 ≥ fs/2`.
pub fn harmonic_bank(f0_track: &[f64], cfg: &NsfConfig, seed: u64) -> Vec<Vec<f64>> {
    let nyquist = f64::from(cfg.sample_rate) / 2.0;
    let cycles = cumulative_cycles(f0_track, cfg.sample_rate);
    let mut rng = seed::rng(seed, 0);
    let offsets: Vec<f64> = (0..cfg.num_harmonics)
        .map(|_| {
            if cfg.random_phase {
                rng.random::<f64>()
            } else {
                0.0
            }
        })
        .collect();
    (1..=cfg.num_harmonics)
        .zip(offsets)
        .map(|(j, offset)| {
            let jf = j as f64;
            f0_track
                .iter()
                .zip(&cycles)
                .map(|(&f, &c)| {
                    if f <= 0.0 || jf * f >= nyquist {
                        0.0
                    } else {
                        // Reduce before scaling by 2π to keep precision on long inputs.
                        let phase = (jf * c + offset).fract();
                        cfg.sine_amplitude * (2.0 * std::f64::consts::PI * phase).sin()
                    }
                })
                .collect()
        })
        .collect()
}

/// `tanh(Σ_j W[j]·h_j(t) + b)` per sample.
pub fn merge_excitation(channels: &[Vec<f64>], cfg: &NsfConfig) -> Result<Vec<f64>, NsfError> {
    let weights = cfg.weights();
    if channels.len() != weights.len() {
        return Err(NsfError::ChannelMismatch {
            expected: weights.len(),
            got: channels.len(),
        });
    }
    let len = channels.first().map_or(0, Vec::len);
    Ok((0..len)
        .map(|t| {
            let s: f64 = channels.iter().zip(&weights).map(|(c, w)| w * c[t]).sum();
            (s + cfg.merge_bias).tanh()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Excitation {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub voiced_mask: Vec<bool>,
}

impl Excitation {
    pub fn to_waveform(&self) -> Result<Waveform, NsfError> {
        Ok(Waveform::new(self.samples.clone(), self.sample_rate)?)
    }

    /// Voiced mask as a JSON array of 0/1.
    pub fn mask_json(&self) -> String {
        let bits: Vec<u8> = self.voiced_mask.iter().map(|&v| u8::from(v)).collect();
        serde_json::to_string(&bits).expect("mask serializes")
    }
}

/// Harmonic excitation on voiced samples, clamped Gaussian noise elsewhere.
pub fn generate_excitation(
    contour: &F0Contour,
    cfg: &NsfConfig,
    seed: u64,
) -> Result<Excitation, NsfError> {
    cfg.validate()?;
    let track = upsample_f0(contour, cfg.sample_rate)?;
    let bank = harmonic_bank(&track, cfg, seed::derive(seed, 1));
    let harmonic = merge_excitation(&bank, cfg)?;
    let mut noise_rng = seed::rng(seed, 2);
    let noise = Normal::new(0.0, cfg.noise_std)
        .map_err(|e| NsfError::InvalidConfig(e.to_string()))?;

    let mut samples = Vec::with_capacity(track.len());
    let mut voiced_mask = Vec::with_capacity(track.len());
    for (&f, &h) in track.iter().zip(&harmonic) {
        let voiced = f > 0.0;
        let s = if voiced {
            h
        } else if cfg.noise_std > 0.0 {
            noise.sample(&mut noise_rng).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        samples.push(s as f32);
        voiced_mask.push(voiced);
    }
    Ok(Excitation {
        samples,
        sample_rate: cfg.sample_rate,
        voiced_mask,
    })
}
