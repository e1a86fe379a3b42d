//! Waveform value type, WAV I/O and level utilities.
//!
//! Samples are held as `f32` in `[-1, 1]` (nominally; processing may push
//! them outside and [`save_waveform`] clamps on write). Integer PCM is
//! normalized by `2^(bits-1)`, so a 16-bit `-32768` loads as exactly `-1.0`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;
pub const DEFAULT_FFT_SIZE: usize = 2048;
pub const DEFAULT_HOP_SIZE: usize = 512;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("unsupported codec in {path}: {detail}")]
    UnsupportedCodec { path: PathBuf, detail: String },
    #[error("{path} contains no audio")]
    Empty { path: PathBuf },
    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("refusing to write an empty waveform to {0}")]
    EmptyWaveform(PathBuf),
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("invalid frame spec: {0}")]
    FrameSpec(String),
}

/// Mono sample buffer with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::NonFinite { index });
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Builds a waveform from `f64` processing output.
    pub fn from_f64(samples: &[f64], sample_rate: u32) -> Result<Self, AudioError> {
        Self::new(samples.iter().map(|&s| s as f32).collect(), sample_rate)
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self, AudioError> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| f64::from(s)).collect()
    }
}

/// Analysis framing shared by F0 extraction and the phase vocoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameSpec {
    pub fft_size: usize,
    pub hop_size: usize,
    pub sample_rate: u32,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            fft_size: DEFAULT_FFT_SIZE,
            hop_size: DEFAULT_HOP_SIZE,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

impl FrameSpec {
    pub fn with_sample_rate(self, sample_rate: u32) -> Self {
        Self {
            sample_rate,
            ..self
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.fft_size < 4 {
            out.push(format!("fft_size must be at least 4 (got {})", self.fft_size));
        }
        if self.hop_size == 0 {
            out.push("hop_size must be positive".to_string());
        }
        if self.hop_size > self.fft_size {
            out.push(format!(
                "hop_size ({}) must not exceed fft_size ({})",
                self.hop_size, self.fft_size
            ));
        }
        if self.sample_rate == 0 {
            out.push("sample_rate must be positive".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<(), AudioError> {
        match self.violations().first() {
            Some(v) => Err(AudioError::FrameSpec(v.clone())),
            None => Ok(()),
        }
    }

    /// Number of analysis frames for `num_samples`, counting a zero-padded
    /// final partial frame. `None` when shorter than one window.
    pub fn frame_count(&self, num_samples: usize) -> Option<usize> {
        if num_samples < self.fft_size || self.hop_size == 0 {
            return None;
        }
        Some((num_samples - self.fft_size).div_ceil(self.hop_size) + 1)
    }

    /// Frame rate in frames per second.
    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop_size as f64
    }
}

/// Storage depth for written WAV files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum BitDepth {
    #[serde(rename = "16")]
    Pcm16,
    #[serde(rename = "24")]
    Pcm24,
    #[default]
    #[serde(rename = "float32")]
    Float32,
}

impl BitDepth {
    fn int_scale(self) -> Option<f64> {
        match self {
            BitDepth::Pcm16 => Some(32_768.0),
            BitDepth::Pcm24 => Some(8_388_608.0),
            BitDepth::Float32 => None,
        }
    }

    fn spec(self, sample_rate: u32) -> WavSpec {
        let (bits_per_sample, sample_format) = match self {
            BitDepth::Pcm16 => (16, SampleFormat::Int),
            BitDepth::Pcm24 => (24, SampleFormat::Int),
            BitDepth::Float32 => (32, SampleFormat::Float),
        };
        WavSpec {
            channels: 1,
            sample_rate,
            bits_per_sample,
            sample_format,
        }
    }

    /// Integer code written for `sample` at this depth (clamped, rounded).
    fn quantize_int(self, sample: f32, scale: f64) -> i32 {
        let max = scale - 1.0;
        let v = (f64::from(sample.clamp(-1.0, 1.0)) * scale).round();
        v.clamp(-scale, max) as i32
    }

    /// The value [`load_waveform`] would return after a write at this depth.
    pub fn quantize(self, sample: f32) -> f32 {
        match self.int_scale() {
            Some(scale) => (f64::from(self.quantize_int(sample, scale)) / scale) as f32,
            None => sample.clamp(-1.0, 1.0),
        }
    }
}

impl fmt::Display for BitDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BitDepth::Pcm16 => "16",
            BitDepth::Pcm24 => "24",
            BitDepth::Float32 => "float32",
        })
    }
}

impl FromStr for BitDepth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "16" => Ok(BitDepth::Pcm16),
            "24" => Ok(BitDepth::Pcm24),
            "float32" | "f32" | "32f" => Ok(BitDepth::Float32),
            other => Err(format!("unknown bit depth {other:?} (expected 16, 24 or float32)")),
        }
    }
}

/// Reads a RIFF/WAV file (PCM16, PCM24 or float32), averaging channels to mono.
pub fn load_waveform(path: impl AsRef<Path>) -> Result<Waveform, AudioError> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|source| match source {
        hound::Error::Unsupported => AudioError::UnsupportedCodec {
            path: path.to_path_buf(),
            detail: "unsupported WAV encoding".to_string(),
        },
        source => AudioError::Unreadable {
            path: path.to_path_buf(),
            source,
        },
    })?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels.max(1));
    let unreadable = |source| AudioError::Unreadable {
        path: path.to_path_buf(),
        source,
    };

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32_768.0))
            .collect::<Result<_, _>>()
            .map_err(unreadable)?,
        (SampleFormat::Int, 24) => reader
            .into_samples::<i32>()
            .map(|s| s.map(|v| f64::from(v) / 8_388_608.0))
            .collect::<Result<_, _>>()
            .map_err(unreadable)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(unreadable)?,
        (format, bits) => {
            return Err(AudioError::UnsupportedCodec {
                path: path.to_path_buf(),
                detail: format!("{format:?} {bits}-bit"),
            })
        }
    };

    let samples: Vec<f32> = if channels == 1 {
        interleaved.into_iter().map(|s| s as f32).collect()
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| (frame.iter().sum::<f64>() / channels as f64) as f32)
            .collect()
    };
    if samples.is_empty() {
        return Err(AudioError::Empty {
            path: path.to_path_buf(),
        });
    }
    Waveform::new(samples, spec.sample_rate).map_err(|_| AudioError::UnsupportedCodec {
        path: path.to_path_buf(),
        detail: "non-finite sample values".to_string(),
    })
}

/// Writes a mono WAV. Out-of-range samples are clamped to `[-1, 1]`.
pub fn save_waveform(
    w: &Waveform,
    path: impl AsRef<Path>,
    depth: BitDepth,
) -> Result<(), AudioError> {
    let path = path.as_ref();
    if w.is_empty() {
        return Err(AudioError::EmptyWaveform(path.to_path_buf()));
    }
    let unwritable = |source| AudioError::Unwritable {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = WavWriter::create(path, depth.spec(w.sample_rate())).map_err(unwritable)?;
    match depth.int_scale() {
        Some(scale) => {
            for &s in w.samples() {
                writer
                    .write_sample(depth.quantize_int(s, scale))
                    .map_err(unwritable)?;
            }
        }
        None => {
            for &s in w.samples() {
                writer.write_sample(s.clamp(-1.0, 1.0)).map_err(unwritable)?;
            }
        }
    }
    writer.finalize().map_err(unwritable)
}

/// Applies the quantization a save/load round trip at `depth` would apply.
pub fn quantize_to_depth(w: &Waveform, depth: BitDepth) -> Waveform {
    Waveform {
        samples: w.samples.iter().map(|&s| depth.quantize(s)).collect(),
        sample_rate: w.sample_rate,
    }
}

/// Scales the waveform down to unit peak if (and only if) it exceeds 1.
pub fn peak_guard(w: Waveform) -> Waveform {
    let peak = w.peak();
    if peak <= 1.0 {
        return w;
    }
    let gain = 1.0 / f64::from(peak);
    let samples = w
        .samples
        .iter()
        .map(|&s| ((f64::from(s) * gain) as f32).clamp(-1.0, 1.0))
        .collect();
    Waveform {
        samples,
        sample_rate: w.sample_rate,
    }
}
