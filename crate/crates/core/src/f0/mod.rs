//! Frame-rate F0 contours: extraction from clean audio and the jitter,
//! glide and jump perturbation operators.

mod perturb;
mod yin;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::FrameSpec;

pub use perturb::{
    apply_glide, apply_jitter, apply_jump, glide_with_offset, jitter_with, jump_with_offset,
    perturb_f0, plan_segments, voiced_regions, JitterParams, PerturbationConfig, Segment,
    SegmentKind, SegmentParams, SegmentPlan,
};
pub use yin::{extract_f0, F0Range, YinDetector, YIN_THRESHOLD};

#[derive(Debug, Error)]
pub enum F0Error {
    #[error("waveform has {samples} samples, shorter than one {window}-sample analysis window")]
    TooShort { samples: usize, window: usize },
    #[error("invalid F0 range [{0}, {1}] Hz for this sample rate")]
    InvalidRange(f64, f64),
    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
    #[error("invalid F0 contour: {0}")]
    InvalidContour(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed contour JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Pitch track in Hz, one value per analysis frame; `0.0` marks unvoiced frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ContourFile", into = "ContourFile")]
pub struct F0Contour {
    values: Vec<f64>,
    frame_spec: FrameSpec,
}

/// On-disk JSON layout.
#[derive(Serialize, Deserialize)]
struct ContourFile {
    sample_rate: u32,
    hop_size: usize,
    fft_size: usize,
    values_hz: Vec<f64>,
}

impl TryFrom<ContourFile> for F0Contour {
    type Error = F0Error;

    fn try_from(f: ContourFile) -> Result<Self, F0Error> {
        F0Contour::new(
            f.values_hz,
            FrameSpec {
                fft_size: f.fft_size,
                hop_size: f.hop_size,
                sample_rate: f.sample_rate,
            },
        )
    }
}

impl From<F0Contour> for ContourFile {
    fn from(c: F0Contour) -> Self {
        ContourFile {
            sample_rate: c.frame_spec.sample_rate,
            hop_size: c.frame_spec.hop_size,
            fft_size: c.frame_spec.fft_size,
            values_hz: c.values,
        }
    }
}

impl F0Contour {
    pub fn new(values: Vec<f64>, frame_spec: FrameSpec) -> Result<Self, F0Error> {
        if let Some(v) = frame_spec.violations().into_iter().next() {
            return Err(F0Error::InvalidContour(v));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(F0Error::InvalidContour(format!(
                "frame {i} has value {} (must be finite and >= 0)",
                values[i]
            )));
        }
        Ok(Self { values, frame_spec })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frame_spec(&self) -> FrameSpec {
        self.frame_spec
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn voiced_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("contour serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), F0Error> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| F0Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, F0Error> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| F0Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| F0Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}
