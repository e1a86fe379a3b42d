//! YIN pitch tracking: squared difference function computed through an FFT
//! cross-correlation, cumulative-mean normalization, absolute threshold and
//! parabolic refinement of the chosen lag.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{F0Contour, F0Error};
use crate::audio::{FrameSpec, Waveform};

pub const YIN_THRESHOLD: f64 = 0.1;

/// Frames quieter than this RMS are treated as silence.
const SILENCE_RMS: f64 = 1e-5;

/// Admissible F0 search range in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F0Range {
    pub min_hz: f64,
    pub max_hz: f64,
}

impl Default for F0Range {
    fn default() -> Self {
        Self {
            min_hz: 50.0,
            max_hz: 1100.0,
        }
    }
}

impl F0Range {
    pub fn new(min_hz: f64, max_hz: f64) -> Self {
        Self { min_hz, max_hz }
    }

    pub fn violations(&self, sample_rate: Option<u32>) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.min_hz > 0.0 && self.min_hz < self.max_hz) {
            out.push(format!(
                "f0 range must satisfy 0 < min < max (got [{}, {}])",
                self.min_hz, self.max_hz
            ));
        }
        if let Some(sr) = sample_rate {
            if self.max_hz >= f64::from(sr) / 2.0 {
                out.push(format!(
                    "f0 max {} Hz must be below Nyquist ({} Hz)",
                    self.max_hz,
                    f64::from(sr) / 2.0
                ));
            }
        }
        out
    }
}

/// Reusable per-frame YIN estimator for one frame layout.
pub struct YinDetector {
    spec: FrameSpec,
    range: F0Range,
    threshold: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    tau_min: usize,
    tau_max: usize,
}

impl YinDetector {
    pub fn new(spec: FrameSpec, range: F0Range) -> Result<Self, F0Error> {
        spec.validate()?;
        if !range.violations(Some(spec.sample_rate)).is_empty() {
            return Err(F0Error::InvalidRange(range.min_hz, range.max_hz));
        }
        let sr = f64::from(spec.sample_rate);
        let half = spec.fft_size / 2;
        let tau_min = ((sr / range.max_hz).floor() as usize).max(2);
        let tau_max = ((sr / range.min_hz).ceil() as usize).min(half - 1);
        if tau_min + 1 >= tau_max {
            return Err(F0Error::InvalidRange(range.min_hz, range.max_hz));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            spec,
            range,
            threshold: YIN_THRESHOLD,
            forward: planner.plan_fft_forward(spec.fft_size),
            inverse: planner.plan_fft_inverse(spec.fft_size),
            tau_min,
            tau_max,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    /// Cumulative-mean-normalized difference for lags `0..=tau_max`.
    /// `frame` must have exactly `fft_size` samples.
    fn normalized_difference(&self, frame: &[f64]) -> Vec<f64> {
        let n = self.spec.fft_size;
        let w = n / 2;

        let mut a: Vec<Complex<f64>> = (0..n)
            .map(|j| Complex::new(if j < w { frame[j] } else { 0.0 }, 0.0))
            .collect();
        let mut b: Vec<Complex<f64>> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.forward.process(&mut a);
        self.forward.process(&mut b);
        let mut cross: Vec<Complex<f64>> = a.iter().zip(&b).map(|(x, y)| x.conj() * y).collect();
        self.inverse.process(&mut cross);
        let scale = 1.0 / n as f64;

        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        for &x in frame {
            prefix.push(prefix.last().unwrap() + x * x);
        }
        let e0 = prefix[w];

        let mut cmnd = vec![1.0; self.tau_max + 1];
        let mut running = 0.0;
        for tau in 1..=self.tau_max {
            let e_tau = prefix[tau + w] - prefix[tau];
            let d = (e0 + e_tau - 2.0 * cross[tau].re * scale).max(0.0);
            running += d;
            cmnd[tau] = if running > 0.0 {
                d * tau as f64 / running
            } else {
                1.0
            };
        }
        cmnd
    }

    /// F0 of one frame in Hz, or 0 when unvoiced.
    pub fn estimate(&self, frame: &[f64]) -> f64 {
        let energy: f64 = frame.iter().map(|x| x * x).sum();
        if (energy / frame.len() as f64).sqrt() < SILENCE_RMS {
            return 0.0;
        }
        let cmnd = self.normalized_difference(frame);
        let mut tau = self.tau_min;
        let found = loop {
            if tau > self.tau_max {
                break None;
            }
            if cmnd[tau] < self.threshold {
                while tau < self.tau_max && cmnd[tau + 1] < cmnd[tau] {
                    tau += 1;
                }
                break Some(tau);
            }
            tau += 1;
        };
        let Some(tau) = found else {
            return 0.0;
        };

        let refined = if tau > 0 && tau < self.tau_max {
            let (l, c, r) = (cmnd[tau - 1], cmnd[tau], cmnd[tau + 1]);
            let denom = l - 2.0 * c + r;
            if denom.abs() > f64::EPSILON {
                tau as f64 + 0.5 * (l - r) / denom
            } else {
                tau as f64
            }
        } else {
            tau as f64
        };
        let f0 = f64::from(self.spec.sample_rate) / refined;
        if f0 >= self.range.min_hz && f0 <= self.range.max_hz {
            f0
        } else {
            0.0
        }
    }
}

/// Tracks F0 over `w` with one frame every `hop_size` samples. The last
/// partial frame is zero padded, so the contour has
/// `ceil((len - fft_size) / hop_size) + 1` frames. The sample rate in
/// `spec` is replaced by the waveform's own rate.
pub fn extract_f0(w: &Waveform, spec: FrameSpec, range: F0Range) -> Result<F0Contour, F0Error> {
    let spec = spec.with_sample_rate(w.sample_rate());
    spec.validate()?;
    let frames = spec.frame_count(w.len()).ok_or(F0Error::TooShort {
        samples: w.len(),
        window: spec.fft_size,
    })?;
    let detector = YinDetector::new(spec, range)?;
    let samples = w.to_f64();
    let mut frame = vec![0.0; spec.fft_size];
    let values = (0..frames)
        .map(|i| {
            let start = i * spec.hop_size;
            let end = (start + spec.fft_size).min(samples.len());
            frame.fill(0.0);
            frame[..end - start].copy_from_slice(&samples[start..end]);
            detector.estimate(&frame)
        })
        .collect();
    F0Contour::new(values, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::f64::consts::PI;

    fn sine(freq: f64, secs: f64, sr: u32, amp: f64) -> Waveform {
        let n = (secs * f64::from(sr)) as usize;
        let s: Vec<f64> = (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / f64::from(sr)).sin())
            .collect();
        Waveform::from_f64(&s, sr).unwrap()
    }

    #[test]
    fn sine_220_recovered_within_one_percent() {
        let c = extract_f0(&sine(220.0, 2.0, 44_100, 0.5), FrameSpec::default(), F0Range::default())
            .unwrap();
        assert_eq!(c.len(), FrameSpec::default().frame_count(88_200).unwrap());
        let voiced: Vec<f64> = c.values().iter().copied().filter(|&v| v > 0.0).collect();
        assert!(voiced.len() >= c.len() - 1, "{} of {}", voiced.len(), c.len());
        for v in voiced {
            assert!((v - 220.0).abs() / 220.0 < 0.01, "{v}");
        }
    }

    #[test]
    fn silence_is_unvoiced() {
        let w = Waveform::silence(44_100, 44_100).unwrap();
        let c = extract_f0(&w, FrameSpec::default(), F0Range::default()).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn white_noise_mostly_unvoiced() {
        let mut rng = crate::seed::rng(1234, 0);
        let s: Vec<f64> = (0..88_200).map(|_| rng.random_range(-0.1..0.1)).collect();
        let w = Waveform::from_f64(&s, 44_100).unwrap();
        let c = extract_f0(&w, FrameSpec::default(), F0Range::default()).unwrap();
        let unvoiced = c.values().iter().filter(|&&v| v == 0.0).count();
        assert!(unvoiced as f64 >= 0.95 * c.len() as f64, "{unvoiced}/{}", c.len());
    }

    #[test]
    fn too_short_is_an_error() {
        let w = Waveform::silence(2047, 44_100).unwrap();
        assert!(matches!(
            extract_f0(&w, FrameSpec::default(), F0Range::default()),
            Err(F0Error::TooShort { .. })
        ));
    }

    #[test]
    fn values_stay_in_range() {
        let range = F0Range::new(300.0, 1000.0);
        let c = extract_f0(&sine(220.0, 0.5, 44_100, 0.5), FrameSpec::default(), range).unwrap();
        assert!(c
            .values()
            .iter()
            .all(|&v| v == 0.0 || (300.0..=1000.0).contains(&v)));
    }

    #[test]
    fn native_rate_is_used() {
        let c = extract_f0(&sine(200.0, 1.0, 16_000, 0.5), FrameSpec::default(), F0Range::default())
            .unwrap();
        assert_eq!(c.frame_spec().sample_rate, 16_000);
        let voiced: Vec<f64> = c.values().iter().copied().filter(|&v| v > 0.0).collect();
        assert!(!voiced.is_empty());
        assert!(voiced.iter().all(|v| (v - 200.0).abs() < 2.0));
    }

    #[test]
    fn bad_range_rejected() {
        let w = sine(200.0, 0.2, 44_100, 0.5);
        assert!(extract_f0(&w, FrameSpec::default(), F0Range::new(500.0, 100.0)).is_err());
        assert!(extract_f0(&w, FrameSpec::default(), F0Range::new(50.0, 30_000.0)).is_err());
    }
}
