//! Duration-preserving pitch shift (phase-vocoder time stretch followed by
//! linear-interpolation resampling) and the parallel-harmony effect built on it.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{mix, FxError};
use crate::audio::{Waveform, DEFAULT_FFT_SIZE, DEFAULT_HOP_SIZE};

pub const MAX_INTERVAL_SEMITONES: f64 = 12.0;

fn wrap_phase(p: f64) -> f64 {
    p - 2.0 * PI * ((p + PI) / (2.0 * PI)).floor()
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Local magnitude maxima over a ±2 bin neighbourhood.
fn find_peaks(mag: &[f64]) -> Vec<usize> {
    let n = mag.len();
    (0..n)
        .filter(|&k| {
            mag[k] > 0.0
                && (k.saturating_sub(2)..(k + 3).min(n))
                    .all(|j| j == k || (j < k && mag[j] < mag[k]) || (j > k && mag[j] <= mag[k]))
        })
        .collect()
}

/// Stretches `x` in time by `synthesis_hop / analysis_hop` without changing pitch.
fn time_stretch(x: &[f64], fft_size: usize, analysis_hop: usize, synthesis_hop: usize) -> Vec<f64> {
    let window = hann(fft_size);
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(fft_size);
    let inverse = planner.plan_fft_inverse(fft_size);

    let frames = if x.len() >= fft_size {
        (x.len() - fft_size) / analysis_hop + 1
    } else {
        0
    };
    let out_len = frames.saturating_sub(1) * synthesis_hop + fft_size;
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];

    let bins = fft_size / 2 + 1;
    let mut prev_phase = vec![0.0; bins];
    let mut synth_phase = vec![0.0; bins];
    let mut mag = vec![0.0; bins];
    let mut phase = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); fft_size];

    for m in 0..frames {
        let start = m * analysis_hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(x[start + i] * window[i], 0.0);
        }
        forward.process(&mut buf);

        for k in 0..bins {
            let (m_k, p_k) = buf[k].to_polar();
            mag[k] = m_k;
            phase[k] = p_k;
        }
        if m == 0 {
            synth_phase.copy_from_slice(&phase);
        } else {
            // Identity phase locking: peaks advance by their own instantaneous
            // frequency, every other bin keeps its analysis offset to the
            // nearest peak so main lobes stay coherent.
            let peaks = find_peaks(&mag);
            let mut advanced = synth_phase.clone();
            for &p in &peaks {
                let omega = 2.0 * PI * p as f64 / fft_size as f64;
                let deviation = wrap_phase(phase[p] - prev_phase[p] - omega * analysis_hop as f64);
                let freq = omega + deviation / analysis_hop as f64;
                advanced[p] = wrap_phase(synth_phase[p] + freq * synthesis_hop as f64);
            }
            if peaks.is_empty() {
                for k in 0..bins {
                    let omega = 2.0 * PI * k as f64 / fft_size as f64;
                    advanced[k] = wrap_phase(synth_phase[k] + omega * synthesis_hop as f64);
                }
            } else {
                let mut region = 0;
                for k in 0..bins {
                    while region + 1 < peaks.len() && k > (peaks[region] + peaks[region + 1]) / 2 {
                        region += 1;
                    }
                    let p = peaks[region];
                    if k != p {
                        advanced[k] = wrap_phase(advanced[p] + phase[k] - phase[p]);
                    }
                }
            }
            synth_phase = advanced;
        }
        prev_phase.copy_from_slice(&phase);
        for k in 0..bins {
            buf[k] = Complex::from_polar(mag[k], synth_phase[k]);
        }
        for k in bins..fft_size {
            buf[k] = buf[fft_size - k].conj();
        }
        inverse.process(&mut buf);

        let at = m * synthesis_hop;
        for i in 0..fft_size {
            out[at + i] += buf[i].re / fft_size as f64 * window[i];
            norm[at + i] += window[i] * window[i];
        }
    }
    let floor = 1e-3;
    for (y, w) in out.iter_mut().zip(&norm) {
        *y = if *w > floor { *y / w } else { 0.0 };
    }
    out
}

/// Shifts pitch by `semitones` while keeping `x.len()` samples.
pub fn pitch_shift(x: &[f64], semitones: f64, fft_size: usize, hop_size: usize) -> Vec<f64> {
    if semitones == 0.0 || x.is_empty() {
        return x.to_vec();
    }
    let ratio = (semitones / 12.0).exp2();
    let synthesis_hop = ((hop_size as f64 * ratio).round() as usize).max(1);
    let effective = synthesis_hop as f64 / hop_size as f64;

    let pad = fft_size;
    let mut padded = vec![0.0; pad];
    padded.extend_from_slice(x);
    padded.extend(std::iter::repeat_n(0.0, pad + fft_size));
    let stretched = time_stretch(&padded, fft_size, hop_size, synthesis_hop);

    (0..x.len())
        .map(|i| {
            let pos = (i + pad) as f64 * effective;
            let j = pos.floor() as usize;
            let frac = pos - j as f64;
            let a = stretched.get(j).copied().unwrap_or(0.0);
            let b = stretched.get(j + 1).copied().unwrap_or(0.0);
            a + frac * (b - a)
        })
        .collect()
}

/// `(1−mix)·x + mix·pitch_shift(x, interval)`; output length equals input length.
pub fn apply_harmony(w: &Waveform, interval_semitones: f64, mix_ratio: f64) -> Result<Waveform, FxError> {
    if !(..=MAX_INTERVAL_SEMITONES).contains(&interval_semitones.abs()) {
        return Err(FxError::InvalidParameter(format!(
            "harmony interval must be within ±12 semitones (got {interval_semitones})"
        )));
    }
    super::check_mix(mix_ratio)?;
    if mix_ratio == 0.0 {
        return Ok(w.clone());
    }
    let shifted = pitch_shift(&w.to_f64(), interval_semitones, DEFAULT_FFT_SIZE, DEFAULT_HOP_SIZE);
    Ok(mix(w, &shifted, mix_ratio))
}
