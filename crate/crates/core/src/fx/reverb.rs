//! Schroeder reverberator: four parallel feedback combs with mutually prime
//! delays, followed by two series allpass diffusers.

use rand::Rng;

use super::{mix, FxError};
use crate::audio::{peak_guard, Waveform};
use crate::seed;

/// Nominal comb delays in milliseconds.
pub const COMB_DELAYS_MS: [f64; 4] = [29.7, 37.1, 41.1, 43.7];
pub const ALLPASS_DELAYS_MS: [f64; 2] = [5.0, 1.7];
pub const ALLPASS_GAIN: f64 = 0.7;
/// Maximum relative deviation applied to seeded comb delays.
const COMB_SPREAD: f64 = 0.03;

/// Comb feedback giving a 60 dB decay in `rt60_s`: `10^(−3·delay/rt60)`.
pub fn comb_feedback(delay_s: f64, rt60_s: f64) -> f64 {
    10f64.powf(-3.0 * delay_s / rt60_s)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    ((ms * 1e-3 * f64::from(sample_rate)).round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchroederReverb {
    pub comb_delays: [usize; 4],
    pub comb_gains: [f64; 4],
    pub allpass_delays: [usize; 2],
    pub sample_rate: u32,
}

impl SchroederReverb {
    /// Network with the nominal delays (rounded, then made mutually prime).
    pub fn nominal(sample_rate: u32, rt60_s: f64) -> Self {
        Self::build(sample_rate, rt60_s, COMB_DELAYS_MS)
    }

    /// Network whose comb delays are spread up to ±3 % around nominal by `seed`.
    pub fn seeded(sample_rate: u32, rt60_s: f64, seed: u64) -> Self {
        let mut rng = seed::rng(seed, 0);
        let ms = COMB_DELAYS_MS.map(|d| d * (1.0 + rng.random_range(-COMB_SPREAD..=COMB_SPREAD)));
        Self::build(sample_rate, rt60_s, ms)
    }

    fn build(sample_rate: u32, rt60_s: f64, comb_ms: [f64; 4]) -> Self {
        let mut comb_delays = [0usize; 4];
        for i in 0..4 {
            let mut d = ms_to_samples(comb_ms[i], sample_rate).max(2);
            while comb_delays[..i].iter().any(|&p| p == d || gcd(p, d) != 1) {
                d += 1;
            }
            comb_delays[i] = d;
        }
        let sr = f64::from(sample_rate);
        Self {
            comb_delays,
            comb_gains: comb_delays.map(|d| comb_feedback(d as f64 / sr, rt60_s)),
            allpass_delays: ALLPASS_DELAYS_MS.map(|ms| ms_to_samples(ms, sample_rate)),
            sample_rate,
        }
    }

    /// Fully wet response, same length as `input`.
    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        let n = input.len();
        let mut sum = vec![0.0; n];
        for (&d, &g) in self.comb_delays.iter().zip(&self.comb_gains) {
            let mut y = vec![0.0; n];
            for i in 0..n {
                let fb = if i >= d { g * y[i - d] } else { 0.0 };
                y[i] = input[i] + fb;
                sum[i] += 0.25 * y[i];
            }
        }
        let mut signal = sum;
        for &m in &self.allpass_delays {
            let mut y = vec![0.0; n];
            for i in 0..n {
                let (xd, yd) = if i >= m { (signal[i - m], y[i - m]) } else { (0.0, 0.0) };
                y[i] = -ALLPASS_GAIN * signal[i] + xd + ALLPASS_GAIN * yd;
            }
            signal = y;
        }
        signal
    }
}

/// `(1−mix)·x + mix·schroeder(x)`, truncated to the input length and peak guarded.
pub fn apply_reverb(w: &Waveform, rt60_s: f64, mix_ratio: f64, seed: u64) -> Result<Waveform, FxError> {
    if !(rt60_s > 0.0 && rt60_s.is_finite()) {
        return Err(FxError::InvalidParameter(format!(
            "reverb rt60 must be positive (got {rt60_s})"
        )));
    }
    super::check_mix(mix_ratio)?;
    if mix_ratio == 0.0 {
        return Ok(w.clone());
    }
    let wet = SchroederReverb::seeded(w.sample_rate(), rt60_s, seed).process(&w.to_f64());
    Ok(peak_guard(mix(w, &wet, mix_ratio)))
}
