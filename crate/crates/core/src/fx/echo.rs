use super::{mix, FxError};
use crate::audio::Waveform;

/// Feedback echo: `wet[n] = g·(x[n−D] + wet[n−D])`, i.e. taps `g^k` at
/// `k·D` for `k ≥ 1`. Output is `(1−mix)·x + mix·wet`, truncated to the
/// input length.
pub fn apply_echo(w: &Waveform, delay_s: f64, feedback: f64, mix_ratio: f64) -> Result<Waveform, FxError> {
    if !(0.0..1.0).contains(&feedback) {
        return Err(FxError::InvalidParameter(format!(
            "echo feedback must be in [0, 1) (got {feedback})"
        )));
    }
    let delay = (delay_s * f64::from(w.sample_rate())).round();
    if !(1.0..).contains(&delay) {
        return Err(FxError::InvalidParameter(format!(
            "echo delay {delay_s} s is shorter than one sample"
        )));
    }
    super::check_mix(mix_ratio)?;
    if mix_ratio == 0.0 {
        return Ok(w.clone());
    }
    let delay = delay as usize;
    let dry = w.to_f64();
    let mut wet = vec![0.0; dry.len()];
    for n in delay..dry.len() {
        wet[n] = feedback * (dry[n - delay] + wet[n - delay]);
    }
    Ok(mix(w, &wet, mix_ratio))
}
