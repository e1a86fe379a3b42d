use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{PipelineConfig, PipelineError, SampleRecord};
use crate::f0::SegmentKind;

/// Observed rate against its configured probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCheck {
    pub name: String,
    pub count: usize,
    pub trials: usize,
    pub rate: f64,
    pub expected: f64,
    /// Binomial standard error at the expected probability.
    pub std_error: f64,
    pub flagged: bool,
}

impl RateCheck {
    fn new(name: &str, count: usize, trials: usize, expected: f64) -> Self {
        let rate = if trials == 0 {
            0.0
        } else {
            count as f64 / trials as f64
        };
        let std_error = if trials == 0 {
            0.0
        } else {
            (expected * (1.0 - expected) / trials as f64).sqrt()
        };
        let flagged = trials > 0 && (rate - expected).abs() > 3.0 * std_error + 1e-12;
        Self {
            name: name.to_string(),
            count,
            trials,
            rate,
            expected,
            std_error,
            flagged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub samples: usize,
    pub error_entries: usize,
    pub malformed_lines: usize,
    pub segments: usize,
    pub effects: Vec<RateCheck>,
    pub kinds: Vec<RateCheck>,
    /// Segment count per sample -> number of samples.
    pub segment_count_histogram: BTreeMap<usize, usize>,
    pub flags: Vec<String>,
    pub warnings: Vec<String>,
}

impl StatsReport {
    pub fn rate(&self, name: &str) -> Option<f64> {
        self.effects
            .iter()
            .chain(&self.kinds)
            .find(|c| c.name == name)
            .map(|c| c.rate)
    }
}

/// Summarizes a manifest: effect activation rates, perturbation-kind
/// frequencies and the segment-count histogram, flagging any rate more than
/// three binomial standard errors from `expected`. Malformed lines are
/// counted, not fatal.
pub fn stats_report(
    manifest: impl AsRef<Path>,
    expected: &PipelineConfig,
) -> Result<StatsReport, PipelineError> {
    let manifest = manifest.as_ref();
    let text = fs::read_to_string(manifest).map_err(|source| PipelineError::Io {
        path: manifest.to_path_buf(),
        source,
    })?;

    let mut samples = 0usize;
    let mut error_entries = 0usize;
    let mut malformed_lines = 0usize;
    let mut fired = [0usize; 3];
    let mut kind_counts = [0usize; 4];
    let mut histogram = BTreeMap::new();

    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let Ok(value) = serde_json::from_str::<serde_json::Value>(line) else {
            malformed_lines += 1;
            continue;
        };
        if value.get("error").is_some() {
            error_entries += 1;
            continue;
        }
        let Ok(record) = serde_json::from_value::<SampleRecord>(value) else {
            malformed_lines += 1;
            continue;
        };
        samples += 1;
        let t = &record.effect_trace;
        for (slot, on) in fired
            .iter_mut()
            .zip([t.harmony.applied, t.echo.applied, t.reverb.applied])
        {
            *slot += usize::from(on);
        }
        for seg in &record.segment_plan.segments {
            let idx = SegmentKind::ALL.iter().position(|k| *k == seg.kind).unwrap_or(3);
            kind_counts[idx] += 1;
        }
        *histogram.entry(record.segment_plan.segments.len()).or_insert(0) += 1;
    }

    let fx = &expected.effects;
    let effects = vec![
        RateCheck::new("harmony", fired[0], samples, fx.p_h),
        RateCheck::new("echo", fired[1], samples, fx.p_e),
        RateCheck::new("reverb", fired[2], samples, fx.p_r),
    ];
    let segments: usize = kind_counts.iter().sum();
    let p = &expected.perturbation;
    let kinds = SegmentKind::ALL
        .iter()
        .zip([p.p_jit, p.p_gld, p.p_jmp, p.p_none()])
        .zip(kind_counts)
        .map(|((k, e), c)| RateCheck::new(k.name(), c, segments, e))
        .collect::<Vec<_>>();

    let flags = effects
        .iter()
        .chain(&kinds)
        .filter(|c| c.flagged)
        .map(|c| {
            format!(
                "{} rate {:.4} deviates from {:.4} by more than 3 standard errors ({:.4})",
                c.name, c.rate, c.expected, c.std_error
            )
        })
        .collect();
    let mut warnings = Vec::new();
    if samples == 0 {
        warnings.push("manifest contains no sample records".to_string());
    }
    if malformed_lines > 0 {
        warnings.push(format!("{malformed_lines} malformed manifest line(s) skipped"));
    }
    Ok(StatsReport {
        samples,
        error_entries,
        malformed_lines,
        segments,
        effects,
        kinds,
        segment_count_histogram: histogram,
        flags,
        warnings,
    })
}
