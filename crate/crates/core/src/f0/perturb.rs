//! Segment planning and the three F0 perturbation operators.
//!
//! A plan places 2-4 (configurable) non-overlapping segments over voiced
//! regions and draws one kind per segment: jitter (vibrato-like sinusoidal
//! modulation in cents), glide (linear ramp in log-frequency) or jump
//! (constant offset with step edges), or none. Unvoiced frames are never
//! touched and frames outside every segment are returned bit-for-bit.

use std::f64::consts::PI;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::F0Contour;
use crate::seed;

/// Placement attempts per segment before settling for fewer segments.
const MAX_PLACEMENT_ATTEMPTS: usize = 50;
/// Child-seed offset for per-segment operator parameters.
const OPERATOR_STREAM_BASE: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationConfig {
    pub p_jit: f64,
    pub p_gld: f64,
    pub p_jmp: f64,
    pub seg_count_min: usize,
    pub seg_count_max: usize,
    /// Seconds.
    pub seg_dur_min: f64,
    pub seg_dur_max: f64,
    pub jitter_depth_cents: f64,
    /// Modulation rate range `[lo, hi]` in Hz.
    pub jitter_rate_hz: [f64; 2],
    pub glide_extent_semitones: f64,
    pub jump_extent_semitones: f64,
    /// Output values are clamped into `[lo, hi]` Hz.
    pub f0_clamp: [f64; 2],
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            p_jit: 0.15,
            p_gld: 0.15,
            p_jmp: 0.2,
            seg_count_min: 2,
            seg_count_max: 4,
            seg_dur_min: 0.2,
            seg_dur_max: 1.0,
            jitter_depth_cents: 50.0,
            jitter_rate_hz: [4.0, 7.0],
            glide_extent_semitones: 2.0,
            jump_extent_semitones: 3.0,
            f0_clamp: [40.0, 1300.0],
        }
    }
}

impl PerturbationConfig {
    /// Config with every perturbation probability set to zero.
    pub fn disabled() -> Self {
        Self {
            p_jit: 0.0,
            p_gld: 0.0,
            p_jmp: 0.0,
            ..Self::default()
        }
    }

    pub fn p_none(&self) -> f64 {
        1.0 - (self.p_jit + self.p_gld + self.p_jmp)
    }

    /// Every violated constraint, in a stable order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, p) in [("p_jit", self.p_jit), ("p_gld", self.p_gld), ("p_jmp", self.p_jmp)] {
            if !(0.0..1.0).contains(&p) {
                out.push(format!("perturbation.{name} must be in [0, 1) (got {p})"));
            }
        }
        let sum = self.p_jit + self.p_gld + self.p_jmp;
        if sum >= 1.0 {
            out.push(format!(
                "perturbation.p_jit + p_gld + p_jmp must be < 1 so that 'none' keeps positive probability (got {sum})"
            ));
        }
        if self.seg_count_min > self.seg_count_max {
            out.push(format!(
                "perturbation.seg_count_min ({}) must not exceed seg_count_max ({})",
                self.seg_count_min, self.seg_count_max
            ));
        }
        if !(self.seg_dur_min > 0.0 && self.seg_dur_min <= self.seg_dur_max) {
            out.push(format!(
                "perturbation segment durations must satisfy 0 < min <= max (got [{}, {}])",
                self.seg_dur_min, self.seg_dur_max
            ));
        }
        if !(0.0..).contains(&self.jitter_depth_cents) {
            out.push(format!(
                "perturbation.jitter_depth_cents must be >= 0 (got {})",
                self.jitter_depth_cents
            ));
        }
        let [rlo, rhi] = self.jitter_rate_hz;
        if !(rlo >= 0.0 && rlo <= rhi) {
            out.push(format!(
                "perturbation.jitter_rate_hz must satisfy 0 <= lo <= hi (got [{rlo}, {rhi}])"
            ));
        }
        if !(0.0..).contains(&self.glide_extent_semitones) {
            out.push(format!(
                "perturbation.glide_extent_semitones must be >= 0 (got {})",
                self.glide_extent_semitones
            ));
        }
        if !(1.0..).contains(&self.jump_extent_semitones) {
            out.push(format!(
                "perturbation.jump_extent_semitones must be >= 1 (got {})",
                self.jump_extent_semitones
            ));
        }
        let [clo, chi] = self.f0_clamp;
        if !(clo > 0.0 && clo < chi) {
            out.push(format!(
                "perturbation.f0_clamp must satisfy 0 < lo < hi (got [{clo}, {chi}])"
            ));
        }
        out
    }

    fn clamp(&self, hz: f64) -> f64 {
        hz.clamp(self.f0_clamp[0], self.f0_clamp[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Jitter,
    Glide,
    Jump,
    None,
}

impl SegmentKind {
    pub const ALL: [SegmentKind; 4] = [
        SegmentKind::Jitter,
        SegmentKind::Glide,
        SegmentKind::Jump,
        SegmentKind::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SegmentKind::Jitter => "jitter",
            SegmentKind::Glide => "glide",
            SegmentKind::Jump => "jump",
            SegmentKind::None => "none",
        }
    }

    fn draw<R: Rng>(rng: &mut R, cfg: &PerturbationConfig) -> Self {
        let u: f64 = rng.random();
        if u < cfg.p_jit {
            SegmentKind::Jitter
        } else if u < cfg.p_jit + cfg.p_gld {
            SegmentKind::Glide
        } else if u < cfg.p_jit + cfg.p_gld + cfg.p_jmp {
            SegmentKind::Jump
        } else {
            SegmentKind::None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterParams {
    pub depth_cents: f64,
    pub rate_hz: f64,
    pub phase_rad: f64,
}

/// Operator parameters actually drawn for a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SegmentParams {
    Jitter(JitterParams),
    Shift { offset_semitones: f64 },
}

/// Half-open frame range `[start_frame, end_frame)` with its perturbation kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_frame: usize,
    pub end_frame: usize,
    pub kind: SegmentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SegmentParams>,
}

impl Segment {
    pub fn new(start_frame: usize, end_frame: usize, kind: SegmentKind) -> Self {
        Self {
            start_frame,
            end_frame,
            kind,
            params: None,
        }
    }

    pub fn frames(&self) -> Range<usize> {
        self.start_frame..self.end_frame
    }

    pub fn len(&self) -> usize {
        self.end_frame.saturating_sub(self.start_frame)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn overlaps(&self, other: &Range<usize>) -> bool {
        self.start_frame < other.end && other.start < self.end_frame
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub segments: Vec<Segment>,
    pub rng_seed: u64,
}

impl SegmentPlan {
    pub fn count(&self, kind: SegmentKind) -> usize {
        self.segments.iter().filter(|s| s.kind == kind).count()
    }
}

/// Maximal runs of voiced (non-zero) frames.
pub fn voiced_regions(contour: &F0Contour) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &v) in contour.values().iter().enumerate() {
        match (v > 0.0, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(s..contour.len());
    }
    out
}

fn seconds_to_frames(secs: f64, contour: &F0Contour) -> usize {
    ((secs * contour.frame_spec().frame_rate()).round() as usize).max(1)
}

/// Places segments over voiced regions and draws a kind for each.
///
/// The segment count is uniform in `[seg_count_min, seg_count_max]`. Each
/// placement picks a voiced region at least `seg_dur_min` long, draws a
/// duration (clipped to the region) and a start inside it, and is retried
/// on overlap; after 50 failed attempts the segment is dropped.
pub fn plan_segments(contour: &F0Contour, cfg: &PerturbationConfig, seed: u64) -> SegmentPlan {
    let mut rng = seed::rng(seed, 0);
    let min_frames = seconds_to_frames(cfg.seg_dur_min, contour);
    let max_frames = seconds_to_frames(cfg.seg_dur_max, contour).max(min_frames);
    let feasible: Vec<Range<usize>> = voiced_regions(contour)
        .into_iter()
        .filter(|r| r.len() >= min_frames)
        .collect();
    let mut segments: Vec<Segment> = Vec::new();
    if feasible.is_empty() {
        return SegmentPlan {
            segments,
            rng_seed: seed,
        };
    }

    let count = rng.random_range(cfg.seg_count_min..=cfg.seg_count_max);
    for _ in 0..count {
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let region = &feasible[rng.random_range(0..feasible.len())];
            let dur = rng.random_range(min_frames..=max_frames).min(region.len());
            let start = rng.random_range(region.start..=region.end - dur);
            let candidate = start..start + dur;
            if segments.iter().any(|s| s.overlaps(&candidate)) {
                continue;
            }
            let kind = SegmentKind::draw(&mut rng, cfg);
            segments.push(Segment::new(candidate.start, candidate.end, kind));
            break;
        }
    }
    segments.sort_by_key(|s| s.start_frame);
    SegmentPlan {
        segments,
        rng_seed: seed,
    }
}

fn draw_jitter(cfg: &PerturbationConfig, seed: u64) -> JitterParams {
    let mut rng = seed::rng(seed, 0);
    let [lo, hi] = cfg.jitter_rate_hz;
    JitterParams {
        depth_cents: rng.random_range(0.0..=cfg.jitter_depth_cents),
        rate_hz: rng.random_range(lo..=hi),
        phase_rad: rng.random_range(0.0..2.0 * PI),
    }
}

fn draw_glide(cfg: &PerturbationConfig, seed: u64) -> f64 {
    let e = cfg.glide_extent_semitones;
    seed::rng(seed, 0).random_range(-e..=e)
}

fn draw_jump(cfg: &PerturbationConfig, seed: u64) -> f64 {
    let mut rng = seed::rng(seed, 0);
    let magnitude = rng.random_range(1.0..=cfg.jump_extent_semitones);
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

fn seg_range(contour: &F0Contour, seg: &Segment) -> Range<usize> {
    let end = seg.end_frame.min(contour.len());
    seg.start_frame.min(end)..end
}

/// Sinusoidal cents modulation `2^(d·sin(2πrt + φ)/1200)` over voiced frames.
pub fn jitter_with(
    contour: &F0Contour,
    seg: &Segment,
    params: JitterParams,
    cfg: &PerturbationConfig,
) -> F0Contour {
    let mut out = contour.clone();
    if params.depth_cents == 0.0 {
        return out;
    }
    let frame_rate = contour.frame_spec().frame_rate();
    let range = seg_range(contour, seg);
    let start = range.start;
    for k in range {
        let v = out.values()[k];
        if v > 0.0 {
            let t = (k - start) as f64 / frame_rate;
            let cents = params.depth_cents * (2.0 * PI * params.rate_hz * t + params.phase_rad).sin();
            out.values_mut()[k] = cfg.clamp(v * (cents / 1200.0).exp2());
        }
    }
    out
}

/// Log-frequency ramp from 0 at the first frame to `offset_semitones` at the last.
pub fn glide_with_offset(
    contour: &F0Contour,
    seg: &Segment,
    offset_semitones: f64,
    cfg: &PerturbationConfig,
) -> F0Contour {
    let mut out = contour.clone();
    if offset_semitones == 0.0 {
        return out;
    }
    let range = seg_range(contour, seg);
    let span = seg.len().saturating_sub(1);
    for k in range {
        let v = out.values()[k];
        if v > 0.0 {
            let semis = if span == 0 {
                0.0
            } else {
                offset_semitones * (k - seg.start_frame) as f64 / span as f64
            };
            out.values_mut()[k] = cfg.clamp(v * (semis / 12.0).exp2());
        }
    }
    out
}

/// Constant shift of every voiced frame in the segment.
pub fn jump_with_offset(
    contour: &F0Contour,
    seg: &Segment,
    offset_semitones: f64,
    cfg: &PerturbationConfig,
) -> F0Contour {
    let mut out = contour.clone();
    if offset_semitones == 0.0 {
        return out;
    }
    let ratio = (offset_semitones / 12.0).exp2();
    for k in seg_range(contour, seg) {
        let v = out.values()[k];
        if v > 0.0 {
            out.values_mut()[k] = cfg.clamp(v * ratio);
        }
    }
    out
}

pub fn apply_jitter(
    contour: &F0Contour,
    seg: &Segment,
    cfg: &PerturbationConfig,
    seed: u64,
) -> F0Contour {
    jitter_with(contour, seg, draw_jitter(cfg, seed), cfg)
}

pub fn apply_glide(
    contour: &F0Contour,
    seg: &Segment,
    cfg: &PerturbationConfig,
    seed: u64,
) -> F0Contour {
    glide_with_offset(contour, seg, draw_glide(cfg, seed), cfg)
}

pub fn apply_jump(
    contour: &F0Contour,
    seg: &Segment,
    cfg: &PerturbationConfig,
    seed: u64,
) -> F0Contour {
    jump_with_offset(contour, seg, draw_jump(cfg, seed), cfg)
}

/// Plans segments and applies each segment's operator. The returned plan
/// carries the parameters every operator drew.
pub fn perturb_f0(
    contour: &F0Contour,
    cfg: &PerturbationConfig,
    seed: u64,
) -> (F0Contour, SegmentPlan) {
    let mut plan = plan_segments(contour, cfg, seed);
    let mut out = contour.clone();
    for (idx, seg) in plan.segments.iter_mut().enumerate() {
        let op_seed = seed::derive(seed, OPERATOR_STREAM_BASE + idx as u64);
        match seg.kind {
            SegmentKind::None => {}
            SegmentKind::Jitter => {
                let p = draw_jitter(cfg, op_seed);
                out = jitter_with(&out, seg, p, cfg);
                seg.params = Some(SegmentParams::Jitter(p));
            }
            SegmentKind::Glide => {
                let offset = draw_glide(cfg, op_seed);
                out = glide_with_offset(&out, seg, offset, cfg);
                seg.params = Some(SegmentParams::Shift {
                    offset_semitones: offset,
                });
            }
            SegmentKind::Jump => {
                let offset = draw_jump(cfg, op_seed);
                out = jump_with_offset(&out, seg, offset, cfg);
                seg.params = Some(SegmentParams::Shift {
                    offset_semitones: offset,
                });
            }
        }
    }
    (out, plan)
}
