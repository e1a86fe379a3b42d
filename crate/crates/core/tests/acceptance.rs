//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use svc_forge::f0::{glide_with_offset, jump_with_offset, voiced_regions, Segment};
use svc_forge::fx::{apply_echo, apply_reverb, comb_feedback};
use svc_forge::nsf::merge_excitation;
use svc_forge::pipeline::{plan_sample, ManifestEntry, SampleRecord};
use svc_forge::seed::file_seed;
use svc_forge::{
    extract_f0, generate_excitation, load_waveform, run_batch, save_waveform, BatchInput, BitDepth,
    F0Contour, F0Range, FrameSpec, NsfConfig, PerturbationConfig, PipelineConfig, SegmentKind, Waveform,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SR: u32 = 44_100;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Contour with four 1.2 s voiced regions separated by short rests.
fn four_region_contour() -> F0Contour {
    let spec = FrameSpec::default();
    let region = (1.2 * spec.frame_rate()).ceil() as usize;
    let mut values = Vec::new();
    for r in 0..4 {
        values.extend(std::iter::repeat_n(0.0, 20));
        values.extend((0..region).map(|k| 200.0 + 40.0 * r as f64 + (k % 7) as f64));
    }
    values.extend(std::iter::repeat_n(0.0, 20));
    F0Contour::new(values, spec).unwrap()
}

/// Sung-like test take: tone with rests, pitch and length varying by index.
fn take(i: usize) -> Waveform {
    let sr = f64::from(SR);
    let secs = 0.6 + 0.1 * (i % 7) as f64;
    let f = 140.0 + 17.0 * (i % 23) as f64;
    let s: Vec<f64> = (0..(secs * sr) as usize)
        .map(|n| {
            let t = n as f64 / sr;
            if t % 0.3 < 0.24 {
                0.45 * (2.0 * PI * f * t).sin() + 0.1 * (4.0 * PI * f * t).sin()
            } else {
                0.0
            }
        })
        .collect();
    Waveform::from_f64(&s, SR).unwrap()
}

fn write_corpus(dir: &Path, n: usize, depth: BitDepth) {
    for i in 0..n {
        let sub = dir.join(format!("singer{}", i % 4));
        fs::create_dir_all(&sub).unwrap();
        save_waveform(&take(i), sub.join(format!("take{i:03}.wav")), depth).unwrap();
    }
}

fn records(entries: &[ManifestEntry]) -> Result<Vec<&SampleRecord>, String> {
    entries
        .iter()
        .map(|e| match e {
            ManifestEntry::Record(r) => Ok(r.as_ref()),
            ManifestEntry::Error { error, source } => Err(format!("{source}: {error}")),
        })
        .collect()
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.path().strip_prefix(root).unwrap().to_path_buf())
        .collect();
    out.sort();
    out
}

fn probability_fidelity() -> Outcome {
    const N: usize = 50_000;
    let started = Instant::now();
    let contour = four_region_contour();
    let cfg = PipelineConfig::default();
    let mut fired = [0usize; 3];
    let mut kinds = [0usize; 4];
    for i in 0..N {
        let seed = file_seed(cfg.master_seed, &format!("corpus/{i}.wav"));
        let (_, plan, trace) = plan_sample(&contour, &cfg, seed);
        for (slot, on) in fired
            .iter_mut()
            .zip([trace.harmony.applied, trace.echo.applied, trace.reverb.applied])
        {
            *slot += usize::from(on);
        }
        for s in &plan.segments {
            kinds[SegmentKind::ALL.iter().position(|k| *k == s.kind).unwrap()] += 1;
        }
    }
    let elapsed = started.elapsed();
    let segments: usize = kinds.iter().sum();
    let fx_rates = fired.map(|c| c as f64 / N as f64);
    let kind_rates = kinds.map(|c| c as f64 / segments as f64);
    for (name, rate, want) in [
        ("harmony", fx_rates[0], 0.30),
        ("echo", fx_rates[1], 0.40),
        ("reverb", fx_rates[2], 0.40),
        ("jitter", kind_rates[0], 0.15),
        ("glide", kind_rates[1], 0.15),
        ("jump", kind_rates[2], 0.20),
    ] {
        check((rate - want).abs() <= 0.01, || format!("{name} rate {rate:.4} vs {want}"))?;
    }
    check(elapsed <= Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{N} samples, fx {:.4}/{:.4}/{:.4}, kinds {:.4}/{:.4}/{:.4}/{:.4} over {segments} segments, {:.1}s",
        fx_rates[0],
        fx_rates[1],
        fx_rates[2],
        kind_rates[0],
        kind_rates[1],
        kind_rates[2],
        kind_rates[3],
        elapsed.as_secs_f64()
    ))
}

fn segment_count_law() -> Outcome {
    let contour = four_region_contour();
    let cfg = PipelineConfig::default();
    let p = &cfg.perturbation;
    let feasible = voiced_regions(&contour)
        .iter()
        .filter(|r| r.len() as f64 >= p.seg_dur_min * contour.frame_spec().frame_rate())
        .count();
    check(feasible >= 4, || format!("only {feasible} feasible regions"))?;
    let mut histogram = [0usize; 5];
    for i in 0..10_000u64 {
        let (_, plan, _) = plan_sample(&contour, &cfg, i);
        let n = plan.segments.len();
        check((2..=4).contains(&n), || format!("seed {i}: {n} segments"))?;
        histogram[n] += 1;
    }
    Ok(format!(
        "10000 samples, counts 2/3/4 = {}/{}/{}, 0 violations",
        histogram[2], histogram[3], histogram[4]
    ))
}

fn identity_pipeline() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    write_corpus(&input, 100, BitDepth::Float32);
    let out = dir.path().join("out");
    let report = run_batch(&BatchInput::Dir(input.clone()), &PipelineConfig::dry(), &out, 4)
        .map_err(|e| e.to_string())?;
    let recs = records(&report.entries)?;
    check(recs.len() == 100, || format!("{} records", recs.len()))?;
    for r in recs {
        let src = fs::read(input.join(&r.source_path)).unwrap();
        let aug = fs::read(out.join(&r.augmented_path)).unwrap();
        check(src == aug, || format!("{}: augmented differs from input", r.source_path))?;
        let f0 = fs::read(out.join(&r.f0_clean_path)).unwrap();
        let f0p = fs::read(out.join(&r.f0_pert_path)).unwrap();
        check(f0 == f0p, || format!("{}: F0_pert differs from F0", r.source_path))?;
        check(r.effect_trace.order.is_empty(), || format!("{}: effects fired", r.source_path))?;
    }
    Ok("100 files, augmented and F0_pert bit-identical to inputs".into())
}

fn echo_oracle() -> Outcome {
    let mut s = vec![0.0f32; 20_000];
    s[0] = 1.0;
    let w = Waveform::new(s, SR).unwrap();
    let out = apply_echo(&w, 4410.0 / f64::from(SR), 0.5, 0.35).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (n, &v) in out.samples().iter().enumerate() {
        let want = match n {
            0 => 0.65,
            n if n % 4410 == 0 => 0.35 * 0.5f64.powi((n / 4410) as i32),
            _ => 0.0,
        };
        worst = worst.max((f64::from(v) - want).abs());
    }
    check(worst <= 1e-6, || format!("max tap error {worst:e}"))?;
    Ok(format!("taps 0.65, 0.175, 0.0875, ... max error {worst:.1e}"))
}

fn reverb_decay() -> Outcome {
    let g = comb_feedback(0.0297, 0.6);
    check((g - 0.7104).abs() < 1e-4, || format!("comb feedback {g}"))?;
    let len = (0.7 * f64::from(SR)) as usize;
    let mut s = vec![0.0f32; len];
    s[0] = 1.0;
    let impulse = Waveform::new(s, SR).unwrap();
    let window = |x: &[f32], a: f64, b: f64| -> f64 {
        let (a, b) = ((a * f64::from(SR)) as usize, (b * f64::from(SR)) as usize);
        x[a..b].iter().map(|&v| f64::from(v).powi(2)).sum()
    };
    let mut drops = Vec::new();
    for seed in 1..=5u64 {
        let wet = apply_reverb(&impulse, 0.6, 1.0, seed).map_err(|e| e.to_string())?;
        let drop = 10.0 * (window(wet.samples(), 0.0, 0.05) / window(wet.samples(), 0.55, 0.65)).log10();
        check((55.0..=65.0).contains(&drop), || format!("seed {seed}: drop {drop:.2} dB"))?;
        drops.push(format!("{drop:.1}"));
    }
    Ok(format!("drops {} dB; comb g(29.7 ms) = {g:.4}", drops.join("/")))
}

fn nsf_spectrum() -> Outcome {
    let frames = (f64::from(SR) / 512.0).ceil() as usize + 2;
    let contour = F0Contour::new(vec![441.0; frames], FrameSpec::default()).unwrap();
    let exc = generate_excitation(&contour, &NsfConfig::with_harmonics(8), 0).map_err(|e| e.to_string())?;
    let n = SR as usize;
    check(exc.samples.len() >= n, || "excitation shorter than 1 s".into())?;
    let mut buf: Vec<Complex<f64>> = exc.samples[..n]
        .iter()
        .enumerate()
        .map(|(i, &v)| Complex::new(f64::from(v) * (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm_sqr()).collect();
    // 1 Hz bins: harmonic j sits at bin 441·j.
    let near_harmonic = |k: usize| {
        let j = ((k as f64) / 441.0).round() as usize;
        j >= 1 && k.abs_diff(441 * j) <= 3
    };
    let top = 441 * 8 + 220;
    let floor = (20..top).filter(|&k| !near_harmonic(k)).map(|k| power[k]).fold(0.0, f64::max);
    let mut weakest = f64::INFINITY;
    for j in 1..=8 {
        let db = 10.0 * (power[441 * j] / floor).log10();
        check(db >= 40.0, || format!("harmonic {j}: {db:.1} dB above floor"))?;
        weakest = weakest.min(db);
    }
    let total: f64 = power[1..].iter().sum();
    let comb: f64 = (1..power.len()).filter(|&k| near_harmonic(k) && k <= 441 * 8 + 3).map(|k| power[k]).sum();
    let purity = comb / total;
    check(purity >= 0.99, || format!("harmonic purity {purity:.4}"))?;

    let cfg = NsfConfig {
        merge_weights: vec![1.0],
        ..NsfConfig::with_harmonics(1)
    };
    let e = merge_excitation(&[vec![0.1]], &cfg).map_err(|e| e.to_string())?[0];
    check((e - 0.1f64.tanh()).abs() <= 1e-9, || format!("merge {e} vs tanh(0.1)"))?;
    Ok(format!(
        "8 harmonics, weakest {weakest:.1} dB above floor, purity {:.4}%, merge(0.1) = {e:.6}",
        100.0 * purity
    ))
}

fn f0_accuracy() -> Outcome {
    let sr = f64::from(SR);
    let mut notes = Vec::new();
    for f in [110.0, 220.0, 440.0, 880.0] {
        let s: Vec<f64> = (0..2 * SR as usize).map(|i| 0.5 * (2.0 * PI * f * i as f64 / sr).sin()).collect();
        let w = Waveform::from_f64(&s, SR).unwrap();
        let c = extract_f0(&w, FrameSpec::default(), F0Range::default()).map_err(|e| e.to_string())?;
        let voiced: Vec<f64> = c.values().iter().copied().filter(|v| *v > 0.0).collect();
        check(voiced.len() * 10 >= c.len() * 9, || format!("{f} Hz: {}/{} voiced", voiced.len(), c.len()))?;
        let worst = voiced.iter().map(|v| (v / f - 1.0).abs()).fold(0.0, f64::max);
        check(worst <= 0.01, || format!("{f} Hz: worst relative error {worst:.4}"))?;
        notes.push(format!("{f}:{:.2}%", 100.0 * worst));
    }
    let silence = Waveform::silence(2 * SR as usize, SR).unwrap();
    let c = extract_f0(&silence, FrameSpec::default(), F0Range::default()).map_err(|e| e.to_string())?;
    check(c.voiced_count() == 0, || format!("{} voiced frames in silence", c.voiced_count()))?;
    Ok(format!("worst error {}; silence all unvoiced", notes.join(" ")))
}

fn glide_jump_closed_forms() -> Outcome {
    let cfg = PerturbationConfig::default();
    let n = 60;
    let c = F0Contour::new(vec![200.0; n], FrameSpec::default()).unwrap();
    let g = glide_with_offset(&c, &Segment::new(0, n, SegmentKind::Glide), 12.0, &cfg);
    let last = g.values()[n - 1];
    check((last - 400.0).abs() <= 0.01, || format!("glide final frame {last}"))?;
    for (k, &v) in g.values().iter().enumerate() {
        let want = 200.0 * (k as f64 / (n - 1) as f64).exp2();
        check((v - want).abs() <= 1e-9 * want, || format!("glide frame {k}: {v} vs {want}"))?;
    }
    let c = F0Contour::new(vec![300.0; n], FrameSpec::default()).unwrap();
    let j = jump_with_offset(&c, &Segment::new(10, 40, SegmentKind::Jump), 2.0, &cfg);
    let want = 300.0 * (2.0f64 / 12.0).exp2();
    for (k, &v) in j.values().iter().enumerate() {
        if (10..40).contains(&k) {
            check((v - want).abs() <= 0.01, || format!("jump frame {k}: {v}"))?;
        } else {
            check(v == 300.0, || format!("jump touched frame {k}"))?;
        }
    }
    Ok(format!("glide ends at {last:.6} Hz, jump frames at {:.4} Hz", j.values()[10]))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    write_corpus(&input, 16, BitDepth::Pcm16);
    let cfg = PipelineConfig {
        master_seed: 2024,
        ..PipelineConfig::default()
    };
    let runs = [("a", 1), ("b", 1), ("c", 8)];
    let mut trees = Vec::new();
    for (name, jobs) in runs {
        let out = dir.path().join(name);
        let report = run_batch(&BatchInput::Dir(input.clone()), &cfg, &out, jobs).map_err(|e| e.to_string())?;
        records(&report.entries)?;
        let files = files_under(&out);
        let bytes: Vec<Vec<u8>> = files.iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
        trees.push((files, bytes));
    }
    let fired = {
        let m = fs::read_to_string(dir.path().join("a/manifest.jsonl")).unwrap();
        m.matches("\"applied\":true").count()
    };
    for (i, (name, jobs)) in runs.iter().enumerate().skip(1) {
        check(trees[i].0 == trees[0].0, || format!("run {name}: different file set"))?;
        for (f, (x, y)) in trees[0].0.iter().zip(trees[0].1.iter().zip(&trees[i].1)) {
            check(x == y, || format!("run {name} (jobs {jobs}): {} differs", f.display()))?;
        }
    }
    Ok(format!(
        "{} files byte-identical across 2 runs at jobs 1 and 1 run at jobs 8 ({fired} effects fired)",
        trees[0].0.len()
    ))
}

fn alignment() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    write_corpus(&input, 12, BitDepth::Pcm16);
    let mut checked = 0;
    for depth in [BitDepth::Pcm16, BitDepth::Float32] {
        let mut cfg = PipelineConfig {
            bit_depth: depth,
            ..PipelineConfig::default()
        };
        cfg.effects.p_h = 0.9;
        cfg.effects.p_e = 0.9;
        cfg.effects.p_r = 0.9;
        let out = dir.path().join(depth.to_string());
        let report = run_batch(&BatchInput::Dir(input.clone()), &cfg, &out, 4).map_err(|e| e.to_string())?;
        for r in records(&report.entries)? {
            let aug = load_waveform(out.join(&r.augmented_path)).unwrap();
            let target = load_waveform(out.join(&r.target_path)).unwrap();
            let source = load_waveform(input.join(&r.source_path)).unwrap();
            check(aug.len() == target.len() && aug.sample_rate() == target.sample_rate(), || {
                format!("{}: augmented {} vs target {}", r.source_path, aug.len(), target.len())
            })?;
            let f0c = F0Contour::load(out.join(&r.f0_clean_path)).unwrap();
            let f0p = F0Contour::load(out.join(&r.f0_pert_path)).unwrap();
            check(f0c.len() == f0p.len(), || format!("{}: F0 frame counts differ", r.source_path))?;
            check(target == source, || format!("{}: target samples differ from source", r.source_path))?;
            if depth == BitDepth::Pcm16 {
                let same = fs::read(out.join(&r.target_path)).unwrap() == fs::read(input.join(&r.source_path)).unwrap();
                check(same, || format!("{}: target bytes differ from source", r.source_path))?;
            }
            let replay = extract_f0(&target, cfg.frame.with_sample_rate(target.sample_rate()), cfg.f0_range())
                .map_err(|e| e.to_string())?;
            check(replay == f0c, || format!("{}: F0 does not replay from target", r.source_path))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} pairs aligned; targets equal sources at 16-bit and float32"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("probability fidelity", probability_fidelity),
        ("segment-count law", segment_count_law),
        ("identity pipeline", identity_pipeline),
        ("echo oracle", echo_oracle),
        ("reverb decay oracle", reverb_decay),
        ("NSF spectral oracle", nsf_spectrum),
        ("F0 extraction accuracy", f0_accuracy),
        ("glide/jump closed forms", glide_jump_closed_forms),
        ("determinism and parallel invariance", determinism),
        ("alignment contract", alignment),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
