mod cli;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::Parser;
use serde_json::{json, Value};
use svc_forge::f0::F0Error;
use svc_forge::fx::{draw_chain, render_chain};
use svc_forge::pipeline::PipelineError;
use svc_forge::{
    extract_f0, generate_excitation, load_waveform, perturb_f0, run_batch, save_waveform, stats_report,
    BatchInput, EffectTrace, F0Contour, NsfConfig, PipelineConfig,
};

use cli::{Cli, Command, EffectProbs, PerturbProbs};

/// Error with its process exit status.
#[derive(Debug)]
enum Failure {
    /// I/O, decoding or total batch failure.
    Io(anyhow::Error),
    /// Invalid arguments or configuration.
    Usage(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) | PipelineError::ConfigParse { .. } => Failure::Usage(e.into()),
            PipelineError::F0(F0Error::InvalidRange { .. }) => Failure::Usage(e.into()),
            other => Failure::Io(other.into()),
        }
    }
}

impl From<F0Error> for Failure {
    fn from(e: F0Error) -> Self {
        match e {
            F0Error::InvalidRange { .. } => Failure::Usage(e.into()),
            other => Failure::Io(other.into()),
        }
    }
}

/// Result of a successful command: the JSON summary and the exit status.
struct Outcome {
    summary: Value,
    code: u8,
}

impl From<Value> for Outcome {
    fn from(summary: Value) -> Self {
        Outcome { summary, code: 0 }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(out) => {
            println!("{}", out.summary);
            ExitCode::from(out.code)
        }
        Err(f) => {
            let (Failure::Io(e) | Failure::Usage(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<Outcome, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let seed = cli.seed.unwrap_or(cfg.master_seed);
    match cli.command {
        Command::ExtractF0(a) => {
            if let Some(f) = a.fmin {
                cfg.f0_range[0] = f;
            }
            if let Some(f) = a.fmax {
                cfg.f0_range[1] = f;
            }
            let range = cfg.f0_range();
            if let Some(v) = range.violations(None).into_iter().next() {
                return Err(Failure::Usage(anyhow!(v)));
            }
            let w = load_waveform(&a.input).map_err(anyhow::Error::from)?;
            let spec = cfg.frame.with_sample_rate(w.sample_rate());
            let contour = extract_f0(&w, spec, range)?;
            contour.save(&a.out)?;
            Ok(contour_summary("extract-f0", &a.out, &contour).into())
        }
        Command::PerturbF0(a) => {
            apply_perturb_probs(&mut cfg, &a.probs);
            validate(&cfg)?;
            let contour = F0Contour::load(&a.input)?;
            let (pert, plan) = perturb_f0(&contour, &cfg.perturbation, seed);
            pert.save(&a.out)?;
            if let Some(p) = &a.plan_out {
                write_json(p, &serde_json::to_value(&plan).expect("plan serializes"))?;
            }
            let mut s = contour_summary("perturb-f0", &a.out, &pert);
            s["seed"] = json!(seed);
            s["segments"] = json!(plan.segments.len());
            Ok(s.into())
        }
        Command::Fx(a) => {
            apply_effect_probs(&mut cfg, &a.probs);
            if let Some(d) = a.bit_depth {
                cfg.bit_depth = d;
            }
            validate(&cfg)?;
            let trace = if a.force.is_empty() {
                draw_chain(&cfg.effects, seed)
            } else {
                forced_trace(&a.force, &cfg, seed).map_err(Failure::Usage)?
            };
            let w = load_waveform(&a.input).map_err(anyhow::Error::from)?;
            let out = render_chain(&w, &trace).map_err(|e| Failure::Usage(e.into()))?;
            save_waveform(&out, &a.out, cfg.bit_depth).map_err(anyhow::Error::from)?;
            let trace_json = serde_json::to_value(&trace).expect("trace serializes");
            if let Some(p) = &a.trace_out {
                write_json(p, &trace_json)?;
            }
            Ok(json!({
                "command": "fx",
                "out": a.out,
                "samples": out.len(),
                "sample_rate": out.sample_rate(),
                "trace": trace_json,
            })
            .into())
        }
        Command::Excite(a) => {
            let contour = F0Contour::load(&a.f0)?;
            let nsf = NsfConfig {
                num_harmonics: a.harmonics,
                sine_amplitude: a.alpha,
                noise_std: a.sigma,
                sample_rate: contour.frame_spec().sample_rate,
                ..NsfConfig::default()
            };
            nsf.validate().map_err(|e| Failure::Usage(e.into()))?;
            let exc = generate_excitation(&contour, &nsf, seed).map_err(anyhow::Error::from)?;
            let w = exc.to_waveform().map_err(anyhow::Error::from)?;
            save_waveform(&w, &a.out, cfg.bit_depth).map_err(anyhow::Error::from)?;
            if let Some(p) = &a.mask_out {
                fs::write(p, exc.mask_json()).with_context(|| format!("cannot write {}", p.display()))?;
            }
            Ok(json!({
                "command": "excite",
                "out": a.out,
                "samples": w.len(),
                "sample_rate": w.sample_rate(),
                "voiced_samples": exc.voiced_mask.iter().filter(|&&v| v).count(),
                "seed": seed,
            })
            .into())
        }
        Command::Run(a) => {
            apply_perturb_probs(&mut cfg, &a.perturb);
            apply_effect_probs(&mut cfg, &a.effects);
            if let Some(d) = a.bit_depth {
                cfg.bit_depth = d;
            }
            cfg.master_seed = seed;
            validate(&cfg)?;
            let out_dir = a
                .out
                .clone()
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| Failure::Usage(anyhow!("no output directory: pass --out or set output_dir")))?;
            let input = batch_input(a.input);
            let jobs = a.jobs.unwrap_or_else(|| {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            });
            let report = run_batch(&input, &cfg, &out_dir, jobs)?;
            let (ok, failed) = (report.records(), report.errors());
            let code = match (ok, failed) {
                (_, 0) => 0,
                (0, _) => 1,
                _ => 3,
            };
            if failed > 0 {
                eprintln!("{failed} of {} input(s) failed; see error entries in the manifest", ok + failed);
            }
            Ok(Outcome {
                summary: json!({
                    "command": "run",
                    "manifest": report.manifest_path,
                    "records": ok,
                    "errors": failed,
                    "master_seed": cfg.master_seed,
                    "jobs": jobs,
                }),
                code,
            })
        }
        Command::Stats(a) => {
            validate(&cfg)?;
            let report = stats_report(&a.manifest, &cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for f in &report.flags {
                eprintln!("flag: {f}");
            }
            let mut s = serde_json::to_value(&report).expect("report serializes");
            s["command"] = json!("stats");
            Ok(s.into())
        }
    }
}

fn validate(cfg: &PipelineConfig) -> Result<(), Failure> {
    cfg.validate().map_err(|e| Failure::Usage(e.into()))
}

fn contour_summary(command: &str, out: &Path, c: &F0Contour) -> Value {
    json!({
        "command": command,
        "out": out,
        "frames": c.len(),
        "voiced": c.voiced_count(),
        "sample_rate": c.frame_spec().sample_rate,
    })
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    fs::write(path, v.to_string())
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::Io)
}

fn apply_perturb_probs(cfg: &mut PipelineConfig, p: &PerturbProbs) {
    let c = &mut cfg.perturbation;
    for (slot, v) in [(&mut c.p_jit, p.p_jit), (&mut c.p_gld, p.p_gld), (&mut c.p_jmp, p.p_jmp)] {
        if let Some(v) = v {
            *slot = v;
        }
    }
}

fn apply_effect_probs(cfg: &mut PipelineConfig, p: &EffectProbs) {
    let c = &mut cfg.effects;
    for (slot, v) in [
        (&mut c.p_h, p.p_h),
        (&mut c.p_e, p.p_e),
        (&mut c.p_r, p.p_r),
        (&mut c.mix_h, p.mix_h),
        (&mut c.mix_e, p.mix_e),
        (&mut c.mix_r, p.mix_r),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
}

fn batch_input(paths: Vec<PathBuf>) -> BatchInput {
    match paths.as_slice() {
        [one] if one.is_dir() => BatchInput::Dir(one.clone()),
        _ => BatchInput::Files(paths),
    }
}

fn parse_num(s: &str, what: &str) -> anyhow::Result<f64> {
    let v: f64 = s
        .trim_start_matches('+')
        .parse()
        .with_context(|| format!("{what}: cannot parse {s:?} as a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(anyhow!("{what}: {s:?} is not finite"))
    }
}

/// Builds a trace from `--force` specs, taking mixes from the config.
fn forced_trace(specs: &[String], cfg: &PipelineConfig, seed: u64) -> anyhow::Result<EffectTrace> {
    let fx = &cfg.effects;
    let (mut harmony, mut echo, mut reverb) = (None, None, None);
    for spec in specs {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--force {spec:?}: expected EFFECT=VALUE"))?;
        match name {
            "harmony" => harmony = Some((parse_num(value, "harmony")?, fx.mix_h)),
            "echo" => {
                let (delay, feedback) = match value.split_once(':') {
                    Some((d, g)) => (parse_num(d, "echo delay")?, parse_num(g, "echo feedback")?),
                    None => (
                        parse_num(value, "echo delay")?,
                        0.5 * (fx.echo_feedback[0] + fx.echo_feedback[1]),
                    ),
                };
                echo = Some((delay, feedback, fx.mix_e));
            }
            "reverb" => reverb = Some((parse_num(value, "reverb")?, fx.mix_r)),
            other => return Err(anyhow!("--force: unknown effect {other:?} (expected harmony, echo or reverb)")),
        }
    }
    Ok(EffectTrace::forced(harmony, echo, reverb, seed))
}
