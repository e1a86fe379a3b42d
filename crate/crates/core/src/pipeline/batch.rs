use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Component, Path, PathBuf};

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{augment_sample, PipelineConfig, PipelineError};
use crate::audio::{load_waveform, save_waveform};
use crate::f0::SegmentPlan;
use crate::fx::EffectTrace;
use crate::seed;

pub const MANIFEST_NAME: &str = "manifest.jsonl";

/// One manifest line for a successfully processed file. Artifact paths are
/// relative to the manifest directory; `source_path` is relative to the
/// input root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub source_path: String,
    pub augmented_path: String,
    pub target_path: String,
    pub f0_clean_path: String,
    pub f0_pert_path: String,
    pub segment_plan: SegmentPlan,
    pub effect_trace: EffectTrace,
    pub per_file_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifestEntry {
    Error { error: String, source: String },
    Record(Box<SampleRecord>),
}

impl ManifestEntry {
    pub fn source(&self) -> &str {
        match self {
            ManifestEntry::Error { source, .. } => source,
            ManifestEntry::Record(r) => &r.source_path,
        }
    }
}

#[derive(Debug, Clone)]
pub enum BatchInput {
    Dir(PathBuf),
    Files(Vec<PathBuf>),
}

/// An input file with its canonical relative key (forward slashes).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InputFile {
    pub relative: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct BatchReport {
    pub manifest_path: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl BatchReport {
    pub fn records(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e, ManifestEntry::Record(_)))
            .count()
    }

    pub fn errors(&self) -> usize {
        self.entries.len() - self.records()
    }
}

fn relative_key(path: &Path) -> String {
    path.components()
        .filter_map(|c| match c {
            Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            _ => None,
        })
        .collect::<Vec<_>>()
        .join("/")
}

fn is_wav(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

fn common_dir(paths: &[PathBuf]) -> PathBuf {
    let mut iter = paths.iter().filter_map(|p| p.parent());
    let Some(first) = iter.next() else {
        return PathBuf::new();
    };
    let mut common: Vec<Component> = first.components().collect();
    for p in iter {
        let n = common
            .iter()
            .zip(p.components())
            .take_while(|(a, b)| **a == *b)
            .count();
        common.truncate(n);
    }
    common.iter().collect()
}

/// Enumerates inputs sorted by relative key. Directory inputs are searched
/// recursively for `.wav` files; file lists are keyed relative to their
/// deepest common directory.
pub fn collect_inputs(input: &BatchInput) -> Result<Vec<InputFile>, PipelineError> {
    let mut files = match input {
        BatchInput::Dir(root) => {
            if !root.is_dir() {
                return Err(PipelineError::Io {
                    path: root.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
                });
            }
            let mut out = Vec::new();
            for entry in walkdir::WalkDir::new(root).follow_links(true) {
                let entry = entry.map_err(|e| PipelineError::Io {
                    path: root.clone(),
                    source: e.into(),
                })?;
                if entry.file_type().is_file() && is_wav(entry.path()) {
                    let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
                    out.push(InputFile {
                        relative: relative_key(rel),
                        path: entry.path().to_path_buf(),
                    });
                }
            }
            out
        }
        BatchInput::Files(list) => {
            let absolute: Vec<PathBuf> = list
                .iter()
                .map(|p| std::path::absolute(p).unwrap_or_else(|_| p.clone()))
                .collect();
            let base = common_dir(&absolute);
            absolute
                .into_iter()
                .map(|p| InputFile {
                    relative: relative_key(p.strip_prefix(&base).unwrap_or(&p)),
                    path: p,
                })
                .collect()
        }
    };
    files.sort();
    files.dedup_by(|a, b| a.relative == b.relative);
    if files.is_empty() {
        return Err(PipelineError::NoInputs);
    }
    Ok(files)
}

fn with_extension(relative: &str, ext: &str) -> String {
    let (dir, name) = match relative.rsplit_once('/') {
        Some((d, n)) => (format!("{d}/"), n),
        None => (String::new(), relative),
    };
    match name.rsplit_once('.') {
        Some((stem, _)) if !stem.is_empty() => format!("{dir}{stem}.{ext}"),
        _ => format!("{dir}{name}.{ext}"),
    }
}

fn ensure_parent(path: &Path) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| PipelineError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

fn process_one(
    input: &InputFile,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<SampleRecord, PipelineError> {
    let per_file_seed = seed::file_seed(cfg.master_seed, &input.relative);
    let x = load_waveform(&input.path)?;
    let sample = augment_sample(&x, cfg, per_file_seed)?;

    let wav = with_extension(&input.relative, "wav");
    let json = with_extension(&input.relative, "json");
    let record = SampleRecord {
        source_path: input.relative.clone(),
        augmented_path: format!("augmented/{wav}"),
        target_path: format!("target/{wav}"),
        f0_clean_path: format!("f0_clean/{json}"),
        f0_pert_path: format!("f0_pert/{json}"),
        segment_plan: sample.segment_plan,
        effect_trace: sample.effect_trace,
        per_file_seed,
    };
    let aug = out_dir.join(&record.augmented_path);
    let target = out_dir.join(&record.target_path);
    let f0c = out_dir.join(&record.f0_clean_path);
    let f0p = out_dir.join(&record.f0_pert_path);
    for p in [&aug, &target, &f0c, &f0p] {
        ensure_parent(p)?;
    }
    save_waveform(&sample.augmented, &aug, cfg.bit_depth)?;
    save_waveform(&sample.target, &target, cfg.bit_depth)?;
    sample.f0_clean.save(&f0c)?;
    sample.f0_pert.save(&f0p)?;
    debug!("processed {}", input.relative);
    Ok(record)
}

/// Processes every input on `jobs` workers and writes `manifest.jsonl`
/// (one line per input, sorted by source key) into `out_dir`.
///
/// Per-file failures become error entries; the batch continues. Output
/// bytes depend only on the master seed and the file set.
pub fn run_batch(
    input: &BatchInput,
    cfg: &PipelineConfig,
    out_dir: &Path,
    jobs: usize,
) -> Result<BatchReport, PipelineError> {
    cfg.validate()?;
    let inputs = collect_inputs(input)?;
    fs::create_dir_all(out_dir).map_err(|source| PipelineError::OutputDir {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let manifest_path = out_dir.join(MANIFEST_NAME);
    let manifest = File::create(&manifest_path).map_err(|source| PipelineError::OutputDir {
        path: manifest_path.clone(),
        source,
    })?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| PipelineError::Workers(e.to_string()))?;
    let entries: Vec<ManifestEntry> = pool.install(|| {
        inputs
            .par_iter()
            .map(|f| match process_one(f, cfg, out_dir) {
                Ok(r) => ManifestEntry::Record(Box::new(r)),
                Err(e) => {
                    warn!("{}: {e}", f.relative);
                    ManifestEntry::Error {
                        error: e.to_string(),
                        source: f.relative.clone(),
                    }
                }
            })
            .collect()
    });

    let mut w = BufWriter::new(manifest);
    let io_err = |source| PipelineError::Io {
        path: manifest_path.clone(),
        source,
    };
    for e in &entries {
        let line = serde_json::to_string(e).expect("manifest entry serializes");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(BatchReport {
        manifest_path,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_swap() {
        assert_eq!(with_extension("a/b.wav", "json"), "a/b.json");
        assert_eq!(with_extension("noext", "json"), "noext.json");
        assert_eq!(with_extension("dir.x/file", "json"), "dir.x/file.json");
    }

    #[test]
    fn file_list_keys_relative_to_common_dir() {
        let files = BatchInput::Files(vec![
            PathBuf::from("/data/set/b/2.wav"),
            PathBuf::from("/data/set/a/1.wav"),
        ]);
        let keys: Vec<String> = collect_inputs(&files)
            .unwrap()
            .into_iter()
            .map(|f| f.relative)
            .collect();
        assert_eq!(keys, vec!["a/1.wav", "b/2.wav"]);
    }

    #[test]
    fn empty_inputs_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            collect_inputs(&BatchInput::Dir(dir.path().to_path_buf())),
            Err(PipelineError::NoInputs)
        ));
        assert!(matches!(
            collect_inputs(&BatchInput::Files(vec![])),
            Err(PipelineError::NoInputs)
        ));
    }

    #[test]
    fn error_entry_shape() {
        let e = ManifestEntry::Error {
            error: "boom".into(),
            source: "x.wav".into(),
        };
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"error":"boom","source":"x.wav"}"#
        );
    }
}
