//! Deterministic data augmentation for singing-voice-conversion training.
//!
//! * [`audio`]: waveform type, WAV I/O, peak guard.
//! * [`f0`]: YIN F0 extraction and jitter/glide/jump contour perturbation.
//! * [`fx`]: harmony, echo and reverb wet-sound simulation.
//! * [`nsf`]: harmonic-plus-noise source excitation from an F0 contour.
//! * [`pipeline`]: per-sample augmentation, batch emission, manifest stats.
//!
//! All randomness is driven by explicit 64-bit seeds.

pub mod audio;
pub mod f0;
pub mod fx;
pub mod nsf;
pub mod pipeline;
pub mod seed;

pub use audio::{load_waveform, peak_guard, save_waveform, BitDepth, FrameSpec, Waveform};
pub use f0::{extract_f0, perturb_f0, F0Contour, F0Range, PerturbationConfig, SegmentKind, SegmentPlan};
pub use fx::{apply_chain, EffectChainConfig, EffectTrace};
pub use nsf::{generate_excitation, Excitation, NsfConfig};
pub use pipeline::{augment_sample, run_batch, stats_report, BatchInput, PipelineConfig, SampleRecord};
