//! Predominant-melody extraction for polyphonic vocal music.
//!
//! The analysis chain follows the usual melody-extraction layout:
//!
//! 1. [`audio`]: the clip is cut into overlapping, windowed frames (10 ms hop).
//! 2. [`spectral`]: every frame is reduced to a sparse list of sinusoids,
//!    accepted by how closely each spectral peak matches the ideal main lobe
//!    of the analysis window.
//! 3. [`twm`]: trial fundamentals are scored with the two-way mismatch error,
//!    giving a handful of ranked F0 candidates per frame.
//! 4. [`tracking`]: dynamic programming picks a smooth trajectory through the
//!    candidates, either one contour or two harmonically unrelated ones.
//! 5. [`voicing`]: a pitch-based harmonic energy feature plus pitch
//!    instability, classified with diagonal Gaussian mixtures, decides where
//!    the voice is present.
//!
//! [`pipeline`] wires these stages together, [`synth`] renders a contour back
//! to audio for listening, and [`eval`] scores a contour against a reference.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the command
//! line tool and the HTTP service live in the `melodex` crate.

#![no_std]

extern crate alloc;

pub mod audio;
pub mod config;
pub mod eval;
pub mod fft;
pub mod gmm;
pub mod pipeline;
pub mod spectral;
pub mod synth;
pub mod synthetic;
pub mod tracking;
pub mod twm;
pub mod voicing;

pub use audio::{apply_window, frame_signal, AudioClip, Frame, WindowKind};
pub use config::{AnalysisConfig, ConfigError, TrackingMode};
pub use eval::{evaluate, MelodyMetrics};
pub use pipeline::{analyze, AnalysisResult, Analyzer};
pub use spectral::{FramePeaks, SpectralPeak, Spectrum};
pub use tracking::{ContourFrame, PitchContour, TrackingParams};
pub use twm::{F0Candidate, TwmParams};

/// Cents between two positive frequencies (`1200 * log2(to / from)`).
#[inline]
pub fn cents(from: f64, to: f64) -> f64 {
    #[allow(unused_imports)]
    use num_traits::Float;
    1200.0 * (to / from).log2()
}
