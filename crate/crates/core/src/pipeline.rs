//! End-to-end analysis: frames, sinusoids, TWM candidates, tracking and
//! voicing.
//!
//! [`Analyzer::frame_stage`] is independent per frame, so callers with
//! threads can fan it out and hand the results to [`Analyzer::finish`].

use alloc::vec::Vec;

use crate::audio::{AudioClip, AudioError, FrameGrid};
use crate::config::{AnalysisConfig, ConfigError, TrackingMode, VoicingConfig};
use crate::spectral::{FramePeaks, SpectralAnalyzer};
use crate::tracking::{self, Lattice, PitchContour, TrackingError};
use crate::twm::{F0Candidate, TwmError, TwmEstimator};
use crate::voicing::{contour_features, VoicingFeatures, VoicingModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("framing stage: {0}")]
    Audio(#[from] AudioError),
    #[error("multi-F0 stage: {0}")]
    Twm(#[from] TwmError),
    #[error("tracking stage: {0}")]
    Tracking(#[from] TrackingError),
    #[error("voicing stage: model expects features {expected:?}")]
    VoicingFeatures { expected: Vec<alloc::string::String> },
    #[error("voicing stage: enabled but no model was supplied")]
    MissingVoicingModel,
}

/// Per-frame output of the front end.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameAnalysis {
    pub peaks: FramePeaks,
    pub candidates: Vec<F0Candidate>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameDiagnostics {
    pub candidates: Vec<F0Candidate>,
    pub peak_count: usize,
    pub features: VoicingFeatures,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalysisResult {
    /// Final melody: unvoiced wherever voicing rejected the frame.
    pub contour: PitchContour,
    /// Per-frame vocal decision.
    pub labels: Vec<bool>,
    /// Empty when diagnostics were not requested.
    pub diagnostics: Vec<FrameDiagnostics>,
    /// Dual mode: the contour that was not chosen as the voice.
    pub other_contour: Option<PitchContour>,
}

#[derive(Debug, Clone)]
pub struct Analyzer {
    config: AnalysisConfig,
    spectral: SpectralAnalyzer,
    twm: TwmEstimator,
    grid: FrameGrid,
}

impl Analyzer {
    /// Prepares an analyzer for a clip of `sample_count` samples.
    pub fn new(
        config: &AnalysisConfig,
        sample_rate: u32,
        sample_count: usize,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        config.tracking.validate()?;
        let grid = FrameGrid::new(
            sample_count,
            sample_rate,
            config.window_seconds,
            config.hop_seconds,
        )?;
        Ok(Self {
            spectral: SpectralAnalyzer::new(
                config.window,
                grid.window_len,
                config.zero_pad_factor,
                sample_rate,
            ),
            twm: TwmEstimator::new(config.twm)?,
            config: config.clone(),
            grid,
        })
    }

    pub fn grid(&self) -> &FrameGrid {
        &self.grid
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn spectral(&self) -> &SpectralAnalyzer {
        &self.spectral
    }

    pub fn frame_stage(&self, samples: &[f64], index: usize) -> FrameAnalysis {
        let raw = self.grid.slice(samples, index);
        let peaks = self.spectral.peaks(
            index,
            self.grid.start_time(index),
            raw,
            self.config.sinusoidality_threshold,
            self.config.max_peak_frequency,
        );
        let candidates = self.twm.candidates(&peaks, self.config.top_m);
        FrameAnalysis { peaks, candidates }
    }

    /// Tracking and voicing over the per-frame results, in frame order.
    pub fn finish(
        &self,
        frames: Vec<FrameAnalysis>,
        voicing: Option<&VoicingModel>,
        keep_diagnostics: bool,
    ) -> Result<AnalysisResult, PipelineError> {
        self.finish_from(0, frames, voicing, keep_diagnostics)
    }

    /// Like [`Analyzer::finish`] for a run of consecutive frames starting at
    /// grid index `first`; the contour covers only those frames.
    pub fn finish_from(
        &self,
        first: usize,
        frames: Vec<FrameAnalysis>,
        voicing: Option<&VoicingModel>,
        keep_diagnostics: bool,
    ) -> Result<AnalysisResult, PipelineError> {
        let cfg = &self.config;
        if cfg.voicing.enabled {
            match voicing {
                None => return Err(PipelineError::MissingVoicingModel),
                Some(m)
                    if m.feature_names.is_empty()
                        || m.feature_names.iter().any(|n| VoicingFeatures::default().get(n).is_none()) =>
                {
                    return Err(PipelineError::VoicingFeatures {
                        expected: m.feature_names.clone(),
                    })
                }
                _ => {}
            }
        }
        let (peaks, candidates): (Vec<FramePeaks>, Vec<Vec<F0Candidate>>) =
            frames.into_iter().map(|f| (f.peaks, f.candidates)).unzip();
        let lattice = Lattice {
            hop_seconds: cfg.hop_seconds,
            times: (0..candidates.len()).map(|i| self.grid.center_time(first + i)).collect(),
            frames: candidates,
        };
        let band = cfg.voicing.band_hz;
        let half = cfg.voicing.instability_half_window;

        let (mut contour, features, other_contour) = match cfg.tracking_mode {
            TrackingMode::Single => {
                let c = tracking::track_single(&lattice, &cfg.tracking);
                let f = contour_features(&peaks, &c.f0s(), band, half);
                (c, f, None)
            }
            TrackingMode::Dual => {
                let (a, b) = tracking::track_dual(&lattice, &cfg.tracking);
                let fa = contour_features(&peaks, &a.f0s(), band, half);
                let fb = contour_features(&peaks, &b.f0s(), band, half);
                if tracking::choose_voice_contour((&a, &b), (&fa, &fb)) == 1 {
                    (b, fb, Some(a))
                } else {
                    (a, fa, Some(b))
                }
            }
        };

        let labels = vocal_labels(
            &contour,
            &features,
            voicing.filter(|_| cfg.voicing.enabled),
            &cfg.voicing,
        );
        for (frame, &vocal) in contour.frames.iter_mut().zip(&labels) {
            if !vocal {
                frame.f0 = None;
            }
        }

        let diagnostics = if keep_diagnostics {
            lattice
                .frames
                .into_iter()
                .zip(&peaks)
                .zip(&features)
                .map(|((candidates, p), f)| FrameDiagnostics {
                    candidates,
                    peak_count: p.peaks.len(),
                    features: *f,
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(AnalysisResult {
            contour,
            labels,
            diagnostics,
            other_contour,
        })
    }

    /// Sequential run over every frame of `clip`.
    pub fn run(
        &self,
        clip: &AudioClip,
        voicing: Option<&VoicingModel>,
        keep_diagnostics: bool,
    ) -> Result<AnalysisResult, PipelineError> {
        let frames = (0..self.grid.frame_count)
            .map(|i| self.frame_stage(clip.samples(), i))
            .collect();
        self.finish(frames, voicing, keep_diagnostics)
    }
}

/// Final per-frame vocal decision: the model's smoothed label (when a model
/// is given) and a pitched contour frame.
pub fn vocal_labels(
    contour: &PitchContour,
    features: &[VoicingFeatures],
    model: Option<&VoicingModel>,
    voicing: &VoicingConfig,
) -> Vec<bool> {
    match model {
        Some(m) => m
            .classify(features, voicing.bias, voicing.smooth_frames)
            .into_iter()
            .zip(&contour.frames)
            .map(|(v, f)| v && f.f0.is_some())
            .collect(),
        None => contour.frames.iter().map(|f| f.f0.is_some()).collect(),
    }
}

/// Analyses a clip without a voicing model (voicing must be disabled).
pub fn analyze(clip: &AudioClip, config: &AnalysisConfig) -> Result<AnalysisResult, PipelineError> {
    Analyzer::new(config, clip.sample_rate(), clip.len())?.run(clip, None, true)
}

pub fn analyze_with_model(
    clip: &AudioClip,
    config: &AnalysisConfig,
    model: Option<&VoicingModel>,
) -> Result<AnalysisResult, PipelineError> {
    Analyzer::new(config, clip.sample_rate(), clip.len())?.run(clip, model, true)
}
