//! Multi-threaded analysis and voicing-model resolution.

use std::path::Path;

use melodex_core::pipeline::PipelineError;
use melodex_core::voicing::VoicingModel;
use melodex_core::{AnalysisConfig, AnalysisResult, Analyzer, AudioClip};
use rayon::prelude::*;

use crate::model::{builtin_model, load_model, ModelError};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("voicing model: {0}")]
    Model(#[from] ModelError),
    #[error("cannot read config `{path}`: {message}")]
    Config { path: String, message: String },
}

pub fn load_config(path: impl AsRef<Path>) -> Result<AnalysisConfig, RunError> {
    let path = path.as_ref();
    let err = |message: String| RunError::Config {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    AnalysisConfig::from_text(&text).map_err(|e| err(e.to_string()))
}

/// The model the config asks for: none when voicing is off, the bundled one
/// when no path is set.
pub fn resolve_model(config: &AnalysisConfig) -> Result<Option<VoicingModel>, RunError> {
    if !config.voicing.enabled {
        return Ok(None);
    }
    if config.voicing.model.is_empty() {
        Ok(Some(builtin_model().clone()))
    } else {
        Ok(Some(load_model(&config.voicing.model)?))
    }
}

/// Frame stages in parallel, tracking and voicing sequentially. The result
/// is identical to the single-threaded pipeline.
pub fn analyze_clip(
    clip: &AudioClip,
    config: &AnalysisConfig,
    model: Option<&VoicingModel>,
    keep_diagnostics: bool,
) -> Result<AnalysisResult, RunError> {
    let analyzer = Analyzer::new(config, clip.sample_rate(), clip.len())?;
    let frames = (0..analyzer.grid().frame_count)
        .into_par_iter()
        .map(|i| analyzer.frame_stage(clip.samples(), i))
        .collect();
    Ok(analyzer.finish(frames, model, keep_diagnostics)?)
}

/// Region membership of a frame centre; edges are inclusive with a little
/// slack so times typed by hand match frames computed as `i * hop`.
pub fn in_region(t: f64, t0: f64, t1: f64) -> bool {
    t >= t0 - 1e-9 && t <= t1 + 1e-9
}

/// Analysis of the frames whose centres lie in `[t0, t1]`, indexed on the
/// whole clip's frame grid. Returns the first frame index and the partial
/// result (diagnostics always kept).
pub fn analyze_region(
    clip: &AudioClip,
    config: &AnalysisConfig,
    model: Option<&VoicingModel>,
    t0: f64,
    t1: f64,
) -> Result<(usize, AnalysisResult), RunError> {
    let analyzer = Analyzer::new(config, clip.sample_rate(), clip.len())?;
    let grid = *analyzer.grid();
    let inside: Vec<usize> = (0..grid.frame_count)
        .filter(|&i| in_region(grid.center_time(i), t0, t1))
        .collect();
    let first = inside.first().copied().unwrap_or(0);
    let frames = inside
        .par_iter()
        .map(|&i| analyzer.frame_stage(clip.samples(), i))
        .collect();
    Ok((first, analyzer.finish_from(first, frames, model, true)?))
}
