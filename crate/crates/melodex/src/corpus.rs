//! Labelled voice / accompaniment corpora on disk, and voicing-model
//! training over them.
//!
//! A corpus directory holds, per clip, `<name>.wav` (32-bit float),
//! `<name>.segments.tsv` (`start<TAB>end<TAB>kind` per line) and
//! `<name>.ref.tsv` (the voice pitch in contour interchange format).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use melodex_core::gmm::GmmError;
use melodex_core::synthetic::{corpus, labelled_features, CorpusParams, Segment, SegmentKind};
use melodex_core::voicing::{VoicingFeatures, VoicingModel, FEATURE_NAMES};
use melodex_core::{AnalysisConfig, AudioClip, TrackingMode};
use rayon::prelude::*;

use crate::contour::save_contour;
use crate::run::{analyze_clip, RunError};
use crate::wav::{load_wav, write_wav_f32};

/// Frames this close to a segment change are left out of training: the
/// pitch-spread window straddles two sources there.
pub const TRAINING_MARGIN: f64 = 0.12;
pub const TRAIN_SEED: u64 = 1;
pub const TRAIN_CLIPS: usize = 14;
pub const COMPONENTS: usize = 4;
const MAX_ITERS: usize = 200;

#[derive(Debug, Clone)]
pub struct LabelledClip {
    pub name: String,
    pub audio: AudioClip,
    pub segments: Vec<Segment>,
}

pub fn synthetic_clips(seed: u64, count: usize, params: &CorpusParams) -> Vec<LabelledClip> {
    corpus(seed, count, params)
        .into_iter()
        .enumerate()
        .map(|(i, c)| LabelledClip {
            name: format!("clip_{i:03}"),
            audio: c.audio(),
            segments: c.segments,
        })
        .collect()
}

/// Writes `count` synthetic clips into `dir`; the same seed always gives
/// byte-identical files.
pub fn write_corpus(dir: &Path, seed: u64, count: usize, params: &CorpusParams) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create `{}`", dir.display()))?;
    let cfg = AnalysisConfig::default();
    let mut written = Vec::new();
    for (i, clip) in corpus(seed, count, params).into_iter().enumerate() {
        let name = format!("clip_{i:03}");
        let wav = dir.join(format!("{name}.wav"));
        write_wav_f32(&clip.audio(), &wav)?;

        let mut seg = String::new();
        for s in &clip.segments {
            writeln!(seg, "{:.6}\t{:.6}\t{}", s.start, s.end, s.kind.name())?;
        }
        std::fs::write(dir.join(format!("{name}.segments.tsv")), seg)?;

        let grid = melodex_core::audio::FrameGrid::new(
            clip.samples.len(),
            clip.sample_rate,
            cfg.window_seconds,
            cfg.hop_seconds,
        )?;
        let times: Vec<f64> = (0..grid.frame_count).map(|k| grid.center_time(k)).collect();
        save_contour(&clip.reference(&times, cfg.hop_seconds), dir.join(format!("{name}.ref.tsv")))?;
        written.push(wav);
    }
    Ok(written)
}

pub fn parse_segments(text: &str) -> anyhow::Result<Vec<Segment>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let [start, end, kind] = f.as_slice() else {
            bail!("line {}: expected `start end kind`", i + 1);
        };
        let kind = SegmentKind::from_name(kind)
            .with_context(|| format!("line {}: unknown segment kind `{kind}`", i + 1))?;
        out.push(Segment {
            kind,
            start: start.parse().with_context(|| format!("line {}: bad start", i + 1))?,
            end: end.parse().with_context(|| format!("line {}: bad end", i + 1))?,
            tone: None,
        });
    }
    Ok(out)
}

/// Every `<name>.wav` with a matching `<name>.segments.tsv`, sorted by name.
pub fn load_corpus_dir(dir: &Path) -> anyhow::Result<Vec<LabelledClip>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read corpus directory `{}`", dir.display()))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_suffix(".segments.tsv").map(String::from)
        })
        .collect();
    names.sort();
    if names.is_empty() {
        bail!("no `*.segments.tsv` files in `{}`", dir.display());
    }
    names
        .into_iter()
        .map(|name| {
            let seg_path = dir.join(format!("{name}.segments.tsv"));
            let text = std::fs::read_to_string(&seg_path)?;
            let segments = parse_segments(&text).with_context(|| seg_path.display().to_string())?;
            let audio = load_wav(dir.join(format!("{name}.wav")))?;
            Ok(LabelledClip { name, audio, segments })
        })
        .collect()
}

/// Default analysis in single mode with voicing off; every labelled frame
/// then carries its features.
pub fn training_config() -> AnalysisConfig {
    let mut cfg = AnalysisConfig::default();
    cfg.tracking_mode = TrackingMode::Single;
    cfg.voicing.enabled = false;
    cfg
}

pub fn collect_features(
    clips: &[LabelledClip],
    config: &AnalysisConfig,
) -> Result<(Vec<VoicingFeatures>, Vec<VoicingFeatures>), RunError> {
    let per_clip = clips
        .par_iter()
        .map(|c| {
            let r = analyze_clip(&c.audio, config, None, true)?;
            Ok(labelled_features(&c.segments, &r, TRAINING_MARGIN))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let mut vocal = Vec::new();
    let mut other = Vec::new();
    for (v, o) in per_clip {
        vocal.extend(v);
        other.extend(o);
    }
    Ok((vocal, other))
}

pub fn train_from_features(
    vocal: &[VoicingFeatures],
    nonvocal: &[VoicingFeatures],
    feature_names: &[&str],
    seed: u64,
) -> Result<VoicingModel, GmmError> {
    VoicingModel::train(feature_names, vocal, nonvocal, COMPONENTS, MAX_ITERS, seed)
}

pub fn train_voicing(clips: &[LabelledClip], seed: u64) -> anyhow::Result<VoicingModel> {
    let (vocal, other) = collect_features(clips, &training_config())?;
    log::info!("training on {} vocal and {} non-vocal frames", vocal.len(), other.len());
    Ok(train_from_features(&vocal, &other, &FEATURE_NAMES, seed)?)
}
