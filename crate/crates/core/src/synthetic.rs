//! Deterministic test signals with known ground truth: vibrato voices,
//! drones, noise and a labelled voice / accompaniment corpus.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::AudioClip;
use crate::pipeline::AnalysisResult;
use crate::spectral::{FramePeaks, SpectralPeak};
use crate::tracking::{ContourFrame, PitchContour};
use crate::voicing::VoicingFeatures;

/// A harmonic tone with optional sinusoidal vibrato.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTone {
    pub f0: f64,
    /// Peak vibrato excursion in cents (0 = steady).
    pub vibrato_cents: f64,
    pub vibrato_rate: f64,
    pub vibrato_phase: f64,
    /// Amplitude of partial n at index n - 1.
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
}

impl HarmonicTone {
    /// `partials` harmonics at amplitudes 1/n, zero phase.
    pub fn new(f0: f64, partials: usize) -> Self {
        Self {
            f0,
            vibrato_cents: 0.0,
            vibrato_rate: 0.0,
            vibrato_phase: 0.0,
            amplitudes: (1..=partials).map(|n| 1.0 / n as f64).collect(),
            phases: vec![0.0; partials],
        }
    }

    pub fn with_vibrato(mut self, cents: f64, rate_hz: f64) -> Self {
        self.vibrato_cents = cents;
        self.vibrato_rate = rate_hz;
        self
    }

    pub fn with_random_phases(mut self, rng: &mut impl Rng) -> Self {
        for p in self.phases.iter_mut() {
            *p = rng.gen_range(0.0..2.0 * PI);
        }
        self.vibrato_phase = rng.gen_range(0.0..2.0 * PI);
        self
    }

    /// Instantaneous fundamental at `t` seconds.
    pub fn f0_at(&self, t: f64) -> f64 {
        let m = (2.0 * PI * self.vibrato_rate * t + self.vibrato_phase).sin();
        self.f0 * (self.vibrato_cents * m / 1200.0).exp2()
    }

    /// `len` samples; partials above Nyquist are skipped sample by sample.
    pub fn render(&self, sample_rate: u32, len: usize) -> Vec<f64> {
        let rate = sample_rate as f64;
        let nyquist = 0.5 * rate;
        let mut phase = 0.0f64;
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let f = self.f0_at(i as f64 / rate);
            let mut v = 0.0;
            for (n, (a, p)) in self.amplitudes.iter().zip(&self.phases).enumerate() {
                let h = (n + 1) as f64;
                if h * f >= nyquist {
                    break;
                }
                v += a * (h * phase + p).sin();
            }
            out.push(v);
            // midpoint rule keeps the phase aligned with f0_at
            let next = self.f0_at((i as f64 + 1.0) / rate);
            phase += PI * (f + next) / rate;
            if phase > 2.0 * PI * 1e6 {
                phase %= 2.0 * PI;
            }
        }
        out
    }

    /// Ideal sinusoid list for a steady tone, frequencies up to `max_hz`.
    pub fn ideal_peaks(&self, max_hz: f64) -> FramePeaks {
        FramePeaks {
            frame_index: 0,
            start_time: 0.0,
            peaks: self
                .amplitudes
                .iter()
                .enumerate()
                .map(|(n, &a)| SpectralPeak {
                    frequency: (n + 1) as f64 * self.f0,
                    amplitude: a,
                    sinusoidality: 1.0,
                })
                .filter(|p| p.frequency <= max_hz)
                .collect(),
        }
    }
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Scales `x` in place to the given RMS (silence stays silent).
pub fn scale_to_rms(x: &mut [f64], target: f64) {
    let r = rms(x);
    if r > 0.0 {
        let g = target / r;
        x.iter_mut().for_each(|v| *v *= g);
    }
}

/// Sample-wise sum over the length of the longer input.
pub fn mix(a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.len().max(b.len()))
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

/// Uniform white noise at the given RMS.
pub fn white_noise(rng: &mut impl Rng, len: usize, level: f64) -> Vec<f64> {
    let a = level * 3f64.sqrt();
    (0..len).map(|_| rng.gen_range(-a..a)).collect()
}

/// Raised-cosine fade in and out over `fade` samples each.
pub fn apply_fades(x: &mut [f64], fade: usize) {
    let n = x.len();
    let fade = fade.min(n / 2);
    for i in 0..fade {
        let g = 0.5 * (1.0 - (PI * i as f64 / fade as f64).cos());
        x[i] *= g;
        x[n - 1 - i] *= g;
    }
}

/// Ground-truth contour sampled at `times`, voiced everywhere.
pub fn reference_contour(tone: &HarmonicTone, times: &[f64], hop_seconds: f64) -> PitchContour {
    PitchContour {
        hop_seconds,
        frames: times
            .iter()
            .map(|&t| ContourFrame {
                time: t,
                f0: Some(tone.f0_at(t)),
                salience: 1.0,
            })
            .collect(),
    }
}

/// Voice + drone at equal RMS: 220 Hz +-50 cents at 5.5 Hz with 10
/// partials, over a steady 3-partial drone.
pub fn voice_over_drone(
    voice_f0: f64,
    drone_f0: f64,
    sample_rate: u32,
    seconds: f64,
    seed: u64,
) -> (Vec<f64>, HarmonicTone, HarmonicTone) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = (seconds * sample_rate as f64).round() as usize;
    let voice = HarmonicTone::new(voice_f0, 10)
        .with_vibrato(50.0, 5.5)
        .with_random_phases(&mut rng);
    let drone = HarmonicTone::new(drone_f0, 3).with_random_phases(&mut rng);
    let mut v = voice.render(sample_rate, len);
    let mut d = drone.render(sample_rate, len);
    scale_to_rms(&mut v, 0.2);
    scale_to_rms(&mut d, 0.2);
    (mix(&v, &d), voice, drone)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Voice,
    SteadyTone,
    Noise,
}

impl SegmentKind {
    pub fn name(self) -> &'static str {
        match self {
            SegmentKind::Voice => "voice",
            SegmentKind::SteadyTone => "steady",
            SegmentKind::Noise => "noise",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "voice" => Some(SegmentKind::Voice),
            "steady" => Some(SegmentKind::SteadyTone),
            "noise" => Some(SegmentKind::Noise),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: f64,
    pub end: f64,
    /// Source tone for voice and steady segments.
    pub tone: Option<HarmonicTone>,
}

fn segment_at(segments: &[Segment], t: f64) -> Option<&Segment> {
    segments.iter().find(|s| t >= s.start && t < s.end)
}

pub fn is_vocal_at(segments: &[Segment], t: f64) -> bool {
    matches!(segment_at(segments, t), Some(s) if s.kind == SegmentKind::Voice)
}

pub fn near_boundary(segments: &[Segment], t: f64, margin: f64) -> bool {
    segments.iter().skip(1).any(|s| (t - s.start).abs() < margin)
}

/// One corpus clip: segments of vibrato voice, steady sparse tones or noise
/// laid end to end over a drone at the same RMS.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub segments: Vec<Segment>,
    pub drone: HarmonicTone,
}

impl CorpusClip {
    /// True inside voice segments.
    pub fn is_vocal(&self, t: f64) -> bool {
        is_vocal_at(&self.segments, t)
    }

    /// Voice F0 at `t` (None outside voice segments).
    pub fn voice_f0(&self, t: f64) -> Option<f64> {
        segment_at(&self.segments, t)
            .filter(|s| s.kind == SegmentKind::Voice)
            .and_then(|s| s.tone.as_ref().map(|tone| tone.f0_at(t - s.start)))
    }

    /// True within `margin` seconds of a segment change.
    pub fn near_boundary(&self, t: f64, margin: f64) -> bool {
        near_boundary(&self.segments, t, margin)
    }

    pub fn audio(&self) -> AudioClip {
        AudioClip::new(self.samples.clone(), self.sample_rate).expect("corpus sample rate is positive")
    }

    pub fn reference(&self, times: &[f64], hop_seconds: f64) -> PitchContour {
        PitchContour {
            hop_seconds,
            frames: times
                .iter()
                .map(|&t| ContourFrame {
                    time: t,
                    f0: self.voice_f0(t),
                    salience: 0.0,
                })
                .collect(),
        }
    }
}

pub const CORPUS_LEVEL: f64 = 0.2;
const SEGMENT_FADE_SECONDS: f64 = 0.01;

/// Shape of the labelled corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusParams {
    pub sample_rate: u32,
    pub segments: usize,
    pub segment_seconds: (f64, f64),
    /// Vibrato depth range of voice segments, in cents.
    pub vibrato_cents: (f64, f64),
    /// Share of accompaniment segments that are steady tones (rest is noise).
    pub steady_share: f64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            sample_rate: 16000,
            segments: 6,
            segment_seconds: (2.0, 4.0),
            vibrato_cents: (50.0, 100.0),
            steady_share: 0.6,
        }
    }
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.log2()..hi.log2())).exp2()
}

/// Generates one labelled clip; identical seeds give identical samples.
pub fn corpus_clip(seed: u64, params: &CorpusParams) -> CorpusClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample_rate = params.sample_rate;
    let rate = sample_rate as f64;
    let drone = HarmonicTone::new(log_uniform(&mut rng, 100.0, 180.0), 3).with_random_phases(&mut rng);

    let mut segments = Vec::with_capacity(params.segments);
    let mut body: Vec<f64> = Vec::new();
    for k in 0..params.segments {
        // alternate voice and accompaniment so both classes are present
        let kind = if k % 2 == 0 {
            SegmentKind::Voice
        } else if rng.gen_bool(params.steady_share) {
            SegmentKind::SteadyTone
        } else {
            SegmentKind::Noise
        };
        let (lo, hi) = params.segment_seconds;
        let len = (rng.gen_range(lo..=hi) * rate).round() as usize;
        let start = body.len() as f64 / rate;
        let (mut x, tone) = match kind {
            SegmentKind::Voice => {
                let (dlo, dhi) = params.vibrato_cents;
                let tone = HarmonicTone::new(log_uniform(&mut rng, 160.0, 450.0), rng.gen_range(8..=12))
                    .with_vibrato(rng.gen_range(dlo..=dhi), rng.gen_range(5.0..7.0))
                    .with_random_phases(&mut rng);
                (tone.render(sample_rate, len), Some(tone))
            }
            SegmentKind::SteadyTone => {
                let tone = HarmonicTone::new(log_uniform(&mut rng, 100.0, 600.0), rng.gen_range(2..=3))
                    .with_random_phases(&mut rng);
                (tone.render(sample_rate, len), Some(tone))
            }
            SegmentKind::Noise => (white_noise(&mut rng, len, 1.0), None),
        };
        scale_to_rms(&mut x, CORPUS_LEVEL);
        apply_fades(&mut x, (SEGMENT_FADE_SECONDS * rate) as usize);
        body.extend_from_slice(&x);
        segments.push(Segment {
            kind,
            start,
            end: body.len() as f64 / rate,
            tone,
        });
    }
    let mut d = drone.render(sample_rate, body.len());
    scale_to_rms(&mut d, CORPUS_LEVEL);
    CorpusClip {
        samples: mix(&body, &d),
        sample_rate,
        segments,
        drone,
    }
}

/// `count` clips derived from `seed`.
pub fn corpus(seed: u64, count: usize, params: &CorpusParams) -> Vec<CorpusClip> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| corpus_clip(rng.gen(), params)).collect()
}

/// Frames far enough from segment changes, that carried a pitch, split into
/// (vocal, non-vocal) by ground truth. `result` must hold diagnostics.
pub fn labelled_features(
    segments: &[Segment],
    result: &AnalysisResult,
    margin: f64,
) -> (Vec<VoicingFeatures>, Vec<VoicingFeatures>) {
    let mut vocal = Vec::new();
    let mut other = Vec::new();
    for (frame, diag) in result.contour.frames.iter().zip(&result.diagnostics) {
        if frame.f0.is_none() || near_boundary(segments, frame.time, margin) {
            continue;
        }
        if is_vocal_at(segments, frame.time) {
            vocal.push(diag.features);
        } else {
            other.push(diag.features);
        }
    }
    (vocal, other)
}

/// Share of frames whose vocal label agrees with the ground truth.
pub fn frame_accuracy(segments: &[Segment], contour: &PitchContour, labels: &[bool]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = contour
        .frames
        .iter()
        .zip(labels)
        .filter(|(f, &l)| is_vocal_at(segments, f.time) == l)
        .count();
    hits as f64 / labels.len() as f64
}
