//! Resynthesis of a pitch contour for listening.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::audio::AudioClip;
use crate::tracking::PitchContour;

pub const MIN_SAMPLE_RATE: u32 = 8000;
pub const FADE_SECONDS: f64 = 0.005;
const HARMONIC_PARTIALS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("sample rate {0} Hz is below the {MIN_SAMPLE_RATE} Hz minimum")]
    SampleRateTooLow(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SynthMode {
    #[default]
    Sine,
    /// Partials 1..=5 at amplitudes 1/n, dropped above Nyquist.
    Harmonic,
}

impl SynthMode {
    pub fn name(self) -> &'static str {
        match self {
            SynthMode::Sine => "sine",
            SynthMode::Harmonic => "harmonic",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sine" => Some(SynthMode::Sine),
            "harmonic" | "harmonic-rich" => Some(SynthMode::Harmonic),
            _ => None,
        }
    }
}

/// Length of the rendered clip: the last frame time plus the lead-in before
/// the first frame (or half a hop, whichever is longer).
pub fn rendered_duration(contour: &PitchContour) -> f64 {
    match (contour.frames.first(), contour.frames.last()) {
        (Some(first), Some(last)) => last.time + first.time.max(0.5 * contour.hop_seconds),
        _ => 0.0,
    }
}

/// Per-sample oscillator frequency and voicing gate.
///
/// Frequencies are interpolated linearly between neighbouring voiced frames
/// and held flat at the ends of a voiced run. A sample is voiced when its
/// nearest frame is.
pub fn frequency_track(contour: &PitchContour, sample_rate: u32) -> (Vec<f64>, Vec<bool>) {
    let rate = sample_rate as f64;
    let len = (rendered_duration(contour) * rate).round() as usize;
    let frames = &contour.frames;
    let mut freq = vec![0.0; len];
    let mut gate = vec![false; len];
    if frames.is_empty() {
        return (freq, gate);
    }
    let mut k = 0usize; // last frame with time <= t
    let mut held = frames.iter().find_map(|f| f.f0).unwrap_or(0.0);
    for n in 0..len {
        let t = n as f64 / rate;
        while k + 1 < frames.len() && frames[k + 1].time <= t {
            k += 1;
        }
        let left = &frames[k];
        let right = frames.get(k + 1);
        let nearest = match right {
            Some(r) if t >= left.time && (r.time - t) < (t - left.time) => r,
            _ => left,
        };
        let f = match (left.f0, right.and_then(|r| r.f0)) {
            (Some(a), Some(b)) if t >= left.time => {
                let r = right.expect("checked");
                let w = ((t - left.time) / (r.time - left.time)).clamp(0.0, 1.0);
                a + (b - a) * w
            }
            _ => nearest.f0.unwrap_or(held),
        };
        if nearest.f0.is_some() {
            held = f;
            gate[n] = true;
        }
        freq[n] = held;
    }
    (freq, gate)
}

/// Raised-cosine envelope that reaches zero at every voiced/unvoiced
/// boundary over `fade_len` samples.
fn envelope(gate: &[bool], fade_len: usize) -> Vec<f64> {
    let n = gate.len();
    let mut dist = vec![usize::MAX; n];
    let mut last: Option<usize> = None;
    for i in 0..n {
        if !gate[i] {
            last = Some(i);
        }
        if let Some(l) = last {
            dist[i] = i - l;
        }
    }
    let mut next: Option<usize> = None;
    for i in (0..n).rev() {
        if !gate[i] {
            next = Some(i);
        }
        if let Some(m) = next {
            dist[i] = dist[i].min(m - i);
        }
    }
    let fade = fade_len.max(1) as f64;
    dist.iter()
        .map(|&d| {
            if d == usize::MAX || d as f64 >= fade {
                1.0
            } else {
                0.5 * (1.0 - (PI * d as f64 / fade).cos())
            }
        })
        .collect()
}

/// Renders `contour` as a phase-continuous tone; unvoiced spans are silent.
pub fn synthesize_contour(
    contour: &PitchContour,
    sample_rate: u32,
    mode: SynthMode,
    amplitude: f64,
) -> Result<AudioClip, SynthError> {
    if sample_rate < MIN_SAMPLE_RATE {
        return Err(SynthError::SampleRateTooLow(sample_rate));
    }
    let amplitude = amplitude.clamp(0.0, 1.0);
    let rate = sample_rate as f64;
    let nyquist = 0.5 * rate;
    let (freq, gate) = frequency_track(contour, sample_rate);
    let env = envelope(&gate, (FADE_SECONDS * rate).round() as usize);
    let norm: f64 = (1..=HARMONIC_PARTIALS).map(|n| 1.0 / n as f64).sum();

    let mut phase = 0.0f64;
    let mut out = Vec::with_capacity(freq.len());
    for ((&f, &g), &e) in freq.iter().zip(&gate).zip(&env) {
        let value = if g {
            match mode {
                SynthMode::Sine => phase.sin(),
                SynthMode::Harmonic => {
                    (1..=HARMONIC_PARTIALS)
                        .take_while(|&n| n as f64 * f < nyquist)
                        .map(|n| (n as f64 * phase).sin() / n as f64)
                        .sum::<f64>()
                        / norm
                }
            }
        } else {
            0.0
        };
        out.push(amplitude * e * value);
        phase += 2.0 * PI * f / rate;
        if phase > 2.0 * PI {
            phase -= 2.0 * PI;
        }
    }
    Ok(AudioClip::new(out, sample_rate).expect("sample rate checked above"))
}
