//! Audio clips, frame segmentation and analysis windows.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;


#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum AudioError {
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("window length must be positive, got {0} s")]
    NonPositiveWindow(f64),
    #[error("hop length must be positive, got {0} s")]
    NonPositiveHop(f64),
    #[error("window spans {0} samples, at least 2 are required")]
    WindowTooShort(usize),
}

/// Mono audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    /// Builds a clip, clamping every sample into `[-1, 1]`. Non-finite
    /// samples become 0.
    pub fn new(mut samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        for s in samples.iter_mut() {
            *s = if s.is_finite() { s.clamp(-1.0, 1.0) } else { 0.0 };
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Mixes interleaved multi-channel samples down to mono by per-sample mean.
    pub fn from_interleaved(
        interleaved: &[f64],
        channels: usize,
        sample_rate: u32,
    ) -> Result<Self, AudioError> {
        let channels = channels.max(1);
        let mono = interleaved
            .chunks_exact(channels)
            .map(|c| c.iter().sum::<f64>() / channels as f64)
            .collect();
        Self::new(mono, sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// One analysis frame. `start_time == index * hop_seconds`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub start_time: f64,
    pub samples: Vec<f64>,
}

/// Window and hop sizes resolved to whole samples for one clip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameGrid {
    pub window_len: usize,
    pub hop_len: usize,
    pub hop_seconds: f64,
    pub sample_rate: u32,
    pub frame_count: usize,
}

impl FrameGrid {
    pub fn new(
        sample_count: usize,
        sample_rate: u32,
        window_seconds: f64,
        hop_seconds: f64,
    ) -> Result<Self, AudioError> {
        if !(window_seconds > 0.0) {
            return Err(AudioError::NonPositiveWindow(window_seconds));
        }
        if !(hop_seconds > 0.0) {
            return Err(AudioError::NonPositiveHop(hop_seconds));
        }
        let rate = sample_rate as f64;
        let window_len = (window_seconds * rate).round() as usize;
        if window_len < 2 {
            return Err(AudioError::WindowTooShort(window_len));
        }
        let hop_len = ((hop_seconds * rate).round() as usize).max(1);
        let frame_count = if sample_count >= window_len {
            (sample_count - window_len) / hop_len + 1
        } else {
            0
        };
        Ok(Self {
            window_len,
            hop_len,
            hop_seconds,
            sample_rate,
            frame_count,
        })
    }

    pub fn start_time(&self, index: usize) -> f64 {
        index as f64 * self.hop_seconds
    }

    /// Time of the window centre, used as the frame's timestamp in contours.
    pub fn center_time(&self, index: usize) -> f64 {
        self.start_time(index) + 0.5 * self.window_seconds()
    }

    pub fn window_seconds(&self) -> f64 {
        self.window_len as f64 / self.sample_rate as f64
    }

    pub fn slice<'a>(&self, samples: &'a [f64], index: usize) -> &'a [f64] {
        let start = index * self.hop_len;
        &samples[start..start + self.window_len]
    }
}

/// Splits a clip into equal-length frames. Clips shorter than one window
/// yield no frames.
pub fn frame_signal(
    clip: &AudioClip,
    window_seconds: f64,
    hop_seconds: f64,
) -> Result<Vec<Frame>, AudioError> {
    let grid = FrameGrid::new(clip.len(), clip.sample_rate(), window_seconds, hop_seconds)?;
    Ok((0..grid.frame_count)
        .map(|index| Frame {
            index,
            start_time: grid.start_time(index),
            samples: grid.slice(clip.samples(), index).to_vec(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WindowKind {
    /// Symmetric Hann, zero at both ends.
    #[default]
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => alloc::vec![1.0; len],
            WindowKind::Hann => {
                if len < 2 {
                    return alloc::vec![1.0; len];
                }
                let denom = (len - 1) as f64;
                (0..len)
                    .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / denom).cos()))
                    .collect()
            }
        }
    }

    /// Half width of the main lobe, in unpadded DFT bins.
    pub fn main_lobe_half_width(self) -> usize {
        match self {
            WindowKind::Hann => 2,
            WindowKind::Rectangular => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Hann => "hann",
            WindowKind::Rectangular => "rectangular",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "hann" => Some(WindowKind::Hann),
            "rectangular" | "rect" => Some(WindowKind::Rectangular),
            _ => None,
        }
    }
}

pub fn apply_window(frame: &Frame, kind: WindowKind) -> Frame {
    let w = kind.coefficients(frame.samples.len());
    Frame {
        index: frame.index,
        start_time: frame.start_time,
        samples: frame
            .samples
            .iter()
            .zip(w.iter())
            .map(|(s, w)| s * w)
            .collect(),
    }
}
