//! Log-frequency grayscale spectrogram images, one column per analysis
//! frame.

use melodex_core::{AnalysisConfig, Analyzer, AudioClip};
use rayon::prelude::*;

/// Intensity range below full scale mapped onto 0..=255.
pub const DYNAMIC_RANGE_DB: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrogramRequest {
    pub fmin: f64,
    pub fmax: f64,
    pub t0: f64,
    pub t1: f64,
    pub height: usize,
}

/// Pixel <-> time/frequency mapping of a rendered image. Column `x` is the
/// frame centred at `time_start + x * seconds_per_pixel`; row `y` (0 at the
/// top) is `fmax * (fmin / fmax)^(y / (height - 1))` Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMapping {
    pub width: usize,
    pub height: usize,
    pub first_frame: usize,
    pub time_start: f64,
    pub seconds_per_pixel: f64,
    pub fmin: f64,
    pub fmax: f64,
}

impl AxisMapping {
    pub fn row_frequency(&self, y: usize) -> f64 {
        let frac = y as f64 / (self.height - 1).max(1) as f64;
        self.fmax * (self.fmin / self.fmax).powf(frac)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectrogramError {
    #[error("invalid range: {0}")]
    Range(String),
    #[error("{0}")]
    Analysis(String),
}

pub struct Spectrogram {
    pub axes: AxisMapping,
    /// Row-major, `height` rows of `width` bytes.
    pub pixels: Vec<u8>,
}

pub fn render(
    clip: &AudioClip,
    config: &AnalysisConfig,
    req: &SpectrogramRequest,
) -> Result<Spectrogram, SpectrogramError> {
    let nyquist = clip.sample_rate() as f64 / 2.0;
    let range = |m: String| Err(SpectrogramError::Range(m));
    if !(req.fmin > 0.0 && req.fmin < req.fmax && req.fmax <= nyquist) {
        return range(format!("need 0 < fmin < fmax <= {nyquist} Hz"));
    }
    if !(req.t0 >= 0.0 && req.t0 < req.t1) {
        return range("need 0 <= t0 < t1".into());
    }
    if !(2..=4096).contains(&req.height) {
        return range("height must be in 2..=4096".into());
    }
    let analyzer = Analyzer::new(config, clip.sample_rate(), clip.len())
        .map_err(|e| SpectrogramError::Analysis(e.to_string()))?;
    let grid = *analyzer.grid();
    let frames: Vec<usize> = (0..grid.frame_count)
        .filter(|&i| crate::run::in_region(grid.center_time(i), req.t0, req.t1))
        .collect();
    let Some(&first) = frames.first() else {
        return range("no analysis frame falls inside [t0, t1]".into());
    };
    let axes = AxisMapping {
        width: frames.len(),
        height: req.height,
        first_frame: first,
        time_start: grid.center_time(first),
        seconds_per_pixel: config.hop_seconds,
        fmin: req.fmin,
        fmax: req.fmax,
    };
    let rows: Vec<f64> = (0..axes.height).map(|y| axes.row_frequency(y)).collect();
    let full_scale = analyzer.spectral().window().full_scale_peak();

    let columns: Vec<Vec<u8>> = frames
        .par_iter()
        .map(|&i| {
            let s = analyzer
                .spectral()
                .spectrum(i, grid.start_time(i), grid.slice(clip.samples(), i));
            let last = s.magnitudes.len() - 1;
            rows.iter()
                .map(|&f| {
                    // linear interpolation between bins
                    let pos = (f / s.bin_hz).min(last as f64);
                    let k = (pos.floor() as usize).min(last.saturating_sub(1));
                    let frac = pos - k as f64;
                    let m = s.magnitudes[k] * (1.0 - frac) + s.magnitudes[(k + 1).min(last)] * frac;
                    let db = 20.0 * (m / full_scale).max(1e-12).log10();
                    let level = ((db + DYNAMIC_RANGE_DB) / DYNAMIC_RANGE_DB).clamp(0.0, 1.0);
                    (level * 255.0).round() as u8
                })
                .collect()
        })
        .collect();

    let mut pixels = vec![0u8; axes.width * axes.height];
    for (x, col) in columns.iter().enumerate() {
        for (y, &v) in col.iter().enumerate() {
            pixels[y * axes.width + x] = v;
        }
    }
    Ok(Spectrogram { axes, pixels })
}

pub fn encode_png(s: &Spectrogram) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, s.axes.width as u32, s.axes.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().expect("in-memory PNG header");
        w.write_image_data(&s.pixels).expect("in-memory PNG data");
    }
    out
}
