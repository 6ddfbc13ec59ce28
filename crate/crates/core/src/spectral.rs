//! Short-time spectra and sinusoid detection by main-lobe matching.
//!
//! A local spectral maximum is accepted as a sinusoid when the magnitudes
//! around it look like the transform of the analysis window. The measure is
//! `1 - residual / energy` of a least-squares fit of the ideal main lobe,
//! searched over sub-bin shifts. Amplitude does not enter the decision, so
//! weak partials next to loud ones survive while side lobes and noise peaks
//! do not.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::audio::{Frame, WindowKind};
use crate::fft::FftPlan;

/// Peaks weaker than this, relative to a full-scale sinusoid, are numerical
/// dust (-100 dB).
pub const NOISE_FLOOR_RATIO: f64 = 1e-5;

const SHIFT_STEPS: usize = 11;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frame_index: usize,
    pub start_time: f64,
    /// `|X[k]|` for `k = 0..=M/2`, unnormalised.
    pub magnitudes: Vec<f64>,
    /// Hz per bin of the zero-padded transform.
    pub bin_hz: f64,
    pub zero_pad: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub frequency: f64,
    /// Amplitude of the equivalent sinusoid (a full-scale sine reads 1.0).
    pub amplitude: f64,
    pub sinusoidality: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FramePeaks {
    pub frame_index: usize,
    pub start_time: f64,
    /// Sorted by ascending frequency.
    pub peaks: Vec<SpectralPeak>,
}

impl FramePeaks {
    pub fn empty(frame_index: usize, start_time: f64) -> Self {
        Self {
            frame_index,
            start_time,
            peaks: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn max_amplitude(&self) -> f64 {
        self.peaks.iter().map(|p| p.amplitude).fold(0.0, f64::max)
    }
}

/// Magnitude spectrum of an already windowed frame.
pub fn compute_spectrum(frame: &Frame, sample_rate: u32, zero_pad: usize) -> Spectrum {
    let zero_pad = zero_pad.max(1);
    let plan = FftPlan::new(frame.samples.len() * zero_pad);
    spectrum_with_plan(&plan, frame.index, frame.start_time, &frame.samples, sample_rate, zero_pad)
}

fn spectrum_with_plan(
    plan: &FftPlan,
    frame_index: usize,
    start_time: f64,
    windowed: &[f64],
    sample_rate: u32,
    zero_pad: usize,
) -> Spectrum {
    Spectrum {
        frame_index,
        start_time,
        magnitudes: plan.real_magnitudes(windowed),
        bin_hz: sample_rate as f64 / plan.len() as f64,
        zero_pad,
    }
}

/// Everything the detector needs to know about the analysis window, with
/// the ideal main-lobe templates precomputed.
#[derive(Debug, Clone)]
pub struct WindowDescriptor {
    pub kind: WindowKind,
    pub window_len: usize,
    pub zero_pad: usize,
    /// Half main-lobe width in padded bins.
    pub half_lobe: usize,
    coefficient_sum: f64,
    /// `templates[s][j]` is the normalised window transform at padded-bin
    /// offset `j - half_lobe - shift(s)`.
    templates: Vec<Vec<f64>>,
}

impl WindowDescriptor {
    pub fn new(kind: WindowKind, window_len: usize, zero_pad: usize) -> Self {
        let zero_pad = zero_pad.max(1);
        let coeffs = kind.coefficients(window_len);
        let coefficient_sum: f64 = coeffs.iter().sum();
        let half_lobe = kind.main_lobe_half_width() * zero_pad;
        let padded = (window_len * zero_pad) as f64;
        let templates = (0..SHIFT_STEPS)
            .map(|s| {
                let shift = shift_of(s);
                (0..=2 * half_lobe)
                    .map(|j| {
                        let offset = j as f64 - half_lobe as f64 - shift;
                        window_transform(&coeffs, offset / padded) / coefficient_sum
                    })
                    .collect()
            })
            .collect();
        Self {
            kind,
            window_len,
            zero_pad,
            half_lobe,
            coefficient_sum,
            templates,
        }
    }

    /// Magnitude a full-scale sinusoid produces at its spectral peak.
    pub fn full_scale_peak(&self) -> f64 {
        0.5 * self.coefficient_sum
    }
}

fn shift_of(step: usize) -> f64 {
    -0.5 + 0.1 * step as f64
}

/// `|sum_n w[n] exp(-2*pi*i*nu*n)|` for `nu` in cycles per sample.
fn window_transform(coeffs: &[f64], nu: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (n, &w) in coeffs.iter().enumerate() {
        let theta = -2.0 * PI * nu * n as f64;
        re += w * theta.cos();
        im += w * theta.sin();
    }
    re.hypot(im)
}

/// Sinusoidality of the lobe centred on bin `peak`, in `[0, 1]`.
fn lobe_fit(magnitudes: &[f64], peak: usize, window: &WindowDescriptor) -> f64 {
    let l = window.half_lobe as isize;
    let last = magnitudes.len() as isize - 1;
    let mut best = f64::INFINITY;
    let mut energy = 0.0;
    for j in -l..=l {
        let k = peak as isize + j;
        if (0..=last).contains(&k) {
            energy += magnitudes[k as usize] * magnitudes[k as usize];
        }
    }
    if energy <= 0.0 {
        return 0.0;
    }
    for template in &window.templates {
        let (mut mt, mut tt) = (0.0, 0.0);
        for j in -l..=l {
            let k = peak as isize + j;
            if (0..=last).contains(&k) {
                let t = template[(j + l) as usize];
                mt += magnitudes[k as usize] * t;
                tt += t * t;
            }
        }
        if tt <= 0.0 {
            continue;
        }
        // least-squares residual of m - a*t with a = <m,t>/<t,t>
        let residual = (energy - mt * mt / tt).max(0.0);
        best = best.min(residual);
    }
    if !best.is_finite() {
        return 0.0;
    }
    (1.0 - best / energy).clamp(0.0, 1.0)
}

/// Extracts accepted sinusoids from one spectrum.
///
/// Local maxima closer than the main-lobe half width are thinned by
/// magnitude before the sinusoidality test, so the accepted set only grows
/// as `threshold` decreases.
pub fn detect_sinusoids(
    spectrum: &Spectrum,
    window: &WindowDescriptor,
    threshold: f64,
    max_frequency: f64,
) -> FramePeaks {
    let mags = &spectrum.magnitudes;
    let mut out = FramePeaks::empty(spectrum.frame_index, spectrum.start_time);
    if mags.len() < 3 {
        return out;
    }
    let floor = NOISE_FLOOR_RATIO * window.full_scale_peak();
    let nyquist = spectrum.bin_hz * (mags.len() - 1) as f64;

    let mut maxima: Vec<usize> = (1..mags.len() - 1)
        .filter(|&k| mags[k] > floor && mags[k] > mags[k - 1] && mags[k] >= mags[k + 1])
        .filter(|&k| (k as f64) * spectrum.bin_hz <= max_frequency)
        .collect();

    maxima.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::with_capacity(maxima.len());
    for k in maxima {
        if kept.iter().all(|&q| q.abs_diff(k) >= window.half_lobe) {
            kept.push(k);
        }
    }
    kept.sort_unstable();

    let scale = 1.0 / window.full_scale_peak();
    for k in kept {
        let sinusoidality = lobe_fit(mags, k, window);
        if sinusoidality < threshold {
            continue;
        }
        let (offset, log_peak) = parabolic_log_peak(mags[k - 1], mags[k], mags[k + 1]);
        let frequency = (k as f64 + offset) * spectrum.bin_hz;
        if !(frequency > 0.0 && frequency < nyquist) || frequency > max_frequency {
            continue;
        }
        out.peaks.push(SpectralPeak {
            frequency,
            amplitude: log_peak.exp() * scale,
            sinusoidality,
        });
    }
    out
}

/// Vertex of the parabola through three log magnitudes: `(offset, ln peak)`.
fn parabolic_log_peak(left: f64, centre: f64, right: f64) -> (f64, f64) {
    let beta = centre.ln();
    if left <= 0.0 || right <= 0.0 {
        return (0.0, beta);
    }
    let (alpha, gamma) = (left.ln(), right.ln());
    let denom = alpha - 2.0 * beta + gamma;
    if denom >= 0.0 {
        return (0.0, beta);
    }
    let p = (0.5 * (alpha - gamma) / denom).clamp(-0.5, 0.5);
    (p, beta - 0.25 * (alpha - gamma) * p)
}

/// Reusable per-clip spectral front end: window, transform plan and
/// detector state for one frame size.
#[derive(Debug, Clone)]
pub struct SpectralAnalyzer {
    plan: FftPlan,
    coefficients: Vec<f64>,
    window: WindowDescriptor,
    sample_rate: u32,
}

impl SpectralAnalyzer {
    pub fn new(kind: WindowKind, window_len: usize, zero_pad: usize, sample_rate: u32) -> Self {
        let window = WindowDescriptor::new(kind, window_len, zero_pad);
        Self {
            plan: FftPlan::new(window_len * window.zero_pad),
            coefficients: kind.coefficients(window_len),
            window,
            sample_rate,
        }
    }

    pub fn window(&self) -> &WindowDescriptor {
        &self.window
    }

    /// Windows raw frame samples and returns their spectrum.
    pub fn spectrum(&self, frame_index: usize, start_time: f64, raw: &[f64]) -> Spectrum {
        let mut windowed = vec![0.0; raw.len()];
        for ((w, s), c) in windowed.iter_mut().zip(raw).zip(&self.coefficients) {
            *w = s * c;
        }
        spectrum_with_plan(
            &self.plan,
            frame_index,
            start_time,
            &windowed,
            self.sample_rate,
            self.window.zero_pad,
        )
    }

    pub fn peaks(
        &self,
        frame_index: usize,
        start_time: f64,
        raw: &[f64],
        threshold: f64,
        max_frequency: f64,
    ) -> FramePeaks {
        let spectrum = self.spectrum(frame_index, start_time, raw);
        detect_sinusoids(&spectrum, &self.window, threshold, max_frequency)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::apply_window;

    fn sine_frame(len: usize, rate: f64, parts: &[(f64, f64)]) -> Frame {
        Frame {
            index: 0,
            start_time: 0.0,
            samples: (0..len)
                .map(|n| {
                    parts
                        .iter()
                        .map(|&(f, a)| a * (2.0 * PI * f * n as f64 / rate + 0.3).sin())
                        .sum()
                })
                .collect(),
        }
    }

    #[test]
    fn zero_frame_has_zero_spectrum_and_no_peaks() {
        let frame = Frame {
            index: 0,
            start_time: 0.0,
            samples: vec![0.0; 64],
        };
        let s = compute_spectrum(&frame, 8000, 4);
        assert_eq!(s.magnitudes.len(), 64 * 4 / 2 + 1);
        assert!(s.magnitudes.iter().all(|&m| m == 0.0));
        let w = WindowDescriptor::new(WindowKind::Hann, 64, 4);
        assert!(detect_sinusoids(&s, &w, 0.8, 5000.0).is_empty());
    }

    #[test]
    fn bin_centred_sine_rectangular() {
        let w = 64;
        let k = 5;
        let amp = 0.7;
        let frame = Frame {
            index: 0,
            start_time: 0.0,
            samples: (0..w)
                .map(|n| amp * (2.0 * PI * (k * n) as f64 / w as f64).cos())
                .collect(),
        };
        let s = compute_spectrum(&frame, 6400, 1);
        assert!((s.bin_hz - 100.0).abs() < 1e-12);
        for (i, &m) in s.magnitudes.iter().enumerate() {
            if i == k {
                assert!((m - w as f64 / 2.0 * amp).abs() < 1e-9);
            } else {
                assert!(m < 1e-9, "bin {i} = {m}");
            }
        }
    }

    #[test]
    fn pure_sine_one_peak() {
        let rate = 44100.0;
        let len = 1764;
        let frame = apply_window(&sine_frame(len, rate, &[(440.0, 0.8)]), WindowKind::Hann);
        let s = compute_spectrum(&frame, 44100, 4);
        let w = WindowDescriptor::new(WindowKind::Hann, len, 4);
        let peaks = detect_sinusoids(&s, &w, 0.8, 5000.0);
        assert_eq!(peaks.peaks.len(), 1, "{:?}", peaks.peaks);
        let p = peaks.peaks[0];
        assert!((p.frequency - 440.0).abs() <= 0.5, "{}", p.frequency);
        assert!(p.sinusoidality >= 0.99, "{}", p.sinusoidality);
        assert!((p.amplitude - 0.8).abs() < 0.01, "{}", p.amplitude);
    }

    #[test]
    fn two_sines_two_peaks() {
        let rate = 44100.0;
        let len = 1764;
        let frame = apply_window(
            &sine_frame(len, rate, &[(300.0, 0.4), (900.0, 0.4)]),
            WindowKind::Hann,
        );
        let s = compute_spectrum(&frame, 44100, 4);
        let w = WindowDescriptor::new(WindowKind::Hann, len, 4);
        let peaks = detect_sinusoids(&s, &w, 0.8, 5000.0);
        assert_eq!(peaks.peaks.len(), 2, "{:?}", peaks.peaks);
        assert!((peaks.peaks[0].frequency - 300.0).abs() <= 1.0);
        assert!((peaks.peaks[1].frequency - 900.0).abs() <= 1.0);
    }

    #[test]
    fn parabola_on_symmetric_points() {
        let (p, lp) = parabolic_log_peak(1.0, 2.0, 1.0);
        assert_eq!(p, 0.0);
        assert!((lp - 2.0f64.ln()).abs() < 1e-15);
        assert_eq!(parabolic_log_peak(0.0, 1.0, 0.5).0, 0.0);
    }
}
