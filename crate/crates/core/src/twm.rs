//! Two-way mismatch (TWM) salience for trial fundamentals.
//!
//! For a trial F0 the error combines two terms. Predicted-to-measured looks
//! at every predicted harmonic and charges the frequency gap to its nearest
//! measured peak. Measured-to-predicted charges each measured peak's gap to
//! its nearest predicted harmonic. Both terms weight gaps by `f^-p` and by
//! relative peak amplitude. A fundamental whose harmonics cover a wide band
//! of the measured peaks therefore scores well even when individual
//! partials are weak, and a loud but spectrally sparse source does not.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;


use crate::spectral::{FramePeaks, SpectralPeak};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum TwmError {
    #[error("TWM weights p, q, r and rho must be non-negative")]
    NegativeWeight,
    #[error("F0 range is invalid: min {min} Hz, max {max} Hz")]
    BadRange { min: f64, max: f64 },
    #[error("grid resolution must be positive, got {0} cents")]
    BadResolution(f64),
    #[error("maximum harmonic frequency must be positive, got {0} Hz")]
    BadHarmonicCap(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwmParams {
    /// Frequency-weighting exponent.
    pub p: f64,
    /// Coupling between mismatch and amplitude.
    pub q: f64,
    /// Amplitude reward.
    pub r: f64,
    /// Weight of the measured-to-predicted term.
    pub rho: f64,
    /// Upper edge of the matching band; higher peaks are ignored.
    pub max_harmonic_freq: f64,
    pub f0_min: f64,
    pub f0_max: f64,
    pub resolution_cents: f64,
    /// Error reported when a frame has no peaks at all.
    pub no_evidence_error: f64,
}

impl Default for TwmParams {
    fn default() -> Self {
        Self {
            p: 0.5,
            q: 1.4,
            r: 0.5,
            rho: 0.33,
            max_harmonic_freq: 5000.0,
            f0_min: 70.0,
            f0_max: 1120.0,
            resolution_cents: 10.0,
            no_evidence_error: 1.0e3,
        }
    }
}

impl TwmParams {
    pub fn validate(&self) -> Result<(), TwmError> {
        if [self.p, self.q, self.r, self.rho]
            .iter()
            .any(|w| !(*w >= 0.0))
        {
            return Err(TwmError::NegativeWeight);
        }
        if !(self.f0_min > 0.0 && self.f0_min <= self.f0_max && self.f0_max.is_finite()) {
            return Err(TwmError::BadRange {
                min: self.f0_min,
                max: self.f0_max,
            });
        }
        if !(self.resolution_cents > 0.0) {
            return Err(TwmError::BadResolution(self.resolution_cents));
        }
        if !(self.max_harmonic_freq > 0.0) {
            return Err(TwmError::BadHarmonicCap(self.max_harmonic_freq));
        }
        Ok(())
    }
}

/// A ranked fundamental estimate for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F0Candidate {
    pub f0: f64,
    pub twm_error: f64,
    /// `-(twm_error / worst error among the frame's candidates)`, in `[-1, 0]`.
    pub salience: f64,
}

impl F0Candidate {
    /// Measurement cost for tracking, in `[0, 1]`.
    pub fn cost(&self) -> f64 {
        -self.salience
    }
}

/// Log-spaced trial fundamentals from `f0_min` to `f0_max`, both included.
pub fn generate_trial_grid(params: &TwmParams) -> Vec<f64> {
    let span = 1200.0 * (params.f0_max / params.f0_min).log2();
    let steps = (span / params.resolution_cents + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps)
        .map(|i| params.f0_min * (i as f64 * params.resolution_cents / 1200.0).exp2())
        .collect();
    let last = *grid.last().expect("grid has at least one point");
    if 1200.0 * (params.f0_max / last).log2() > 1e-6 {
        grid.push(params.f0_max);
    } else if let Some(l) = grid.last_mut() {
        *l = params.f0_max;
    }
    grid
}

/// Number of predicted harmonics for a trial F0: enough to span the
/// in-band measured peaks.
fn harmonic_count(top_peak: f64, trial_f0: f64) -> usize {
    ((top_peak / trial_f0).round() as usize).max(1)
}

/// Signed mismatch before flooring. Lower is better; `None` without peaks.
/// Peaks above `max_harmonic_freq` take no part: no predicted harmonic could
/// answer them, and counting them would make the error jump wherever the
/// harmonic cap changes.
pub fn twm_mismatch(peaks: &FramePeaks, trial_f0: f64, params: &TwmParams) -> Option<f64> {
    let band = peaks.peaks.partition_point(|p| p.frequency <= params.max_harmonic_freq);
    let measured = &peaks.peaks[..band];
    let top = measured.last()?.frequency;
    let a_max = measured.iter().map(|p| p.amplitude).fold(0.0, f64::max);
    if !(a_max > 0.0) {
        return None;
    }
    let n_pred = harmonic_count(top, trial_f0);

    let mut ptm = 0.0;
    for n in 1..=n_pred {
        let f = n as f64 * trial_f0;
        let idx = nearest_peak(measured, f);
        let gap = (f - measured[idx].frequency).abs();
        let rel = measured[idx].amplitude / a_max;
        let weighted = gap * f.powf(-params.p);
        ptm += weighted + rel * (params.q * weighted - params.r);
    }
    ptm /= n_pred as f64;

    let mut mtp = 0.0;
    let top_harmonic = n_pred as f64 * trial_f0;
    for peak in measured {
        let g = peak.frequency;
        let nearest = if g >= top_harmonic {
            top_harmonic
        } else {
            (g / trial_f0).round().max(1.0) * trial_f0
        };
        let gap = (g - nearest).abs();
        let rel = peak.amplitude / a_max;
        let weighted = gap * g.powf(-params.p);
        mtp += weighted + rel * (params.q * weighted - params.r);
    }
    mtp /= measured.len() as f64;

    Some(ptm + params.rho * mtp)
}

/// Two-way mismatch error, floored at zero. Frames without peaks get
/// `params.no_evidence_error`.
pub fn twm_error(peaks: &FramePeaks, trial_f0: f64, params: &TwmParams) -> f64 {
    match twm_mismatch(peaks, trial_f0, params) {
        Some(e) => e.max(0.0),
        None => params.no_evidence_error,
    }
}

fn nearest_peak(list: &[SpectralPeak], f: f64) -> usize {
    let idx = list.partition_point(|p| p.frequency < f);
    if idx == 0 {
        0
    } else if idx == list.len() {
        list.len() - 1
    } else if (list[idx].frequency - f) < (f - list[idx - 1].frequency) {
        idx
    } else {
        idx - 1
    }
}

const GOLDEN_ITERATIONS: usize = 24;

/// Golden-section search for the mismatch minimum in `[lo, hi]`, in log
/// frequency. Returns `(f0, mismatch)`.
fn golden_refine(
    peaks: &FramePeaks,
    params: &TwmParams,
    lo: f64,
    hi: f64,
) -> (f64, f64) {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let eval = |log_f: f64| twm_mismatch(peaks, log_f.exp2(), params).unwrap_or(f64::INFINITY);
    let (mut a, mut b) = (lo.log2(), hi.log2());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    if fc <= fd {
        (c.exp2(), fc)
    } else {
        (d.exp2(), fd)
    }
}

/// Precomputed trial grid, reused across frames.
#[derive(Debug, Clone)]
pub struct TwmEstimator {
    params: TwmParams,
    grid: Vec<f64>,
}

impl TwmEstimator {
    pub fn new(params: TwmParams) -> Result<Self, TwmError> {
        params.validate()?;
        Ok(Self {
            grid: generate_trial_grid(&params),
            params,
        })
    }

    pub fn params(&self) -> &TwmParams {
        &self.params
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Signed mismatch at every grid point.
    pub fn scan(&self, peaks: &FramePeaks) -> Option<Vec<f64>> {
        if peaks.is_empty() {
            return None;
        }
        self.grid
            .iter()
            .map(|&f| twm_mismatch(peaks, f, &self.params))
            .collect()
    }

    /// Up to `top_m` refined local minima of the mismatch, best first.
    pub fn candidates(&self, peaks: &FramePeaks, top_m: usize) -> Vec<F0Candidate> {
        let Some(errors) = self.scan(peaks) else {
            return Vec::new();
        };
        let n = errors.len();
        let mut minima: Vec<usize> = (0..n)
            .filter(|&i| {
                let left = i == 0 || errors[i] < errors[i - 1];
                let right = i + 1 == n || errors[i] <= errors[i + 1];
                left && right
            })
            .collect();
        minima.sort_by(|&a, &b| errors[a].total_cmp(&errors[b]).then(a.cmp(&b)));
        minima.truncate(2 * top_m.max(1));

        let mut refined: Vec<(f64, f64)> = minima
            .iter()
            .map(|&i| {
                let lo = self.grid[i.saturating_sub(1)];
                let hi = self.grid[(i + 1).min(n - 1)];
                let (f, e) = if hi > lo {
                    golden_refine(peaks, &self.params, lo, hi)
                } else {
                    (self.grid[i], errors[i])
                };
                if e < errors[i] {
                    (f, e)
                } else {
                    (self.grid[i], errors[i])
                }
            })
            .collect();
        refined.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));

        let half_step = 0.5 * self.params.resolution_cents;
        let mut chosen: Vec<(f64, f64)> = Vec::with_capacity(top_m);
        for (f, e) in refined {
            if chosen.len() == top_m {
                break;
            }
            if chosen
                .iter()
                .all(|&(g, _)| (1200.0 * (f / g).log2()).abs() > half_step)
            {
                chosen.push((f, e));
            }
        }

        let floored: Vec<f64> = chosen.iter().map(|&(_, e)| e.max(0.0)).collect();
        let worst = floored.iter().copied().fold(0.0, f64::max);
        chosen
            .iter()
            .zip(floored)
            .map(|(&(f0, _), err)| F0Candidate {
                f0,
                twm_error: err,
                salience: if worst > 0.0 { -(err / worst) } else { 0.0 },
            })
            .collect()
    }
}

/// Ranked F0 candidates for one frame; empty when the frame has no peaks.
pub fn multi_f0(
    peaks: &FramePeaks,
    params: &TwmParams,
    top_m: usize,
) -> Result<Vec<F0Candidate>, TwmError> {
    Ok(TwmEstimator::new(*params)?.candidates(peaks, top_m))
}
