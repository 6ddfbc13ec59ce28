//! Singing-voice detection from the predominant pitch.
//!
//! Two features per frame feed a pair of Gaussian mixtures (vocal and
//! non-vocal): the share of sinusoidal energy sitting on harmonics of the
//! tracked F0, and the local spread of the F0 trajectory in cents. Keyed and
//! drone instruments hold their pitch steady, voices do not.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::string::String;
use alloc::vec::Vec;


use crate::gmm::{train_gmm, GmmError, GmmModel};
use crate::spectral::FramePeaks;

/// Relative distance to a harmonic that still counts as "on" it.
pub const HARMONIC_TOLERANCE: f64 = 0.03;

pub const FEATURE_NAMES: [&str; 2] = ["harmonic_energy", "instability"];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VoicingFeatures {
    /// Share of sinusoidal energy on harmonics of the F0, in `[0, 1]`.
    pub harmonic_energy: f64,
    /// Local standard deviation of the F0 trajectory, in cents.
    pub instability: f64,
}

impl VoicingFeatures {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "harmonic_energy" => Some(self.harmonic_energy),
            "instability" => Some(self.instability),
            _ => None,
        }
    }

    /// Feature vector in the order of `names`; unknown names read as 0.
    pub fn project<S: AsRef<str>>(&self, names: &[S]) -> Vec<f64> {
        names
            .iter()
            .map(|n| self.get(n.as_ref()).unwrap_or(0.0))
            .collect()
    }
}

/// Energy on harmonics of `f0` (within 3 %) over all energy, both counted up
/// to `band_hz`.
pub fn harmonic_energy(peaks: &FramePeaks, f0: f64, band_hz: f64) -> f64 {
    let mut on = 0.0;
    let mut total = 0.0;
    for p in peaks.peaks.iter().filter(|p| p.frequency <= band_hz) {
        let e = p.amplitude * p.amplitude;
        total += e;
        let n = (p.frequency / f0).round().max(1.0);
        let target = n * f0;
        if (p.frequency - target).abs() <= HARMONIC_TOLERANCE * target && target <= band_hz {
            on += e;
        }
    }
    if total > 0.0 {
        (on / total).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Standard deviation, in cents, of the voiced F0s within `half_window`
/// frames of `index`, around their geometric mean. Fewer than three voiced
/// frames give 0.
pub fn pitch_instability(f0s: &[Option<f64>], index: usize, half_window: usize) -> f64 {
    let lo = index.saturating_sub(half_window);
    let hi = (index + half_window + 1).min(f0s.len());
    let logs: Vec<f64> = f0s[lo..hi].iter().flatten().map(|f| f.log2()).collect();
    if logs.len() < 3 {
        return 0.0;
    }
    // cents relative to the first frame, so a steady pitch is exactly 0
    let cents: Vec<f64> = logs.iter().map(|l| 1200.0 * (l - logs[0])).collect();
    let n = cents.len() as f64;
    let centre = cents.iter().sum::<f64>() / n;
    let var = cents.iter().map(|c| (c - centre) * (c - centre)).sum::<f64>() / n;
    var.sqrt()
}

/// Features for every frame of a contour; unvoiced frames get zeros.
pub fn contour_features(
    peaks: &[FramePeaks],
    f0s: &[Option<f64>],
    band_hz: f64,
    half_window: usize,
) -> Vec<VoicingFeatures> {
    f0s.iter()
        .enumerate()
        .map(|(i, f)| match f {
            Some(f0) => VoicingFeatures {
                harmonic_energy: peaks
                    .get(i)
                    .map_or(0.0, |p| harmonic_energy(p, *f0, band_hz.max(*f0))),
                instability: pitch_instability(f0s, i, half_window),
            },
            None => VoicingFeatures::default(),
        })
        .collect()
}

/// Vocal / non-vocal mixture pair over a named feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct VoicingModel {
    pub feature_names: Vec<String>,
    pub vocal: GmmModel,
    pub nonvocal: GmmModel,
}

impl VoicingModel {
    /// Trains both class models on labelled feature frames.
    pub fn train(
        feature_names: &[&str],
        vocal: &[VoicingFeatures],
        nonvocal: &[VoicingFeatures],
        components: usize,
        max_iters: usize,
        seed: u64,
    ) -> Result<Self, GmmError> {
        let project = |set: &[VoicingFeatures]| -> Vec<Vec<f64>> {
            set.iter().map(|f| f.project(feature_names)).collect()
        };
        let (vocal_model, _) = train_gmm(&project(vocal), components, max_iters, seed)?;
        let (nonvocal_model, _) =
            train_gmm(&project(nonvocal), components, max_iters, seed.wrapping_add(1))?;
        Ok(Self {
            feature_names: feature_names.iter().map(|s| String::from(*s)).collect(),
            vocal: vocal_model,
            nonvocal: nonvocal_model,
        })
    }

    /// `ln p(x | vocal) - ln p(x | non-vocal)`.
    pub fn log_ratio(&self, features: &VoicingFeatures) -> f64 {
        let x = features.project(&self.feature_names);
        self.vocal.log_likelihood(&x) - self.nonvocal.log_likelihood(&x)
    }

    pub fn classify(&self, features: &[VoicingFeatures], bias: f64, smooth_frames: usize) -> Vec<bool> {
        classify_frames(features, &self.vocal, &self.nonvocal, &self.feature_names, bias, smooth_frames)
    }
}

/// Vocal iff the vocal log-likelihood exceeds the non-vocal one by more than
/// `bias`, then median-filtered over `smooth_frames` with edge replication.
pub fn classify_frames<S: AsRef<str>>(
    features: &[VoicingFeatures],
    vocal: &GmmModel,
    nonvocal: &GmmModel,
    feature_names: &[S],
    bias: f64,
    smooth_frames: usize,
) -> Vec<bool> {
    let raw: Vec<bool> = features
        .iter()
        .map(|f| {
            let x = f.project(feature_names);
            vocal.log_likelihood(&x) > nonvocal.log_likelihood(&x) + bias
        })
        .collect();
    median_filter(&raw, smooth_frames)
}

/// Median smoothing over a centred window of odd length, ends replicated,
/// repeated until the labels stop changing (the root of the filter).
pub fn median_filter(labels: &[bool], window: usize) -> Vec<bool> {
    let mut current = labels.to_vec();
    if window <= 1 || labels.is_empty() {
        return current;
    }
    for _ in 0..labels.len() {
        let next = median_pass(&current, window / 2);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn median_pass(labels: &[bool], half: usize) -> Vec<bool> {
    let n = labels.len() as isize;
    let h = half as isize;
    (0..n)
        .map(|i| {
            let votes = (i - h..=i + h)
                .filter(|&j| labels[j.clamp(0, n - 1) as usize])
                .count();
            votes > half
        })
        .collect()
}
