//! Melody-extraction metrics against a reference contour.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;


use crate::tracking::PitchContour;

pub const DEFAULT_TOLERANCE_CENTS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("reference contour has no frames")]
    EmptyReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MelodyMetrics {
    pub voicing_recall: f64,
    pub voicing_false_alarm: f64,
    pub raw_pitch_accuracy: f64,
    pub raw_chroma_accuracy: f64,
    pub overall_accuracy: f64,
}

/// Cent difference folded into `(-600, 600]`.
pub fn fold_octave(cents: f64) -> f64 {
    let mut c = cents % 1200.0;
    if c > 600.0 {
        c -= 1200.0;
    } else if c <= -600.0 {
        c += 1200.0;
    }
    c
}

/// Estimate F0 for each reference frame, taken from the nearest estimate
/// frame in time.
pub fn align_to_reference(estimate: &PitchContour, reference: &PitchContour) -> Vec<Option<f64>> {
    let est = &estimate.frames;
    reference
        .frames
        .iter()
        .map(|r| {
            if est.is_empty() {
                return None;
            }
            let idx = est.partition_point(|e| e.time < r.time);
            let pick = if idx == 0 {
                0
            } else if idx == est.len() {
                est.len() - 1
            } else if (est[idx].time - r.time) < (r.time - est[idx - 1].time) {
                idx
            } else {
                idx - 1
            };
            est[pick].f0
        })
        .collect()
}

/// True when both contours share hop and frame times (within `tolerance`
/// seconds) over their common length.
pub fn grids_match(a: &PitchContour, b: &PitchContour, tolerance: f64) -> bool {
    (a.hop_seconds - b.hop_seconds).abs() <= tolerance
        && a
            .frames
            .iter()
            .zip(&b.frames)
            .all(|(x, y)| (x.time - y.time).abs() <= tolerance)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate(
    estimate: &PitchContour,
    reference: &PitchContour,
    tolerance_cents: f64,
) -> Result<MelodyMetrics, EvalError> {
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let aligned = align_to_reference(estimate, reference);
    let (mut voiced_ref, mut unvoiced_ref) = (0, 0);
    let (mut hits, mut false_alarms) = (0, 0);
    let (mut pitch_ok, mut chroma_ok, mut correct) = (0, 0, 0);
    for (r, e) in reference.frames.iter().zip(&aligned) {
        match (r.f0, *e) {
            (Some(fr), est) => {
                voiced_ref += 1;
                if let Some(fe) = est {
                    hits += 1;
                    let diff = 1200.0 * (fe / fr).log2();
                    if diff.abs() <= tolerance_cents {
                        pitch_ok += 1;
                        correct += 1;
                    }
                    if fold_octave(diff).abs() <= tolerance_cents {
                        chroma_ok += 1;
                    }
                }
            }
            (None, est) => {
                unvoiced_ref += 1;
                if est.is_some() {
                    false_alarms += 1;
                } else {
                    correct += 1;
                }
            }
        }
    }
    Ok(MelodyMetrics {
        voicing_recall: ratio(hits, voiced_ref),
        voicing_false_alarm: ratio(false_alarms, unvoiced_ref),
        raw_pitch_accuracy: ratio(pitch_ok, voiced_ref),
        raw_chroma_accuracy: ratio(chroma_ok, voiced_ref),
        overall_accuracy: ratio(correct, reference.len()),
    })
}
