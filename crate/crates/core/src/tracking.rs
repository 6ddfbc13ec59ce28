//! Melody identification by dynamic programming over the candidate lattice.
//!
//! The single tracker minimises the summed measurement cost of the chosen
//! candidates plus `lambda` times a capped pitch-jump cost. The dual tracker
//! follows two harmonically unrelated contours at once, which keeps a stable
//! accompaniment line from capturing the melody.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;


use crate::twm::F0Candidate;
use crate::voicing::VoicingFeatures;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum TrackingError {
    #[error("smoothness weight must be non-negative, got {0}")]
    NegativeLambda(f64),
    #[error("jump cap must be positive, got {0} cents")]
    BadCap(f64),
    #[error("harmonic tolerance must be non-negative, got {0} cents")]
    BadTolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingParams {
    pub lambda: f64,
    pub cap_cents: f64,
    /// Dual mode: pairs this close (in cents) to a small integer ratio are
    /// not tracked together.
    pub harmonic_tolerance_cents: f64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            lambda: 0.4,
            cap_cents: 400.0,
            harmonic_tolerance_cents: 30.0,
        }
    }
}

impl TrackingParams {
    pub fn validate(&self) -> Result<(), TrackingError> {
        if !(self.lambda >= 0.0) {
            return Err(TrackingError::NegativeLambda(self.lambda));
        }
        if !(self.cap_cents > 0.0) {
            return Err(TrackingError::BadCap(self.cap_cents));
        }
        if !(self.harmonic_tolerance_cents >= 0.0) {
            return Err(TrackingError::BadTolerance(self.harmonic_tolerance_cents));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourFrame {
    /// Frame timestamp in seconds (centre of the analysis window).
    pub time: f64,
    /// `None` is unvoiced.
    pub f0: Option<f64>,
    pub salience: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PitchContour {
    pub hop_seconds: f64,
    pub frames: Vec<ContourFrame>,
}

impl PitchContour {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn voiced_count(&self) -> usize {
        self.frames.iter().filter(|f| f.f0.is_some()).count()
    }

    pub fn f0s(&self) -> Vec<Option<f64>> {
        self.frames.iter().map(|f| f.f0).collect()
    }
}

/// Per-frame candidate lists plus the frame timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lattice {
    pub hop_seconds: f64,
    pub times: Vec<f64>,
    pub frames: Vec<Vec<F0Candidate>>,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    fn contour(&self, choice: impl Fn(usize) -> Option<F0Candidate>) -> PitchContour {
        PitchContour {
            hop_seconds: self.hop_seconds,
            frames: (0..self.frames.len())
                .map(|t| {
                    let c = choice(t);
                    ContourFrame {
                        time: self.times[t],
                        f0: c.map(|c| c.f0),
                        salience: c.map_or(0.0, |c| c.salience),
                    }
                })
                .collect(),
        }
    }
}

/// Capped, normalised pitch-jump cost in `[0, 1]`.
pub fn smoothness_cost(f_prev: f64, f_cur: f64, params: &TrackingParams) -> f64 {
    let jump = (1200.0 * (f_cur / f_prev).log2()).abs();
    jump.min(params.cap_cents) / params.cap_cents
}

fn transition(prev: Option<f64>, cur: Option<f64>, params: &TrackingParams) -> f64 {
    match (prev, cur) {
        (Some(a), Some(b)) => smoothness_cost(a, b, params),
        _ => 0.0,
    }
}

/// Optimal single path: chosen candidate index per frame (`None` for frames
/// without candidates) and its total cost.
pub fn single_path(
    frames: &[Vec<F0Candidate>],
    params: &TrackingParams,
) -> (Vec<Option<usize>>, f64) {
    if frames.is_empty() {
        return (Vec::new(), 0.0);
    }
    let states = |t: usize| -> Vec<Option<usize>> {
        if frames[t].is_empty() {
            vec![None]
        } else {
            (0..frames[t].len()).map(Some).collect()
        }
    };
    let freq = |t: usize, s: Option<usize>| s.map(|i| frames[t][i].f0);
    let meas = |t: usize, s: Option<usize>| s.map_or(0.0, |i| frames[t][i].cost());

    let mut layers: Vec<Vec<Option<usize>>> = Vec::with_capacity(frames.len());
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(frames.len());
    let first = states(0);
    let mut cost: Vec<f64> = first.iter().map(|&s| meas(0, s)).collect();
    back.push(vec![0; first.len()]);
    layers.push(first);

    for t in 1..frames.len() {
        let cur = states(t);
        let prev = &layers[t - 1];
        let mut next_cost = Vec::with_capacity(cur.len());
        let mut next_back = Vec::with_capacity(cur.len());
        for &s in &cur {
            let f = freq(t, s);
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for (i, &p) in prev.iter().enumerate() {
                let c = cost[i] + params.lambda * transition(freq(t - 1, p), f, params);
                if c < best {
                    best = c;
                    arg = i;
                }
            }
            next_cost.push(best + meas(t, s));
            next_back.push(arg);
        }
        cost = next_cost;
        back.push(next_back);
        layers.push(cur);
    }

    let (mut idx, total) = argmin(&cost);
    let mut path = vec![None; frames.len()];
    for t in (0..frames.len()).rev() {
        path[t] = layers[t][idx];
        idx = back[t][idx];
    }
    (path, total)
}

fn argmin(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

pub fn track_single(lattice: &Lattice, params: &TrackingParams) -> PitchContour {
    let (path, _) = single_path(&lattice.frames, params);
    lattice.contour(|t| path[t].map(|i| lattice.frames[t][i]))
}

/// True when `a` and `b` lie within `tolerance_cents` of a ratio `m:n`,
/// `m, n <= 4`.
pub fn harmonically_related(a: f64, b: f64, tolerance_cents: f64) -> bool {
    let ratio = if a > b { a / b } else { b / a };
    (1..=4u32).any(|m| {
        (1..=m).any(|n| {
            let target = m as f64 / n as f64;
            (1200.0 * (ratio / target).log2()).abs() <= tolerance_cents
        })
    })
}

/// One dual-tracker state: candidate indices for the lower (`a`) and upper
/// (`b`) contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualState {
    pub a: Option<usize>,
    pub b: Option<usize>,
}

impl DualState {
    /// The fully unvoiced state of a frame without candidates.
    pub fn is_placeholder(&self) -> bool {
        self.a.is_none() && self.b.is_none()
    }
}

/// Per-contour transition cost in dual mode. A contour that switches between
/// voiced and unvoiced pays a full capped jump, so a lone candidate cannot
/// hop between the two contours for free.
fn dual_transition(prev: Option<f64>, cur: Option<f64>, params: &TrackingParams) -> f64 {
    match (prev, cur) {
        (Some(a), Some(b)) => smoothness_cost(a, b, params),
        (None, None) => 0.0,
        _ => 1.0,
    }
}

/// Admissible states of one frame, in tie-break order.
///
/// Unrelated pairs come first, ordered by candidate index. A frame with no
/// admissible pair offers each candidate alone on either contour, and an
/// empty frame offers the fully unvoiced placeholder.
pub fn dual_states(candidates: &[F0Candidate], params: &TrackingParams) -> Vec<DualState> {
    let mut out = Vec::new();
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            let (fi, fj) = (candidates[i].f0, candidates[j].f0);
            if harmonically_related(fi, fj, params.harmonic_tolerance_cents) {
                continue;
            }
            let (a, b) = if fi <= fj { (i, j) } else { (j, i) };
            out.push(DualState {
                a: Some(a),
                b: Some(b),
            });
        }
    }
    if out.is_empty() {
        for i in 0..candidates.len() {
            out.push(DualState {
                a: Some(i),
                b: None,
            });
            out.push(DualState {
                a: None,
                b: Some(i),
            });
        }
    }
    if out.is_empty() {
        out.push(DualState { a: None, b: None });
    }
    out
}

/// Optimal dual path and its total cost.
pub fn dual_path(
    frames: &[Vec<F0Candidate>],
    params: &TrackingParams,
) -> (Vec<DualState>, f64) {
    if frames.is_empty() {
        return (Vec::new(), 0.0);
    }
    let freq = |t: usize, s: Option<usize>| s.map(|i| frames[t][i].f0);
    let meas = |t: usize, s: DualState| {
        s.a.map_or(0.0, |i| frames[t][i].cost()) + s.b.map_or(0.0, |i| frames[t][i].cost())
    };
    let trans = |t: usize, p: DualState, s: DualState| {
        if p.is_placeholder() || s.is_placeholder() {
            return 0.0;
        }
        dual_transition(freq(t - 1, p.a), freq(t, s.a), params)
            + dual_transition(freq(t - 1, p.b), freq(t, s.b), params)
    };

    let mut layers: Vec<Vec<DualState>> = Vec::with_capacity(frames.len());
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(frames.len());
    let first = dual_states(&frames[0], params);
    let mut cost: Vec<f64> = first.iter().map(|&s| meas(0, s)).collect();
    back.push(vec![0; first.len()]);
    layers.push(first);

    for t in 1..frames.len() {
        let cur = dual_states(&frames[t], params);
        let prev = &layers[t - 1];
        let mut next_cost = Vec::with_capacity(cur.len());
        let mut next_back = Vec::with_capacity(cur.len());
        for &s in &cur {
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for (i, &p) in prev.iter().enumerate() {
                let c = cost[i] + params.lambda * trans(t, p, s);
                if c < best {
                    best = c;
                    arg = i;
                }
            }
            next_cost.push(best + meas(t, s));
            next_back.push(arg);
        }
        cost = next_cost;
        back.push(next_back);
        layers.push(cur);
    }

    let (mut idx, total) = argmin(&cost);
    let mut path = vec![DualState { a: None, b: None }; frames.len()];
    for t in (0..frames.len()).rev() {
        path[t] = layers[t][idx];
        idx = back[t][idx];
    }
    (path, total)
}

pub fn track_dual(lattice: &Lattice, params: &TrackingParams) -> (PitchContour, PitchContour) {
    let (path, _) = dual_path(&lattice.frames, params);
    let a = lattice.contour(|t| path[t].a.map(|i| lattice.frames[t][i]));
    let b = lattice.contour(|t| path[t].b.map(|i| lattice.frames[t][i]));
    (a, b)
}

fn voiced_mean(contour: &PitchContour, features: &[VoicingFeatures], pick: fn(&VoicingFeatures) -> f64) -> f64 {
    let (sum, n) = contour
        .frames
        .iter()
        .zip(features)
        .filter(|(c, _)| c.f0.is_some())
        .fold((0.0, 0usize), |(s, n), (_, f)| (s + pick(f), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// z-scores of two values against their own mean and (population) spread.
fn pair_z(x: f64, y: f64) -> (f64, f64) {
    let half = 0.5 * (x - y);
    if half == 0.0 {
        (0.0, 0.0)
    } else {
        (half.signum(), -half.signum())
    }
}

/// Index (0 for A, 1 for B) of the contour that looks more like a voice:
/// higher harmonic energy plus higher pitch instability, each z-normalised
/// across the pair. Ties go to A.
pub fn choose_voice_contour(
    pair: (&PitchContour, &PitchContour),
    features: (&[VoicingFeatures], &[VoicingFeatures]),
) -> usize {
    let (a, b) = pair;
    match (a.voiced_count(), b.voiced_count()) {
        (0, 0) => return 0,
        (0, _) => return 1,
        (_, 0) => return 0,
        _ => {}
    }
    let (he_a, he_b) = pair_z(
        voiced_mean(a, features.0, |f| f.harmonic_energy),
        voiced_mean(b, features.1, |f| f.harmonic_energy),
    );
    let (in_a, in_b) = pair_z(
        voiced_mean(a, features.0, |f| f.instability),
        voiced_mean(b, features.1, |f| f.instability),
    );
    if he_b + in_b > he_a + in_a {
        1
    } else {
        0
    }
}

pub fn select_voice_contour(
    pair: (PitchContour, PitchContour),
    features: (&[VoicingFeatures], &[VoicingFeatures]),
) -> PitchContour {
    match choose_voice_contour((&pair.0, &pair.1), features) {
        1 => pair.1,
        _ => pair.0,
    }
}
