use melodex_core::spectral::{FramePeaks, SpectralPeak};
use melodex_core::twm::{generate_trial_grid, multi_f0, twm_error, twm_mismatch, TwmEstimator};
use melodex_core::TwmParams;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn peaks(list: &[(f64, f64)]) -> FramePeaks {
    let mut v: Vec<SpectralPeak> = list
        .iter()
        .map(|&(frequency, amplitude)| SpectralPeak {
            frequency,
            amplitude,
            sinusoidality: 1.0,
        })
        .collect();
    v.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    FramePeaks {
        frame_index: 0,
        start_time: 0.0,
        peaks: v,
    }
}

fn series(f0: f64, partials: usize) -> FramePeaks {
    let list: Vec<(f64, f64)> = (1..=partials)
        .map(|n| (n as f64 * f0, 1.0 / n as f64))
        .filter(|&(f, _)| f <= 5000.0)
        .collect();
    peaks(&list)
}

/// Straight transcription of the two-way mismatch sums, O(N * K) with
/// linear nearest-neighbour searches.
fn oracle_mismatch(list: &[(f64, f64)], f0: f64, p: &TwmParams) -> f64 {
    let list: Vec<(f64, f64)> = list.iter().copied().filter(|x| x.0 <= p.max_harmonic_freq).collect();
    let a_max = list.iter().map(|x| x.1).fold(0.0, f64::max);
    let top = list.iter().map(|x| x.0).fold(0.0, f64::max);
    let n_pred = ((top / f0).round() as usize).max(1);
    let term = |gap: f64, f: f64, a: f64| {
        let w = gap * f.powf(-p.p);
        w + (a / a_max) * (p.q * w - p.r)
    };
    let mut ptm = 0.0;
    for n in 1..=n_pred {
        let f = n as f64 * f0;
        let (fk, ak) = list
            .iter()
            .copied()
            .min_by(|x, y| (x.0 - f).abs().total_cmp(&(y.0 - f).abs()))
            .unwrap();
        ptm += term((f - fk).abs(), f, ak);
    }
    let mut mtp = 0.0;
    for &(fk, ak) in &list {
        let nearest = (1..=n_pred)
            .map(|n| n as f64 * f0)
            .min_by(|x, y| (x - fk).abs().total_cmp(&(y - fk).abs()))
            .unwrap();
        mtp += term((fk - nearest).abs(), fk, ak);
    }
    ptm / n_pred as f64 + p.rho * mtp / list.len() as f64
}

fn cents(a: f64, b: f64) -> f64 {
    1200.0 * (b / a).log2()
}

#[test]
fn mismatch_matches_transcribed_formula() {
    let p = TwmParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let k = rng.gen_range(1..20);
        let list: Vec<(f64, f64)> = (0..k)
            .map(|_| (rng.gen_range(60.0..5000.0), rng.gen_range(0.01..1.0)))
            .collect();
        let fp = peaks(&list);
        for _ in 0..5 {
            let f0 = rng.gen_range(70.0..1120.0);
            let want = oracle_mismatch(&list, f0, &p);
            let got = twm_mismatch(&fp, f0, &p).unwrap();
            assert!((want - got).abs() <= 1e-9 * want.abs().max(1.0), "{want} vs {got}");
        }
    }
}

#[test]
fn default_grid_has_481_points() {
    let g = generate_trial_grid(&TwmParams::default());
    assert_eq!(g.len(), 481);
    assert_eq!(g[0], 70.0);
    assert_eq!(*g.last().unwrap(), 1120.0);
    for w in g.windows(2) {
        assert!((cents(w[0], w[1]) - 10.0).abs() < 1e-6);
    }
}

#[test]
fn no_peaks_gives_sentinel_and_no_candidates() {
    let p = TwmParams::default();
    let empty = peaks(&[]);
    assert_eq!(twm_error(&empty, 200.0, &p), p.no_evidence_error);
    assert!(multi_f0(&empty, &p, 5).unwrap().is_empty());
}

#[test]
fn exact_series_is_found_and_agrees_with_grid_scan() {
    let p = TwmParams::default();
    let est = TwmEstimator::new(p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut hits = 0;
    for _ in 0..100 {
        let f0 = rng.gen_range(80.0..1000.0);
        let fp = series(f0, rng.gen_range(5..=15));
        let cands = est.candidates(&fp, 5);
        let top = cands[0].f0;
        if cents(f0, top).abs() <= 10.0 {
            hits += 1;
        }
        // grid oracle: argmin of the transcribed mismatch over the trial grid
        let list: Vec<(f64, f64)> = fp.peaks.iter().map(|p| (p.frequency, p.amplitude)).collect();
        let (best, _) = est
            .grid()
            .iter()
            .map(|&g| (g, oracle_mismatch(&list, g, &p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(cents(best, top).abs() <= p.resolution_cents + 1e-9, "{f0}: grid {best}, refined {top}");
    }
    assert!(hits >= 99, "{hits}/100");
}

#[test]
fn candidates_are_ranked_and_salience_normalised() {
    let p = TwmParams::default();
    let mut list: Vec<(f64, f64)> = (1..=8).map(|n| (220.0 * n as f64, 1.0 / n as f64)).collect();
    list.extend([(150.0, 0.8), (300.0 * 1.01, 0.4), (450.0, 0.3)]);
    let c = multi_f0(&peaks(&list), &p, 5).unwrap();
    assert!(!c.is_empty() && c.len() <= 5);
    for w in c.windows(2) {
        assert!(w[0].twm_error <= w[1].twm_error);
    }
    for x in &c {
        assert!((-1.0..=0.0).contains(&x.salience));
        assert!(x.twm_error >= 0.0);
        assert!(x.f0 >= p.f0_min && x.f0 <= p.f0_max);
    }
    assert!(c.iter().any(|x| x.salience == -1.0));
    assert!(c[..2].iter().any(|x| cents(220.0, x.f0).abs() < 10.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn amplitude_scale_invariant(f0 in 80.0f64..900.0, trial in 70.0f64..1120.0, k in 0.01f64..100.0) {
        let p = TwmParams::default();
        let a = series(f0, 8);
        let mut b = a.clone();
        b.peaks.iter_mut().for_each(|x| x.amplitude *= k);
        let (ea, eb) = (twm_error(&a, trial, &p), twm_error(&b, trial, &p));
        prop_assert!((ea - eb).abs() <= 1e-9 * ea.max(1.0));
    }

    #[test]
    fn error_is_non_negative(seed in any::<u64>(), trial in 70.0f64..1120.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let list: Vec<(f64, f64)> = (0..rng.gen_range(1..12))
            .map(|_| (rng.gen_range(50.0..5000.0), rng.gen_range(0.0..1.0)))
            .collect();
        prop_assert!(twm_error(&peaks(&list), trial, &TwmParams::default()) >= 0.0);
    }

    #[test]
    fn true_f0_beats_its_octaves(f0 in 150.0f64..500.0, partials in 6usize..12) {
        let p = TwmParams::default();
        let fp = series(f0, partials);
        let e = twm_mismatch(&fp, f0, &p).unwrap();
        prop_assert!(e < twm_mismatch(&fp, 2.0 * f0, &p).unwrap());
        prop_assert!(e < twm_mismatch(&fp, 0.5 * f0, &p).unwrap());
    }
}
