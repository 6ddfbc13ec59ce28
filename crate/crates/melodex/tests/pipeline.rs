use melodex::model::builtin_model;
use melodex::run::{analyze_clip, analyze_region};
use melodex_core::pipeline::analyze_with_model;
use melodex_core::synthetic::{corpus_clip, CorpusParams};
use melodex_core::{analyze, AnalysisConfig, AudioClip};

fn corpus_audio() -> AudioClip {
    let p = CorpusParams {
        segments: 3,
        ..CorpusParams::default()
    };
    corpus_clip(5, &p).audio()
}

#[test]
fn parallel_matches_sequential_bit_for_bit() {
    let clip = corpus_audio();
    let mut cfg = AnalysisConfig::default();
    cfg.voicing.enabled = true;
    let model = builtin_model();
    let a = analyze_clip(&clip, &cfg, Some(model), true).unwrap();
    let b = analyze_with_model(&clip, &cfg, Some(model)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, analyze_clip(&clip, &cfg, Some(model), true).unwrap());
    let lean = analyze_clip(&clip, &cfg, Some(model), false).unwrap();
    assert!(lean.diagnostics.is_empty());
    assert_eq!(lean.contour, a.contour);
}

#[test]
fn voicing_only_removes_voiced_frames() {
    let clip = corpus_audio();
    let mut cfg = AnalysisConfig::default();
    let off = analyze_clip(&clip, &cfg, None, false).unwrap();
    cfg.voicing.enabled = true;
    let on = analyze_clip(&clip, &cfg, Some(builtin_model()), false).unwrap();
    assert!(on.contour.voiced_count() < off.contour.voiced_count());
    for (a, b) in on.contour.frames.iter().zip(&off.contour.frames) {
        if a.f0.is_some() {
            assert_eq!(a.f0, b.f0);
        }
    }
}

#[test]
fn missing_model_is_a_stage_error() {
    let mut cfg = AnalysisConfig::default();
    cfg.voicing.enabled = true;
    let err = analyze_clip(&corpus_audio(), &cfg, None, false).unwrap_err();
    assert!(err.to_string().contains("voicing"), "{err}");
}

#[test]
fn silence_is_entirely_unvoiced() {
    let clip = AudioClip::new(vec![0.0; 2 * 16_000], 16_000).unwrap();
    let r = analyze(&clip, &AnalysisConfig::default()).unwrap();
    assert!(!r.contour.is_empty());
    assert_eq!(r.contour.voiced_count(), 0);
    assert!(r.labels.iter().all(|&l| !l));
}

#[test]
fn region_run_reproduces_the_same_frames() {
    let clip = corpus_audio();
    let cfg = AnalysisConfig::default();
    let full = analyze_clip(&clip, &cfg, None, true).unwrap();
    let (first, part) = analyze_region(&clip, &cfg, None, 1.0, 1.5).unwrap();
    assert!((full.contour.frames[first].time - 1.0).abs() < 0.011);
    assert_eq!(part.contour.len(), part.diagnostics.len());
    for (i, f) in part.contour.frames.iter().enumerate() {
        assert_eq!(f.time, full.contour.frames[first + i].time);
        assert!((1.0..=1.5).contains(&f.time));
    }
    // the tracker sees fewer frames, but a clean stretch decodes the same way
    let agree = part
        .contour
        .frames
        .iter()
        .zip(&full.contour.frames[first..])
        .filter(|(a, b)| a.f0 == b.f0)
        .count();
    assert!(agree as f64 >= 0.9 * part.contour.len() as f64, "{agree}/{}", part.contour.len());
}
