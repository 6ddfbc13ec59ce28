use melodex_core::eval::evaluate;
use melodex_core::synth::{rendered_duration, synthesize_contour, SynthError, SynthMode};
use melodex_core::synthetic::HarmonicTone;
use melodex_core::{analyze, AnalysisConfig, AudioClip, ContourFrame, PitchContour};

fn vibrato_clip(rate: u32) -> AudioClip {
    let tone = HarmonicTone::new(220.0, 10).with_vibrato(50.0, 5.5);
    AudioClip::new(tone.render(rate, 2 * rate as usize), rate).unwrap()
}

#[test]
fn extract_synthesize_extract_agrees_within_10_cents() {
    let cfg = AnalysisConfig::default();
    let first = analyze(&vibrato_clip(16_000), &cfg).unwrap().contour;
    assert!(first.voiced_count() > 150);
    for mode in [SynthMode::Sine, SynthMode::Harmonic] {
        let clip = synthesize_contour(&first, 16_000, mode, 0.5).unwrap();
        let second = analyze(&clip, &cfg).unwrap().contour;
        assert_eq!(second.len(), first.len());
        let m = evaluate(&second, &first, 10.0).unwrap();
        assert!(m.raw_pitch_accuracy >= 0.98, "{mode:?}: {m:?}");
    }
}

#[test]
fn rendered_length_and_silence() {
    let c = PitchContour {
        hop_seconds: 0.01,
        frames: (0..50)
            .map(|i| ContourFrame {
                time: 0.02 + 0.01 * i as f64,
                f0: (10..30).contains(&i).then_some(300.0),
                salience: 0.0,
            })
            .collect(),
    };
    let clip = synthesize_contour(&c, 8000, SynthMode::Harmonic, 0.9).unwrap();
    assert_eq!(clip.len(), (rendered_duration(&c) * 8000.0).round() as usize);
    let x = clip.samples();
    assert!(x[..800].iter().all(|&v| v == 0.0));
    assert!(x.iter().all(|v| v.abs() <= 0.9 + 1e-12));
    // fades: no sample jump larger than one oscillator step at full amplitude
    let step = 0.9 * 2.0 * std::f64::consts::PI * 1500.0 / 8000.0;
    for w in x.windows(2) {
        assert!((w[1] - w[0]).abs() <= step);
    }
    assert_eq!(
        synthesize_contour(&c, 4000, SynthMode::Sine, 0.5).unwrap_err(),
        SynthError::SampleRateTooLow(4000)
    );
}
