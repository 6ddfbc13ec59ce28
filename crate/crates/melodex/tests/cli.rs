use std::path::Path;
use std::process::{Command, Output};

use melodex::contour::load_contour;
use melodex::wav::{load_wav, write_wav};
use melodex_core::synthetic::HarmonicTone;
use melodex_core::AudioClip;

fn melodex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_melodex"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tone_wav(dir: &Path) -> std::path::PathBuf {
    let tone = HarmonicTone::new(220.0, 10).with_vibrato(50.0, 5.5);
    let clip = AudioClip::new(tone.render(16_000, 16_000).iter().map(|x| 0.3 * x).collect(), 16_000).unwrap();
    let p = dir.join("tone.wav");
    write_wav(&clip, &p).unwrap();
    p
}

#[test]
fn analyze_then_eval_identity() {
    let dir = tempfile::tempdir().unwrap();
    let wav = tone_wav(dir.path());
    let tsv = dir.path().join("c.tsv");
    let diag = dir.path().join("d.json");
    let out = melodex(&["analyze", s(&wav), "--out", s(&tsv), "--diagnostics", s(&diag)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let c = load_contour(&tsv).unwrap();
    assert!(c.voiced_count() as f64 > 0.95 * c.len() as f64);
    let d: serde_json::Value = serde_json::from_slice(&std::fs::read(&diag).unwrap()).unwrap();
    assert_eq!(d.as_array().unwrap().len(), c.len());

    let out = melodex(&["eval", s(&tsv), s(&tsv)]);
    assert_eq!(out.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for k in ["voicing_recall", "raw_pitch_accuracy", "raw_chroma_accuracy", "overall_accuracy"] {
        assert_eq!(m[k], 1.0, "{k}");
    }
    assert_eq!(m["voicing_false_alarm"], 0.0);
}

#[test]
fn analyze_prints_to_stdout_and_accepts_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let wav = tone_wav(dir.path());
    let cfg = dir.path().join("a.cfg");
    std::fs::write(&cfg, "# smoother\ntracking.lambda = 1.5\n").unwrap();
    let out = melodex(&["analyze", s(&wav), "--config", s(&cfg), "--mode", "dual", "--lean"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() > 90);
    assert!(text.lines().all(|l| l.split('\t').count() == 2));
}

#[test]
fn synth_writes_a_wav() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("c.tsv");
    std::fs::write(&tsv, (0..100).map(|i| format!("{:.3}\t440.0\n", 0.02 + 0.01 * i as f64)).collect::<String>()).unwrap();
    let wav = dir.path().join("o.wav");
    let out = melodex(&["synth", s(&tsv), "--out", s(&wav), "--mode", "harmonic", "--rate", "16000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let clip = load_wav(&wav).unwrap();
    assert_eq!(clip.sample_rate(), 16_000);
    assert!(clip.samples().iter().any(|&x| x.abs() > 0.3));
}

#[test]
fn gen_corpus_is_bit_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (d, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let out = melodex(&["gen-corpus", "--out", s(d), "--seed", seed, "--count", "2"]);
        assert_eq!(out.status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for n in &names {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n:?}");
    }
    assert_ne!(std::fs::read(a.join("clip_000.wav")).unwrap(), std::fs::read(c.join("clip_000.wav")).unwrap());
}

#[test]
fn usage_errors_exit_1() {
    for args in [
        vec!["analyze"],
        vec!["analyze", "x.wav", "--bogus"],
        vec!["frobnicate"],
        vec!["analyze", "x.wav", "--mode", "triple"],
        vec!["eval", "a.tsv"],
    ] {
        let out = melodex(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(melodex(&["--help"]).status.code(), Some(0));
}

#[test]
fn processing_errors_exit_2_and_name_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.wav");
    std::fs::write(&junk, b"definitely not audio").unwrap();
    let out = melodex(&["analyze", s(&junk)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed"));

    let missing = dir.path().join("missing.wav");
    let out = melodex(&["analyze", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.wav"));

    let bad = dir.path().join("bad.tsv");
    std::fs::write(&bad, "0.01\t100\n0.02\tabc\n").unwrap();
    let out = melodex(&["eval", s(&bad), s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let wav = tone_wav(dir.path());
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "twm.zeta = 1\n").unwrap();
    let out = melodex(&["analyze", s(&wav), "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("twm.zeta"));
}

#[test]
fn config_prints_a_parsable_default() {
    let out = melodex(&["config"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        melodex_core::AnalysisConfig::from_text(&text).unwrap(),
        melodex_core::AnalysisConfig::default()
    );
}
