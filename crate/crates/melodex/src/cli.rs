//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 when processing fails.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use melodex_core::synth::{synthesize_contour, SynthMode};
use melodex_core::synthetic::CorpusParams;
use melodex_core::{evaluate, AnalysisConfig, TrackingMode};
use serde_json::json;

use crate::contour::{format_contour, load_contour, save_contour};
use crate::corpus::{load_corpus_dir, synthetic_clips, train_voicing, write_corpus, TRAIN_CLIPS, TRAIN_SEED};
use crate::model::save_model;
use crate::run::{analyze_clip, load_config, resolve_model};
use crate::service::{self, ServiceConfig, DEFAULT_MAX_UPLOAD_MB, DEFAULT_PORT};
use crate::wav::{load_wav, write_wav};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "melodex", version, about = "Predominant-melody extraction workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Single,
    Dual,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthArg {
    Sine,
    Harmonic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the melody contour of a WAV file.
    Analyze {
        wav: PathBuf,
        /// `key = value` configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Contour output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Turn on vocal / non-vocal classification.
        #[arg(long)]
        voicing: bool,
        /// Voicing model JSON (implies --voicing).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Per-frame candidates and features as JSON.
        #[arg(long, conflicts_with = "lean")]
        diagnostics: Option<PathBuf>,
        /// Drop per-frame diagnostics.
        #[arg(long)]
        lean: bool,
    },
    /// Render a contour as audio.
    Synth {
        contour: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "sine")]
        mode: SynthArg,
        #[arg(long, default_value_t = 44_100)]
        rate: u32,
        #[arg(long, default_value_t = 0.5)]
        amplitude: f64,
    },
    /// Score an estimated contour against a reference.
    Eval {
        estimate: PathBuf,
        reference: PathBuf,
        #[arg(long, default_value_t = 50.0)]
        tolerance_cents: f64,
    },
    /// Train the vocal / non-vocal model.
    TrainSvd {
        /// Corpus directory, or `synthetic` for the built-in generator.
        #[arg(long)]
        corpus: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = TRAIN_SEED)]
        seed: u64,
        /// Clips to generate with `--corpus synthetic`.
        #[arg(long, default_value_t = TRAIN_CLIPS)]
        clips: usize,
    },
    /// Write a labelled synthetic corpus.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        count: usize,
    },
    /// Print the default configuration file.
    Config,
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = DEFAULT_MAX_UPLOAD_MB)]
        max_upload_mb: usize,
        /// Directory of built UI assets served at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Analyze {
            wav,
            config,
            out,
            mode,
            voicing,
            model,
            diagnostics,
            lean,
        } => {
            let mut cfg = match &config {
                Some(p) => load_config(p)?,
                None => AnalysisConfig::default(),
            };
            if let Some(m) = mode {
                cfg.tracking_mode = match m {
                    ModeArg::Single => TrackingMode::Single,
                    ModeArg::Dual => TrackingMode::Dual,
                };
            }
            if let Some(m) = &model {
                cfg.voicing.model = m.display().to_string();
            }
            cfg.voicing.enabled |= voicing || model.is_some();
            let clip = load_wav(&wav)?;
            let model = resolve_model(&cfg)?;
            let result = analyze_clip(&clip, &cfg, model.as_ref(), !lean)
                .with_context(|| format!("analysing `{}`", wav.display()))?;
            match &out {
                Some(p) => save_contour(&result.contour, p).with_context(|| format!("writing `{}`", p.display()))?,
                None => print!("{}", format_contour(&result.contour)),
            }
            if let Some(p) = diagnostics {
                let frames: Vec<_> = result
                    .contour
                    .frames
                    .iter()
                    .zip(&result.diagnostics)
                    .map(|(f, d)| {
                        json!({
                            "time": f.time,
                            "peak_count": d.peak_count,
                            "harmonic_energy": d.features.harmonic_energy,
                            "instability": d.features.instability,
                            "candidates": d.candidates.iter().map(|c| [c.f0, c.twm_error]).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                std::fs::write(&p, serde_json::to_string(&frames)?)
                    .with_context(|| format!("writing `{}`", p.display()))?;
            }
            Ok(())
        }
        Command::Synth {
            contour,
            out,
            mode,
            rate,
            amplitude,
        } => {
            let c = load_contour(&contour)?;
            let mode = match mode {
                SynthArg::Sine => SynthMode::Sine,
                SynthArg::Harmonic => SynthMode::Harmonic,
            };
            let clip = synthesize_contour(&c, rate, mode, amplitude)?;
            write_wav(&clip, &out)?;
            Ok(())
        }
        Command::Eval {
            estimate,
            reference,
            tolerance_cents,
        } => {
            let e = load_contour(&estimate)?;
            let r = load_contour(&reference)?;
            let m = evaluate(&e, &r, tolerance_cents)?;
            println!(
                "{}",
                json!({
                    "voicing_recall": m.voicing_recall,
                    "voicing_false_alarm": m.voicing_false_alarm,
                    "raw_pitch_accuracy": m.raw_pitch_accuracy,
                    "raw_chroma_accuracy": m.raw_chroma_accuracy,
                    "overall_accuracy": m.overall_accuracy,
                })
            );
            Ok(())
        }
        Command::TrainSvd {
            corpus,
            out,
            seed,
            clips,
        } => {
            let set = if corpus == "synthetic" {
                synthetic_clips(seed, clips, &CorpusParams::default())
            } else {
                load_corpus_dir(corpus.as_ref())?
            };
            let model = train_voicing(&set, seed)?;
            save_model(&model, &out).with_context(|| format!("writing `{}`", out.display()))?;
            Ok(())
        }
        Command::GenCorpus { out, seed, count } => {
            let files = write_corpus(&out, seed, count, &CorpusParams::default())?;
            eprintln!("wrote {} clips to {}", files.len(), out.display());
            Ok(())
        }
        Command::Config => {
            print!("{}", AnalysisConfig::default().to_text());
            Ok(())
        }
        Command::Serve {
            port,
            host,
            max_upload_mb,
            static_dir,
        } => {
            let cfg = ServiceConfig {
                max_upload_bytes: max_upload_mb << 20,
                static_dir,
                ..ServiceConfig::default()
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(&host, port, cfg))?;
            Ok(())
        }
    }
}
