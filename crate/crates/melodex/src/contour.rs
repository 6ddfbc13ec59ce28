//! Contour interchange text: one `time<TAB>f0` line per frame, `0.00` for
//! unvoiced frames.

use std::fmt::Write as _;
use std::path::Path;

use melodex_core::{ContourFrame, PitchContour};

#[derive(Debug, thiserror::Error)]
pub enum ContourError {
    #[error("cannot read `{path}`")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("contour has no frames")]
    Empty,
}

pub fn format_contour(contour: &PitchContour) -> String {
    let mut out = String::with_capacity(24 * contour.len());
    for f in &contour.frames {
        match f.f0 {
            Some(hz) => writeln!(out, "{:.6}\t{:.4}", f.time, hz),
            None => writeln!(out, "{:.6}\t0.00", f.time),
        }
        .expect("writing to a String");
    }
    out
}

/// Parses contour text. Blank lines and `#` comments are skipped; the hop is
/// taken from the first two timestamps.
pub fn parse_contour(text: &str) -> Result<PitchContour, ContourError> {
    let mut frames = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| ContourError::Parse { line: i + 1, reason };
        let mut fields = line.split_whitespace();
        let (Some(t), Some(f), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(bad(format!("expected `time<TAB>f0`, got `{line}`")));
        };
        let time: f64 = t.parse().map_err(|_| bad(format!("time `{t}` is not a number")))?;
        let f0: f64 = f.parse().map_err(|_| bad(format!("f0 `{f}` is not a number")))?;
        if !time.is_finite() || !f0.is_finite() {
            return Err(bad("non-finite value".into()));
        }
        if f0 < 0.0 {
            return Err(bad(format!("negative f0 {f0}")));
        }
        if let Some(prev) = frames.last().map(|p: &ContourFrame| p.time) {
            if time <= prev {
                return Err(bad(format!("time {time} does not increase")));
            }
        }
        frames.push(ContourFrame {
            time,
            f0: (f0 > 0.0).then_some(f0),
            salience: 0.0,
        });
    }
    if frames.is_empty() {
        return Err(ContourError::Empty);
    }
    let hop_seconds = match frames.as_slice() {
        [a, b, ..] => b.time - a.time,
        _ => 0.01,
    };
    Ok(PitchContour { hop_seconds, frames })
}

pub fn load_contour(path: impl AsRef<Path>) -> Result<PitchContour, ContourError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ContourError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    parse_contour(&text)
}

pub fn save_contour(contour: &PitchContour, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, format_contour(contour))
}
