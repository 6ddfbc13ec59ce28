//! Analysis configuration and its flat `key = value` text form.
//!
//! ```text
//! # comments start with '#'
//! frame.hop_seconds = 0.01
//! tracking.mode = dual
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;
use core::str::FromStr;

use crate::audio::WindowKind;
use crate::tracking::TrackingParams;
use crate::twm::TwmParams;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: alloc::boxed::Box<ConfigError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrackingMode {
    #[default]
    Single,
    Dual,
}

impl TrackingMode {
    pub fn name(self) -> &'static str {
        match self {
            TrackingMode::Single => "single",
            TrackingMode::Dual => "dual",
        }
    }
}

impl FromStr for TrackingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(TrackingMode::Single),
            "dual" => Ok(TrackingMode::Dual),
            _ => Err(String::from("expected `single` or `dual`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoicingConfig {
    pub enabled: bool,
    /// Path of a model file; empty means "use the built-in synthetic model".
    pub model: String,
    pub bias: f64,
    pub smooth_frames: usize,
    pub band_hz: f64,
    pub instability_half_window: usize,
}

impl Default for VoicingConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            model: String::new(),
            bias: 0.0,
            smooth_frames: 11,
            band_hz: 5000.0,
            instability_half_window: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub window_seconds: f64,
    pub hop_seconds: f64,
    pub window: WindowKind,
    pub zero_pad_factor: usize,
    pub sinusoidality_threshold: f64,
    pub max_peak_frequency: f64,
    pub twm: TwmParams,
    pub top_m: usize,
    pub tracking: TrackingParams,
    pub tracking_mode: TrackingMode,
    pub voicing: VoicingConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window_seconds: 0.04,
            hop_seconds: 0.01,
            window: WindowKind::Hann,
            zero_pad_factor: 4,
            sinusoidality_threshold: 0.8,
            max_peak_frequency: 5000.0,
            twm: TwmParams::default(),
            top_m: 5,
            tracking: TrackingParams::default(),
            tracking_mode: TrackingMode::Single,
            voicing: VoicingConfig::default(),
        }
    }
}

const KEYS: &[(&str, &str)] = &[
    ("frame.window_seconds", "analysis window length, seconds"),
    ("frame.hop_seconds", "hop between frames, seconds"),
    ("frame.window", "window function: hann | rectangular"),
    ("spectral.zero_pad", "zero-padding factor of the transform"),
    ("spectral.sinusoidality_threshold", "main-lobe match needed to accept a peak, 0..1"),
    ("spectral.max_frequency", "highest peak frequency kept, Hz"),
    ("twm.p", "frequency-weighting exponent"),
    ("twm.q", "mismatch/amplitude coupling"),
    ("twm.r", "amplitude reward"),
    ("twm.rho", "weight of the measured-to-predicted term"),
    ("twm.max_harmonic_freq", "upper edge of the harmonic matching band, Hz"),
    ("twm.f0_min", "lowest trial F0, Hz"),
    ("twm.f0_max", "highest trial F0, Hz"),
    ("twm.resolution_cents", "trial grid step, cents"),
    ("twm.top_m", "candidates kept per frame"),
    ("twm.no_evidence_error", "error reported for frames without peaks"),
    ("tracking.mode", "single | dual"),
    ("tracking.lambda", "smoothness weight"),
    ("tracking.cap_cents", "pitch jump at which the smoothness cost saturates"),
    ("tracking.harmonic_tolerance_cents", "dual mode: exclusion band around integer ratios"),
    ("voicing.enabled", "classify frames as vocal / non-vocal"),
    ("voicing.model", "voicing model file; empty for the built-in model"),
    ("voicing.bias", "log-likelihood margin the vocal model must win by"),
    ("voicing.smooth_frames", "median smoothing length, odd"),
    ("voicing.band_hz", "upper band edge for the harmonic energy feature, Hz"),
    ("voicing.instability_half_window", "frames on each side for pitch instability"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse::<T>().map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: format!("expected {}", core::any::type_name::<T>()),
    })
}

fn invalid(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

impl AnalysisConfig {
    /// Every accepted key, in file order.
    pub fn keys() -> impl Iterator<Item = &'static str> {
        KEYS.iter().map(|(k, _)| *k)
    }

    pub fn describe(key: &str) -> Option<&'static str> {
        KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let v = match key {
            "frame.window_seconds" => self.window_seconds.to_string(),
            "frame.hop_seconds" => self.hop_seconds.to_string(),
            "frame.window" => self.window.name().to_string(),
            "spectral.zero_pad" => self.zero_pad_factor.to_string(),
            "spectral.sinusoidality_threshold" => self.sinusoidality_threshold.to_string(),
            "spectral.max_frequency" => self.max_peak_frequency.to_string(),
            "twm.p" => self.twm.p.to_string(),
            "twm.q" => self.twm.q.to_string(),
            "twm.r" => self.twm.r.to_string(),
            "twm.rho" => self.twm.rho.to_string(),
            "twm.max_harmonic_freq" => self.twm.max_harmonic_freq.to_string(),
            "twm.f0_min" => self.twm.f0_min.to_string(),
            "twm.f0_max" => self.twm.f0_max.to_string(),
            "twm.resolution_cents" => self.twm.resolution_cents.to_string(),
            "twm.top_m" => self.top_m.to_string(),
            "twm.no_evidence_error" => self.twm.no_evidence_error.to_string(),
            "tracking.mode" => self.tracking_mode.name().to_string(),
            "tracking.lambda" => self.tracking.lambda.to_string(),
            "tracking.cap_cents" => self.tracking.cap_cents.to_string(),
            "tracking.harmonic_tolerance_cents" => {
                self.tracking.harmonic_tolerance_cents.to_string()
            }
            "voicing.enabled" => self.voicing.enabled.to_string(),
            "voicing.model" => self.voicing.model.clone(),
            "voicing.bias" => self.voicing.bias.to_string(),
            "voicing.smooth_frames" => self.voicing.smooth_frames.to_string(),
            "voicing.band_hz" => self.voicing.band_hz.to_string(),
            "voicing.instability_half_window" => self.voicing.instability_half_window.to_string(),
            _ => return None,
        };
        Some(v)
    }

    /// Sets one key from its text form. Range checks are left to
    /// [`AnalysisConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "frame.window_seconds" => self.window_seconds = parse(key, v)?,
            "frame.hop_seconds" => self.hop_seconds = parse(key, v)?,
            "frame.window" => {
                self.window = WindowKind::from_name(v)
                    .ok_or_else(|| invalid(key, v, "expected `hann` or `rectangular`"))?
            }
            "spectral.zero_pad" => self.zero_pad_factor = parse(key, v)?,
            "spectral.sinusoidality_threshold" => self.sinusoidality_threshold = parse(key, v)?,
            "spectral.max_frequency" => self.max_peak_frequency = parse(key, v)?,
            "twm.p" => self.twm.p = parse(key, v)?,
            "twm.q" => self.twm.q = parse(key, v)?,
            "twm.r" => self.twm.r = parse(key, v)?,
            "twm.rho" => self.twm.rho = parse(key, v)?,
            "twm.max_harmonic_freq" => self.twm.max_harmonic_freq = parse(key, v)?,
            "twm.f0_min" => self.twm.f0_min = parse(key, v)?,
            "twm.f0_max" => self.twm.f0_max = parse(key, v)?,
            "twm.resolution_cents" => self.twm.resolution_cents = parse(key, v)?,
            "twm.top_m" => self.top_m = parse(key, v)?,
            "twm.no_evidence_error" => self.twm.no_evidence_error = parse(key, v)?,
            "tracking.mode" => {
                self.tracking_mode = v.parse().map_err(|e: String| invalid(key, v, &e))?
            }
            "tracking.lambda" => self.tracking.lambda = parse(key, v)?,
            "tracking.cap_cents" => self.tracking.cap_cents = parse(key, v)?,
            "tracking.harmonic_tolerance_cents" => {
                self.tracking.harmonic_tolerance_cents = parse(key, v)?
            }
            "voicing.enabled" => self.voicing.enabled = parse(key, v)?,
            "voicing.model" => self.voicing.model = v.to_string(),
            "voicing.bias" => self.voicing.bias = parse(key, v)?,
            "voicing.smooth_frames" => self.voicing.smooth_frames = parse(key, v)?,
            "voicing.band_hz" => self.voicing.band_hz = parse(key, v)?,
            "voicing.instability_half_window" => {
                self.voicing.instability_half_window = parse(key, v)?
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Checks every field against its documented bounds.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, reason: &str| -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(invalid(key, &self.get(key).unwrap_or_default(), reason))
            }
        };
        check(self.window_seconds > 0.0, "frame.window_seconds", "must be positive")?;
        check(self.hop_seconds > 0.0, "frame.hop_seconds", "must be positive")?;
        check(self.zero_pad_factor >= 1, "spectral.zero_pad", "must be at least 1")?;
        check(
            (0.0..=1.0).contains(&self.sinusoidality_threshold),
            "spectral.sinusoidality_threshold",
            "must lie in [0, 1]",
        )?;
        check(self.max_peak_frequency > 0.0, "spectral.max_frequency", "must be positive")?;
        for key in ["twm.p", "twm.q", "twm.r", "twm.rho"] {
            let v: f64 = self.get(key).and_then(|s| s.parse().ok()).unwrap_or(-1.0);
            check(v >= 0.0, key, "must be non-negative")?;
        }
        check(self.twm.max_harmonic_freq > 0.0, "twm.max_harmonic_freq", "must be positive")?;
        check(self.twm.f0_min > 0.0, "twm.f0_min", "must be positive")?;
        check(
            self.twm.f0_max.is_finite() && self.twm.f0_max > self.twm.f0_min,
            "twm.f0_max",
            "must exceed twm.f0_min",
        )?;
        check(self.twm.resolution_cents > 0.0, "twm.resolution_cents", "must be positive")?;
        check(self.top_m >= 1, "twm.top_m", "must be at least 1")?;
        check(self.tracking.lambda >= 0.0, "tracking.lambda", "must be non-negative")?;
        check(self.tracking.cap_cents > 0.0, "tracking.cap_cents", "must be positive")?;
        check(
            self.tracking.harmonic_tolerance_cents >= 0.0,
            "tracking.harmonic_tolerance_cents",
            "must be non-negative",
        )?;
        check(
            self.voicing.smooth_frames % 2 == 1,
            "voicing.smooth_frames",
            "must be odd",
        )?;
        check(self.voicing.band_hz > 0.0, "voicing.band_hz", "must be positive")?;
        check(
            self.voicing.instability_half_window >= 1,
            "voicing.instability_half_window",
            "must be at least 1",
        )?;
        check(self.voicing.bias.is_finite(), "voicing.bias", "must be finite")?;
        Ok(())
    }

    /// Full configuration as commented `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for (key, doc) in KEYS {
            let prefix = key.split('.').next().unwrap_or("");
            if prefix != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                section = prefix;
            }
            let _ = writeln!(out, "# {doc}");
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    /// Parses `key = value` lines over the defaults. Blank lines and `#`
    /// comments are skipped; the result is validated.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key = value` lines on top of `self` without validating.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                });
            };
            self.set(key.trim(), value.trim())
                .map_err(|e| ConfigError::AtLine {
                    line: i + 1,
                    source: alloc::boxed::Box::new(e),
                })?;
        }
        Ok(())
    }

    /// Applies several overrides at once; on error nothing is changed.
    pub fn with_overrides<'a>(
        &self,
        overrides: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, ConfigError> {
        let mut next = self.clone();
        for (k, v) in overrides {
            next.set(k, v)?;
        }
        next.validate()?;
        Ok(next)
    }
}

/// All keys as owned strings, for error messages.
pub fn key_list() -> Vec<String> {
    AnalysisConfig::keys().map(String::from).collect()
}
