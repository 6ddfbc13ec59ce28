//! Voicing model persistence as versioned JSON.

use std::path::Path;
use std::sync::OnceLock;

use melodex_core::gmm::GmmModel;
use melodex_core::voicing::{VoicingFeatures, VoicingModel};
use serde::{Deserialize, Serialize};

pub const MODEL_VERSION: u32 = 1;

/// Trained on the built-in synthetic corpus (`melodex train-svd --corpus synthetic`).
const BUILTIN_MODEL: &str = include_str!("../assets/voicing_model.json");

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("cannot read `{path}`")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model version {0} (expected {MODEL_VERSION})")]
    Version(u32),
    #[error("invalid model: {0}")]
    Invalid(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct GmmDoc {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Classes {
    vocal: GmmDoc,
    nonvocal: GmmDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    version: u32,
    feature_names: Vec<String>,
    classes: Classes,
}

fn doc(m: &GmmModel) -> GmmDoc {
    GmmDoc {
        weights: m.weights.clone(),
        means: m.means.clone(),
        variances: m.variances.clone(),
    }
}

fn gmm(d: GmmDoc, dim: usize, class: &str) -> Result<GmmModel, ModelError> {
    let m = GmmModel {
        weights: d.weights,
        means: d.means,
        variances: d.variances,
    };
    m.validate()
        .map_err(|e| ModelError::Invalid(format!("{class}: {e}")))?;
    if m.dimension() != dim {
        return Err(ModelError::Invalid(format!(
            "{class}: dimension {} does not match {dim} feature names",
            m.dimension()
        )));
    }
    Ok(m)
}

pub fn model_to_json(model: &VoicingModel) -> String {
    let d = ModelDoc {
        version: MODEL_VERSION,
        feature_names: model.feature_names.clone(),
        classes: Classes {
            vocal: doc(&model.vocal),
            nonvocal: doc(&model.nonvocal),
        },
    };
    serde_json::to_string_pretty(&d).expect("model serialises")
}

pub fn model_from_json(text: &str) -> Result<VoicingModel, ModelError> {
    // check the version before the shape so old files get the right message
    let raw: serde_json::Value = serde_json::from_str(text)?;
    let version = raw.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != MODEL_VERSION {
        return Err(ModelError::Version(version));
    }
    let d: ModelDoc = serde_json::from_value(raw)?;
    if d.feature_names.is_empty() {
        return Err(ModelError::Invalid("no feature names".into()));
    }
    if let Some(bad) = d
        .feature_names
        .iter()
        .find(|n| VoicingFeatures::default().get(n).is_none())
    {
        return Err(ModelError::Invalid(format!("unknown feature `{bad}`")));
    }
    let dim = d.feature_names.len();
    Ok(VoicingModel {
        vocal: gmm(d.classes.vocal, dim, "vocal")?,
        nonvocal: gmm(d.classes.nonvocal, dim, "nonvocal")?,
        feature_names: d.feature_names,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<VoicingModel, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    model_from_json(&text)
}

pub fn save_model(model: &VoicingModel, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, model_to_json(model))
}

pub fn builtin_model() -> &'static VoicingModel {
    static MODEL: OnceLock<VoicingModel> = OnceLock::new();
    MODEL.get_or_init(|| model_from_json(BUILTIN_MODEL).expect("bundled voicing model is valid"))
}
