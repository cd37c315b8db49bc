//! TOML documents for autoregressive speed models.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stodyn_core::ar::ArModel;

use crate::error::{self, Error, Result};

/// How a model was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    /// `multilag` or `cls`.
    pub method: String,
    /// Series the model was fitted on.
    pub source: String,
    pub samples: usize,
    /// Number of acf lags matched (multilag only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag_count: Option<usize>,
    /// Sum of squared acf residuals (multilag only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub p: usize,
    pub phi: Vec<f64>,
    pub sigma_eps: f64,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitInfo>,
}

impl ModelDoc {
    pub fn from_model(model: &ArModel, fit: Option<FitInfo>) -> Self {
        Self { p: model.order(), phi: model.phi().to_vec(), sigma_eps: model.sigma_eps(), dt: model.dt(), fit }
    }

    pub fn to_model(&self) -> Result<ArModel> {
        if self.p != self.phi.len() {
            return Err(Error::model(format!("p = {} but phi has {} coefficients", self.p, self.phi.len())));
        }
        ArModel::new(self.phi.clone(), self.sigma_eps, self.dt).map_err(Error::model)
    }
}

pub fn write_model(path: &Path, doc: &ModelDoc) -> Result<()> {
    let text = toml::to_string(doc).map_err(|e| Error::format(path, e))?;
    error::write(path, text)
}

pub fn read_model_doc(path: &Path) -> Result<ModelDoc> {
    let text = error::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::format(path, e))
}

/// Reads and validates a model file.
pub fn read_model(path: &Path) -> Result<ArModel> {
    read_model_doc(path)?.to_model()
}
