//! On-disk artifacts shared by the stand-alone `gen`, `train`, `insert` and
//! `eval` stages.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{apply_normalization, extract_features, FeatureSchema, NormParams};
use crate::graph::Graph;
use crate::model::ModelParams;
use crate::train::EdgeSplit;

use super::{PreparedDataset, TrainingSummary};

pub const MODEL_FILE: &str = "model.ckpt";
pub const NORM_FILE: &str = "norm.json";
pub const SPLIT_FILE: &str = "split.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const SUMMARY_FILE: &str = "train_summary.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainArtifactSummary {
    pub features: Vec<String>,
    pub seed: u64,
    pub training: TrainingSummary,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Write checkpoint, normalization, split, history and raw features into `dir`.
pub fn save_training_artifacts(prep: &PreparedDataset, seed: u64, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    prep.params.save(dir.join(MODEL_FILE))?;
    write_json(&dir.join(NORM_FILE), &prep.norm)?;
    write_json(&dir.join(SPLIT_FILE), &prep.split)?;
    crate::train::write_history_csv(&prep.history, dir.join(HISTORY_FILE))?;
    extract_features::<f64>(&prep.loaded.graph, &prep.schema).write_csv(dir.join(FEATURES_FILE))?;
    write_json(
        &dir.join(SUMMARY_FILE),
        &TrainArtifactSummary {
            features: prep.schema.names().iter().map(|s| s.to_string()).collect(),
            seed,
            training: prep.training.clone(),
        },
    )
}

pub struct TrainArtifacts {
    pub params: ModelParams<f64>,
    pub norm: NormParams<f64>,
    pub split: EdgeSplit,
    pub schema: FeatureSchema,
    pub summary: TrainArtifactSummary,
}

impl TrainArtifacts {
    pub fn load(dir: &Path) -> Result<Self> {
        let summary: TrainArtifactSummary = read_json(&dir.join(SUMMARY_FILE))?;
        let schema = FeatureSchema::parse_list(&summary.features.join(","))?;
        let params = ModelParams::load(dir.join(MODEL_FILE))?;
        if params.config().input_dim != schema.dim() {
            return Err(Error::Checkpoint(format!(
                "checkpoint input dim {} does not match {} features",
                params.config().input_dim,
                schema.dim()
            )));
        }
        Ok(Self {
            params,
            norm: read_json(&dir.join(NORM_FILE))?,
            split: read_json(&dir.join(SPLIT_FILE))?,
            schema,
            summary,
        })
    }

    /// Features of `g` under the stored normalization.
    pub fn normalized_features(&self, g: &Graph) -> Result<crate::matrix::Matrix<f64>> {
        let x = extract_features::<f64>(g, &self.schema);
        Ok(apply_normalization(&x, &self.norm)?.values)
    }
}
