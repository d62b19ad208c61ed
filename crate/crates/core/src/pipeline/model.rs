//! The persisted pipeline model: one self-describing JSON document holding
//! everything needed to featurize and classify new scripts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusStats, PipelineConfig, PipelineError};
use crate::classifier::{GridResult, SplitAssignment, SvmModel};
use crate::cluster::ClusterModel;
use crate::features::{BlockSet, FeatureBlock};
use crate::tfidf::TfidfModel;

pub const MODEL_FORMAT: &str = "scriptnarr-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Per-column affine scaling `(x - mean) / scale` fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Standardizer {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            mean.iter_mut().zip(r).for_each(|(m, x)| *m += x / n);
        }
        let mut var = vec![0.0; dim];
        for r in rows {
            var.iter_mut().zip(r).zip(&mean).for_each(|((v, x), m)| *v += (x - m) * (x - m) / n);
        }
        let scale = var.into_iter().map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, scale }
    }

    pub fn identity(dim: usize) -> Standardizer {
        Standardizer { mean: vec![0.0; dim], scale: vec![1.0; dim] }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((x, m), s)| (x - m) / s).collect()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineModel {
    pub format: String,
    pub format_version: u32,
    pub config: PipelineConfig,
    pub blocks: BlockSet,
    pub split: SplitAssignment,
    pub stats: CorpusStats,
    pub tfidf: TfidfModel,
    pub clusters: Option<ClusterModel>,
    pub scaler: Standardizer,
    pub grid: GridResult,
    pub svm: SvmModel,
}

impl PipelineModel {
    pub fn k_clusters(&self) -> usize {
        self.clusters.as_ref().map_or(0, |c| c.k)
    }

    pub fn domain_dim(&self) -> usize {
        self.blocks.dims(self.k_clusters())
    }

    pub fn feature_dim(&self) -> usize {
        self.tfidf.dim() + self.domain_dim()
    }

    /// Ids the model has seen during fitting or model selection.
    pub fn seen_ids(&self) -> impl Iterator<Item = &str> {
        self.split.train.iter().chain(&self.split.val).map(String::as_str)
    }

    pub fn check_consistency(&self) -> Result<(), PipelineError> {
        let fail = |msg: String| Err(PipelineError::Inconsistent(msg));
        if self.blocks.contains(FeatureBlock::Clus) && self.clusters.is_none() {
            return fail("clus block enabled but no cluster model stored".into());
        }
        if self.scaler.dim() != self.domain_dim() || self.scaler.scale.len() != self.scaler.dim() {
            return fail(format!("scaler has {} columns, domain blocks need {}", self.scaler.dim(), self.domain_dim()));
        }
        if self.svm.weights.len() != self.feature_dim() {
            return fail(format!(
                "svm has {} weights, tf-idf ({}) + domain ({}) = {}",
                self.svm.weights.len(),
                self.tfidf.dim(),
                self.domain_dim(),
                self.feature_dim()
            ));
        }
        if let Some(c) = &self.clusters {
            if c.centroids.len() != c.k {
                return fail(format!("cluster model has {} centroids for k = {}", c.centroids.len(), c.k));
            }
        }
        if self.tfidf.df.len() != self.tfidf.vocabulary.len() {
            return fail("tf-idf df table does not match vocabulary".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<PipelineModel, PipelineError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
        let format = value.get("format").and_then(|v| v.as_str());
        let version = value.get("format_version").and_then(|v| v.as_u64());
        if format != Some(MODEL_FORMAT) {
            return Err(PipelineError::ModelParse { offset: 0, message: "not a scriptnarr model file".into() });
        }
        if version != Some(MODEL_FORMAT_VERSION as u64) {
            return Err(PipelineError::VersionMismatch { found: version, expected: MODEL_FORMAT_VERSION });
        }
        let model: PipelineModel = serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
        model.check_consistency()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_json()).map_err(|e| PipelineError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<PipelineModel, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        PipelineModel::from_json(&text)
    }
}

/// Converts serde_json's line/column position into a byte offset.
fn parse_error(text: &str, e: &serde_json::Error) -> PipelineError {
    let line_start: usize = text.split_inclusive('\n').take(e.line().saturating_sub(1)).map(str::len).sum();
    PipelineError::ModelParse { offset: line_start + e.column().saturating_sub(1), message: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer() {
        let s = Standardizer::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]);
        assert_eq!(s.mean, [2.0, 5.0]);
        assert_eq!(s.scale, [1.0, 1.0]);
        assert_eq!(s.apply(&[3.0, 6.0]), [1.0, 1.0]);
        assert_eq!(Standardizer::identity(2).apply(&[3.0, 6.0]), [3.0, 6.0]);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let err = PipelineModel::from_json("{\n  \"format\": oops\n}").unwrap_err();
        match err {
            PipelineError::ModelParse { offset, .. } => assert_eq!(offset, 14),
            other => panic!("{other:?}"),
        }
        let err = PipelineModel::from_json("{\"format\":\"scriptnarr-model\",\"format_version\":99}").unwrap_err();
        assert!(matches!(err, PipelineError::VersionMismatch { found: Some(99), expected: 1 }));
    }
}
