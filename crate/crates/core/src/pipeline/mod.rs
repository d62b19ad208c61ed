//! End-to-end orchestration: ingest a manifest, fit the representation and
//! classifier, evaluate, ablate and export plot data.
//!
//! Per-document stages (read, parse, characters, segment) run on the worker
//! pool selected by [`RunOptions::exec`]; fitting is single-threaded. Every
//! aggregate is reduced in manifest order, so outputs depend only on the
//! manifest, the config and the seed.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::ClassifierError;
use crate::cluster::ClusterError;
use crate::features::FeatureError;
use crate::lexicon::{LexiconError, Lexicons};
use crate::par::Execution;
use crate::tfidf::TfidfError;

pub mod config;
mod ingest;
pub mod manifest;
pub mod model;
mod plot;
mod run;

pub use config::{ConfigError, PipelineConfig};
pub use ingest::{ingest, Document, Ingested};
pub use manifest::{DatasetManifest, ManifestEntry, ManifestMeta};
pub use model::{PipelineModel, Standardizer, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use plot::{emit_plot_data, PlotData, PlotFeature, PlotRow};
pub use run::{
    export_features, run_ablation, run_eval, run_train, write_ablation_csv, write_predictions_csv, AblationRow,
    EvalOutcome, Prediction, TrainOutcome,
};

/// Per-document processing stages, named in stage errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Read,
    Parse,
    Characters,
    Segment,
    Features,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Read => "read",
            Stage::Parse => "parse",
            Stage::Characters => "characters",
            Stage::Segment => "segment",
            Stage::Features => "features",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("lexicon: {0}")]
    Lexicon(#[from] LexiconError),
    #[error("document {id:?}, stage {stage}: {source}")]
    Stage {
        id: String,
        stage: Stage,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Tfidf(#[from] TfidfError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("unsupported model format version {found:?}, expected {expected}")]
    VersionMismatch { found: Option<u64>, expected: u32 },
    #[error("model file, byte {offset}: {message}")]
    ModelParse { offset: usize, message: String },
    #[error("inconsistent model: {0}")]
    Inconsistent(String),
    #[error("{count} evaluation ids were seen in training or validation (first {first:?})")]
    OverlappingSplit { count: usize, first: String },
    #[error("nothing to evaluate")]
    EmptyEvaluation,
    #[error("unknown feature {0:?}; expected vad.valence|arousal|dominance or int.anger|fear|joy|sadness")]
    UnknownFeature(String),
    #[error("unknown or repeated feature block in {0:?}")]
    UnknownBlock(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn stage(id: &str, stage: Stage, source: impl std::error::Error + Send + Sync + 'static) -> Self {
        PipelineError::Stage { id: id.to_string(), stage, source: Box::new(source) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub exec: Execution,
    /// Drop documents that fail a per-document stage instead of aborting.
    pub skip_errors: bool,
    /// Let `run_eval` score documents the model was fitted or tuned on.
    pub allow_overlap: bool,
}

/// What ingest kept, dropped and why.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub manifest_entries: usize,
    pub kept: usize,
    pub positives: usize,
    pub negatives: usize,
    /// Ids dropped because the top two characters speak too little.
    pub filtered: Vec<String>,
    /// Ids dropped under `skip_errors`.
    pub failed: Vec<String>,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub mean_tokens: f64,
}

pub fn load_lexicons(cfg: &PipelineConfig) -> Result<Lexicons, PipelineError> {
    Ok(Lexicons::load(cfg.vad_lexicon.as_deref(), cfg.intensity_lexicon.as_deref(), cfg.category_lexicon.as_deref())?)
}
