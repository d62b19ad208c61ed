//! Flat `key = value` pipeline configuration.
//!
//! ```text
//! # comments start with '#'
//! seed = 42
//! top_k = 500
//! window_pct = 1.0
//! n_perm = 499
//! k_clusters = 10
//! c_grid = 0.01, 0.1, 1, 10, 100
//! blocks = ling, emo
//! min_character_tokens = 100
//! vad_lexicon = lexicons/vad.tsv
//! ```
//!
//! Relative lexicon paths resolve against the directory of the config file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{DEFAULT_C_GRID, DEFAULT_EPOCHS};
use crate::cluster::{DEFAULT_K, DEFAULT_MAX_ITER};
use crate::features::{BlockSet, CategoryNorm, CurveValue, FeatureConfig, DEFAULT_PERMUTATIONS};
use crate::segment::DEFAULT_WINDOW_PCT;
use crate::tfidf::DEFAULT_TOP_K;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: bad value for {key}: {reason}")]
    Value { line: usize, key: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub top_k: usize,
    pub window_pct: f64,
    pub n_perm: usize,
    pub k_clusters: usize,
    pub kmeans_max_iter: usize,
    pub c_grid: Vec<f64>,
    pub epochs: usize,
    pub blocks: BlockSet,
    pub min_character_tokens: usize,
    pub stratified: bool,
    pub scale_features: bool,
    pub curve_value: CurveValue,
    pub mask_alpha: f64,
    pub category_norm: CategoryNorm,
    pub stopwords: Vec<String>,
    pub vad_lexicon: Option<PathBuf>,
    pub intensity_lexicon: Option<PathBuf>,
    pub category_lexicon: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            top_k: DEFAULT_TOP_K,
            window_pct: DEFAULT_WINDOW_PCT,
            n_perm: DEFAULT_PERMUTATIONS,
            k_clusters: DEFAULT_K,
            kmeans_max_iter: DEFAULT_MAX_ITER,
            c_grid: DEFAULT_C_GRID.to_vec(),
            epochs: DEFAULT_EPOCHS,
            blocks: BlockSet::EMPTY,
            min_character_tokens: 100,
            stratified: false,
            scale_features: true,
            curve_value: CurveValue::Distance,
            mask_alpha: 0.05,
            category_norm: CategoryNorm::Distribution,
            stopwords: Vec::new(),
            vad_lexicon: None,
            intensity_lexicon: None,
            category_lexicon: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| e.to_string())
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true/false, got {v:?}")),
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let mut cfg = PipelineConfig::parse(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (key, value) = l
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, reason: "expected `key = value`".into() })?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value).map_err(|e| match e {
                None => ConfigError::UnknownKey { line, key: key.to_string() },
                Some(reason) => ConfigError::Value { line, key: key.to_string(), reason },
            })?;
        }
        cfg.validate().map_err(|(key, reason)| ConfigError::Value { line: 0, key: key.into(), reason })?;
        Ok(cfg)
    }

    /// `Err(None)` for an unknown key.
    fn set(&mut self, key: &str, v: &str) -> Result<(), Option<String>> {
        let path = |v: &str| if v.is_empty() { None } else { Some(PathBuf::from(v)) };
        match key {
            "seed" => self.seed = parse_num(v)?,
            "top_k" => self.top_k = parse_num(v)?,
            "window_pct" => self.window_pct = parse_num(v)?,
            "n_perm" => self.n_perm = parse_num(v)?,
            "k_clusters" => self.k_clusters = parse_num(v)?,
            "kmeans_max_iter" => self.kmeans_max_iter = parse_num(v)?,
            "c_grid" => self.c_grid = list(v).map(parse_num).collect::<Result<_, _>>()?,
            "epochs" => self.epochs = parse_num(v)?,
            "blocks" => self.blocks = v.parse().map_err(|e: crate::features::FeatureError| e.to_string())?,
            "min_character_tokens" => self.min_character_tokens = parse_num(v)?,
            "stratified" => self.stratified = parse_bool(v)?,
            "scale_features" => self.scale_features = parse_bool(v)?,
            "curve_value" => {
                self.curve_value = match v {
                    "distance" => CurveValue::Distance,
                    "masked" => CurveValue::Masked,
                    _ => return Err(Some(format!("expected distance or masked, got {v:?}"))),
                }
            }
            "mask_alpha" => self.mask_alpha = parse_num(v)?,
            "category_norm" => {
                self.category_norm = match v {
                    "distribution" => CategoryNorm::Distribution,
                    "rates" => CategoryNorm::Rates,
                    _ => return Err(Some(format!("expected distribution or rates, got {v:?}"))),
                }
            }
            "stopwords" => self.stopwords = list(v).map(str::to_lowercase).collect(),
            "vad_lexicon" => self.vad_lexicon = path(v),
            "intensity_lexicon" => self.intensity_lexicon = path(v),
            "category_lexicon" => self.category_lexicon = path(v),
            _ => return Err(None),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.top_k == 0 {
            return Err(("top_k", "must be at least 1".into()));
        }
        if !(self.window_pct > 0.0 && self.window_pct <= 100.0) {
            return Err(("window_pct", "must be in (0, 100]".into()));
        }
        if self.n_perm == 0 {
            return Err(("n_perm", "must be at least 1".into()));
        }
        if self.k_clusters < 2 {
            return Err(("k_clusters", "must be at least 2".into()));
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(("c_grid", "needs one or more positive values".into()));
        }
        if self.epochs == 0 {
            return Err(("epochs", "must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.vad_lexicon, &mut self.intensity_lexicon, &mut self.category_lexicon].into_iter().flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            window_pct: self.window_pct,
            n_perm: self.n_perm,
            seed: self.seed,
            curve_value: self.curve_value,
            mask_alpha: self.mask_alpha,
            category_norm: self.category_norm,
        }
    }

    /// Renders the config in the file format; `parse(to_text())` gives back
    /// the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let grid: Vec<String> = self.c_grid.iter().map(f64::to_string).collect();
        let curve = match self.curve_value {
            CurveValue::Distance => "distance",
            CurveValue::Masked => "masked",
        };
        let norm = match self.category_norm {
            CategoryNorm::Distribution => "distribution",
            CategoryNorm::Rates => "rates",
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "top_k = {}", self.top_k);
        let _ = writeln!(s, "window_pct = {}", self.window_pct);
        let _ = writeln!(s, "n_perm = {}", self.n_perm);
        let _ = writeln!(s, "k_clusters = {}", self.k_clusters);
        let _ = writeln!(s, "kmeans_max_iter = {}", self.kmeans_max_iter);
        let _ = writeln!(s, "c_grid = {}", grid.join(", "));
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "blocks = {}", self.blocks.iter().map(|b| b.name()).collect::<Vec<_>>().join(", "));
        let _ = writeln!(s, "min_character_tokens = {}", self.min_character_tokens);
        let _ = writeln!(s, "stratified = {}", self.stratified);
        let _ = writeln!(s, "scale_features = {}", self.scale_features);
        let _ = writeln!(s, "curve_value = {curve}");
        let _ = writeln!(s, "mask_alpha = {}", self.mask_alpha);
        let _ = writeln!(s, "category_norm = {norm}");
        let _ = writeln!(s, "stopwords = {}", self.stopwords.join(", "));
        let _ = writeln!(s, "vad_lexicon = {}", path(&self.vad_lexicon));
        let _ = writeln!(s, "intensity_lexicon = {}", path(&self.intensity_lexicon));
        let _ = writeln!(s, "category_lexicon = {}", path(&self.category_lexicon));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureBlock;

    #[test]
    fn defaults() {
        let c = PipelineConfig::parse("").unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert_eq!((c.top_k, c.n_perm, c.k_clusters, c.min_character_tokens), (500, 499, 10, 100));
        assert_eq!(c.window_pct, 1.0);
        assert_eq!(c.c_grid, [0.01, 0.1, 1.0, 10.0, 100.0]);
    }

    #[test]
    fn parses_keys() {
        let c =
            PipelineConfig::parse("# x\nseed = 7\nblocks = ling, emo\nc_grid = 1, 10\nstratified = true\n").unwrap();
        assert_eq!(c.seed, 7);
        assert!(c.blocks.contains(FeatureBlock::Ling) && c.blocks.contains(FeatureBlock::Emo));
        assert_eq!(c.c_grid, [1.0, 10.0]);
        assert!(c.stratified);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(PipelineConfig::parse("nope = 1"), Err(ConfigError::UnknownKey { line: 1, .. })));
        assert!(matches!(PipelineConfig::parse("seed 1"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(PipelineConfig::parse("\nseed = x"), Err(ConfigError::Value { line: 2, .. })));
        assert!(matches!(PipelineConfig::parse("blocks = ling, ling"), Err(ConfigError::Value { .. })));
        assert!(matches!(PipelineConfig::parse("k_clusters = 1"), Err(ConfigError::Value { .. })));
    }

    #[test]
    fn text_round_trip() {
        let mut c = PipelineConfig::parse(
            "seed = 3\nblocks = int, clus\nstopwords = the, a\nvad_lexicon = lex/v.tsv\ncurve_value = masked",
        )
        .unwrap();
        c.window_pct = 1.5;
        assert_eq!(PipelineConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn resolves_relative_paths() {
        let mut c = PipelineConfig::parse("vad_lexicon = lex/v.tsv\ncategory_lexicon = /abs/c.txt").unwrap();
        c.resolve_paths(Path::new("/data/run"));
        assert_eq!(c.vad_lexicon.unwrap(), PathBuf::from("/data/run/lex/v.tsv"));
        assert_eq!(c.category_lexicon.unwrap(), PathBuf::from("/abs/c.txt"));
    }
}
