//! JSON-lines dataset manifests.
//!
//! Each line is either an entry, `{"id": "...", "path": "...", "label": 0}`,
//! or a metadata record, `{"meta": {"name": "...", "seed": 7}}`. Relative
//! script paths resolve against the manifest's directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub label: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestMeta {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub meta: ManifestMeta,
    /// Directory that relative entry paths resolve against.
    pub base_dir: PathBuf,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Meta { meta: ManifestMeta },
    Entry(ManifestEntry),
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut m = DatasetManifest::parse(&text)?;
        let parent = path.parent().unwrap_or(Path::new(""));
        m.base_dir = std::path::absolute(parent).unwrap_or_else(|_| parent.to_path_buf());
        Ok(m)
    }

    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut m = DatasetManifest::default();
        let mut seen = HashSet::new();
        for (i, l) in text.lines().enumerate() {
            if l.trim().is_empty() {
                continue;
            }
            let line: Line =
                serde_json::from_str(l).map_err(|e| PipelineError::Manifest { line: i + 1, reason: e.to_string() })?;
            match line {
                Line::Meta { meta } => m.meta = meta,
                Line::Entry(e) => {
                    if e.label > 1 {
                        return Err(PipelineError::Manifest {
                            line: i + 1,
                            reason: format!("label {} not in {{0, 1}}", e.label),
                        });
                    }
                    if !seen.insert(e.id.clone()) {
                        return Err(PipelineError::Manifest {
                            line: i + 1,
                            reason: format!("duplicate id {:?}", e.id),
                        });
                    }
                    m.entries.push(e);
                }
            }
        }
        Ok(m)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        if self.meta != ManifestMeta::default() {
            out.push_str(&serde_json::json!({ "meta": self.meta }).to_string());
            out.push('\n');
        }
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("manifest entry serialises"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| PipelineError::io(path, e))
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    /// The entries whose ids are in `ids`, keeping manifest order and making
    /// paths absolute so the result can be saved anywhere.
    pub fn subset(&self, ids: &[String]) -> DatasetManifest {
        let wanted: HashSet<&str> = ids.iter().map(String::as_str).collect();
        let entries = self
            .entries
            .iter()
            .filter(|e| wanted.contains(e.id.as_str()))
            .map(|e| ManifestEntry { path: self.resolve(e), ..e.clone() })
            .collect();
        DatasetManifest { entries, meta: self.meta.clone(), base_dir: PathBuf::new() }
    }

    pub fn has_both_labels(&self) -> bool {
        self.entries.iter().any(|e| e.label == 1) && self.entries.iter().any(|e| e.label == 0)
    }
}
