use crate::features::{BlockSet, FeatureBlock, TOP_CHARACTERS};
use crate::parser::{parse_screenplay_bytes, top_speaking_characters, Screenplay};
use crate::segment::{partition_segments, SegmentPartition};
use crate::tfidf::sp_text;

use super::{CorpusStats, DatasetManifest, ManifestEntry, PipelineConfig, PipelineError, RunOptions, Stage};

/// A parsed, segmented manifest entry.
#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub label: u8,
    pub screenplay: Screenplay,
    pub partition: SegmentPartition,
    pub sp_text: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    /// Kept documents in manifest order.
    pub docs: Vec<Document>,
    pub stats: CorpusStats,
}

impl Ingested {
    pub fn ids(&self) -> Vec<String> {
        self.docs.iter().map(|d| d.id.clone()).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.docs.iter().map(|d| d.label).collect()
    }
}

enum Outcome {
    Kept(Box<Document>),
    Filtered,
}

fn needs_characters(blocks: BlockSet) -> bool {
    [FeatureBlock::Ling, FeatureBlock::Emo, FeatureBlock::Tt].into_iter().any(|b| blocks.contains(b))
}

fn ingest_one(
    manifest: &DatasetManifest,
    entry: &ManifestEntry,
    cfg: &PipelineConfig,
    blocks: BlockSet,
) -> Result<Outcome, PipelineError> {
    let id = entry.id.as_str();
    let path = manifest.resolve(entry);
    let raw = std::fs::read(&path).map_err(|e| PipelineError::stage(id, Stage::Read, PipelineError::io(&path, e)))?;
    let screenplay = parse_screenplay_bytes(&raw, id).map_err(|e| PipelineError::stage(id, Stage::Parse, e))?;

    if cfg.min_character_tokens > 0 || needs_characters(blocks) {
        let top = top_speaking_characters(&screenplay, TOP_CHARACTERS)
            .map_err(|e| PipelineError::stage(id, Stage::Characters, e))?;
        if top.len() < TOP_CHARACTERS || top.iter().any(|c| c.total_tokens < cfg.min_character_tokens) {
            return Ok(Outcome::Filtered);
        }
    }

    let partition = partition_segments(screenplay.len()).map_err(|e| PipelineError::stage(id, Stage::Segment, e))?;
    let sp_text =
        sp_text(&screenplay, &partition, cfg.window_pct).map_err(|e| PipelineError::stage(id, Stage::Segment, e))?;
    Ok(Outcome::Kept(Box::new(Document { id: id.to_string(), label: entry.label, screenplay, partition, sp_text })))
}

/// Reads, parses, filters and segments every manifest entry.
///
/// A document is filtered, not failed, when fewer than two characters speak
/// or either of the top two speaks fewer than `min_character_tokens`
/// tokens. With `min_character_tokens = 0` and no character blocks the
/// filter is off. Stage failures abort unless `skip_errors` is set.
pub fn ingest(
    manifest: &DatasetManifest,
    cfg: &PipelineConfig,
    blocks: BlockSet,
    opts: RunOptions,
) -> Result<Ingested, PipelineError> {
    let outcomes = opts.exec.map(&manifest.entries, |e| ingest_one(manifest, e, cfg, blocks));
    let mut stats = CorpusStats { manifest_entries: manifest.entries.len(), ..CorpusStats::default() };
    let mut docs = Vec::new();
    for (entry, outcome) in manifest.entries.iter().zip(outcomes) {
        match outcome {
            Ok(Outcome::Kept(d)) => docs.push(*d),
            Ok(Outcome::Filtered) => {
                log::info!("{}: filtered, top characters speak too little", entry.id);
                stats.filtered.push(entry.id.clone());
            }
            Err(e) if opts.skip_errors => {
                log::warn!("skipping {e}");
                stats.failed.push(entry.id.clone());
            }
            Err(e) => return Err(e),
        }
    }
    stats.kept = docs.len();
    stats.positives = docs.iter().filter(|d| d.label == 1).count();
    stats.negatives = stats.kept - stats.positives;
    let lens = docs.iter().map(|d| d.screenplay.len());
    stats.min_tokens = lens.clone().min().unwrap_or(0);
    stats.max_tokens = lens.clone().max().unwrap_or(0);
    stats.mean_tokens = if docs.is_empty() { 0.0 } else { lens.sum::<usize>() as f64 / docs.len() as f64 };
    Ok(Ingested { docs, stats })
}
