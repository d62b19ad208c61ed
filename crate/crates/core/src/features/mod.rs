//! Domain features of a segmented screenplay.
//!
//! Six blocks, always emitted in this order when enabled:
//!
//! | block  | dims | content                                                  |
//! |--------|------|----------------------------------------------------------|
//! | `ling` | 14   | tag-distribution change at the 7 segment boundaries, top-2 speakers |
//! | `emo`  | 14   | category-distribution change at the same boundaries      |
//! | `tt`   | 2    | type-token ratio of the top-2 speakers                   |
//! | `vad`  | 27   | mean valence/arousal/dominance in each of the 9 SP windows |
//! | `int`  | 36   | mean anger/fear/joy/sadness intensity in each SP window  |
//! | `clus` | k    | histogram of utterance clusters                          |

pub mod pcar;
pub mod tagger;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{ClusterError, ClusterModel};
use crate::lexicon::{
    category_distribution, category_rates, CategoryLexicon, Emotion, IntensityLexicon, Lexicons, VadLexicon,
};
use crate::par::{mix_seed, stable_hash};
use crate::parser::{top_speaking_characters, CharacterProfile, ParseError, Screenplay};
use crate::segment::{
    context_windows, ContextWindow, SegmentError, SegmentPartition, NUM_SEGMENTS, NUM_STRUCTURAL_POINTS,
};

pub use pcar::{pcar_change_score, total_variation, ChangeScore, DEFAULT_PERMUTATIONS};
pub use tagger::{CoarseTagger, Tag, Tagger};

pub const NUM_BOUNDARIES: usize = NUM_SEGMENTS - 1;
pub const TOP_CHARACTERS: usize = 2;
pub const VAD_NEUTRAL: f64 = 0.5;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("vector dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("permutation count must be at least 1")]
    NoPermutations,
    #[error("character has no tokens")]
    NoTokens,
    #[error("need {needed} speaking characters, found {found}")]
    TooFewCharacters { needed: usize, found: usize },
    #[error("unknown feature block {0:?}")]
    UnknownBlock(String),
    #[error("clus block enabled without a fitted cluster model")]
    MissingClusterModel,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureBlock {
    Ling,
    Emo,
    Tt,
    Vad,
    Int,
    Clus,
}

impl FeatureBlock {
    pub const ALL: [FeatureBlock; 6] = [
        FeatureBlock::Ling,
        FeatureBlock::Emo,
        FeatureBlock::Tt,
        FeatureBlock::Vad,
        FeatureBlock::Int,
        FeatureBlock::Clus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureBlock::Ling => "ling",
            FeatureBlock::Emo => "emo",
            FeatureBlock::Tt => "tt",
            FeatureBlock::Vad => "vad",
            FeatureBlock::Int => "int",
            FeatureBlock::Clus => "clus",
        }
    }

    pub fn dims(self, k_clusters: usize) -> usize {
        match self {
            FeatureBlock::Ling | FeatureBlock::Emo => NUM_BOUNDARIES * TOP_CHARACTERS,
            FeatureBlock::Tt => TOP_CHARACTERS,
            FeatureBlock::Vad => 3 * NUM_STRUCTURAL_POINTS,
            FeatureBlock::Int => Emotion::ALL.len() * NUM_STRUCTURAL_POINTS,
            FeatureBlock::Clus => k_clusters,
        }
    }

    /// Column names, `block.dim` style.
    pub fn column_names(self, k_clusters: usize) -> Vec<String> {
        let n = self.name();
        match self {
            FeatureBlock::Ling | FeatureBlock::Emo => {
                (1..=TOP_CHARACTERS).flat_map(|c| (1..=NUM_BOUNDARIES).map(move |b| format!("{n}.c{c}.b{b}"))).collect()
            }
            FeatureBlock::Tt => (1..=TOP_CHARACTERS).map(|c| format!("{n}.c{c}")).collect(),
            FeatureBlock::Vad => (0..NUM_STRUCTURAL_POINTS)
                .flat_map(|sp| ["valence", "arousal", "dominance"].map(|d| format!("{n}.sp{sp}.{d}")))
                .collect(),
            FeatureBlock::Int => (0..NUM_STRUCTURAL_POINTS)
                .flat_map(|sp| Emotion::ALL.map(|e| format!("{n}.sp{sp}.{}", e.name())))
                .collect(),
            FeatureBlock::Clus => (0..k_clusters).map(|k| format!("{n}.k{k}")).collect(),
        }
    }
}

impl FromStr for FeatureBlock {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        FeatureBlock::ALL.into_iter().find(|b| b.name() == s).ok_or(FeatureError::UnknownBlock(s))
    }
}

/// A set of enabled blocks; iteration follows the fixed block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "Vec<FeatureBlock>", try_from = "Vec<FeatureBlock>")]
pub struct BlockSet {
    mask: u8,
}

impl BlockSet {
    pub const EMPTY: BlockSet = BlockSet { mask: 0 };

    pub fn all() -> Self {
        FeatureBlock::ALL.into_iter().collect()
    }

    pub fn contains(self, b: FeatureBlock) -> bool {
        self.mask & (1 << b as u8) != 0
    }

    pub fn insert(&mut self, b: FeatureBlock) -> bool {
        let fresh = !self.contains(b);
        self.mask |= 1 << b as u8;
        fresh
    }

    pub fn union(self, other: BlockSet) -> BlockSet {
        BlockSet { mask: self.mask | other.mask }
    }

    pub fn is_empty(self) -> bool {
        self.mask == 0
    }

    pub fn iter(self) -> impl Iterator<Item = FeatureBlock> {
        FeatureBlock::ALL.into_iter().filter(move |&b| self.contains(b))
    }

    pub fn dims(self, k_clusters: usize) -> usize {
        self.iter().map(|b| b.dims(k_clusters)).sum()
    }

    pub fn column_names(self, k_clusters: usize) -> Vec<String> {
        self.iter().flat_map(|b| b.column_names(k_clusters)).collect()
    }
}

impl FromIterator<FeatureBlock> for BlockSet {
    fn from_iter<I: IntoIterator<Item = FeatureBlock>>(iter: I) -> Self {
        let mut s = BlockSet::EMPTY;
        iter.into_iter().for_each(|b| {
            s.insert(b);
        });
        s
    }
}

impl From<BlockSet> for Vec<FeatureBlock> {
    fn from(s: BlockSet) -> Self {
        s.iter().collect()
    }
}

impl TryFrom<Vec<FeatureBlock>> for BlockSet {
    type Error = FeatureError;

    fn try_from(v: Vec<FeatureBlock>) -> Result<Self, Self::Error> {
        let mut s = BlockSet::EMPTY;
        for b in v {
            if !s.insert(b) {
                return Err(FeatureError::UnknownBlock(format!("duplicate {}", b.name())));
            }
        }
        Ok(s)
    }
}

/// Parses `ling,emo` style lists. `none`, `-` and the empty string mean no
/// blocks; a repeated block is rejected.
impl FromStr for BlockSet {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "none" || s == "-" {
            return Ok(BlockSet::EMPTY);
        }
        let blocks = s
            .split([',', '+'])
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<FeatureBlock>, _>>()?;
        BlockSet::try_from(blocks)
    }
}

impl fmt::Display for BlockSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let names: Vec<&str> = self.iter().map(FeatureBlock::name).collect();
        f.write_str(&names.join("+"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    Linguistic,
    Emotional,
}

/// What an activity-curve boundary contributes to the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveValue {
    /// The raw distance.
    #[default]
    Distance,
    /// The distance where `p <= alpha`, otherwise zero.
    Masked,
}

/// Normalisation of per-utterance category vectors used for clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoryNorm {
    /// Divide by total category hits.
    #[default]
    Distribution,
    /// Divide by the utterance token count.
    Rates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub window_pct: f64,
    pub n_perm: usize,
    pub seed: u64,
    pub curve_value: CurveValue,
    pub mask_alpha: f64,
    pub category_norm: CategoryNorm,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            window_pct: crate::segment::DEFAULT_WINDOW_PCT,
            n_perm: DEFAULT_PERMUTATIONS,
            seed: 0,
            curve_value: CurveValue::Distance,
            mask_alpha: 0.05,
            category_norm: CategoryNorm::Distribution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityCurve {
    pub signal: Signal,
    pub character: String,
    pub boundaries: [ChangeScore; NUM_BOUNDARIES],
}

/// How a character's utterances are turned into unit distributions.
pub enum UnitSource<'a> {
    Categories(&'a CategoryLexicon),
    Tags(&'a dyn Tagger),
}

impl UnitSource<'_> {
    fn signal(&self) -> Signal {
        match self {
            UnitSource::Categories(_) => Signal::Emotional,
            UnitSource::Tags(_) => Signal::Linguistic,
        }
    }

    fn unit(&self, tokens: &[String]) -> Vec<f64> {
        match self {
            UnitSource::Categories(lex) => category_distribution(tokens.iter().map(String::as_str), lex),
            UnitSource::Tags(t) => t.distribution(tokens),
        }
    }
}

/// Change scores between adjacent development segments for one character.
/// An utterance belongs to the segment holding its first token; utterances
/// without tokens are ignored.
pub fn activity_curve(
    character: &CharacterProfile,
    partition: &SegmentPartition,
    source: UnitSource<'_>,
    n_perm: usize,
    seed: u64,
) -> Result<ActivityCurve, FeatureError> {
    let mut units: [Vec<Vec<f64>>; NUM_SEGMENTS] = Default::default();
    for u in character.utterances.iter().filter(|u| !u.tokens.is_empty()) {
        if let Some(seg) = partition.segment_of(u.start_token) {
            units[seg].push(source.unit(&u.tokens));
        }
    }
    let mut boundaries = [ChangeScore::NONE; NUM_BOUNDARIES];
    for (b, slot) in boundaries.iter_mut().enumerate() {
        *slot = pcar_change_score(&units[b], &units[b + 1], n_perm, mix_seed(seed, b as u64))?;
    }
    Ok(ActivityCurve { signal: source.signal(), character: character.name.clone(), boundaries })
}

pub fn type_token_ratio(character: &CharacterProfile) -> Result<f64, FeatureError> {
    if character.total_tokens == 0 {
        return Err(FeatureError::NoTokens);
    }
    let distinct: HashSet<&str> = character.tokens().collect();
    Ok(distinct.len() as f64 / character.total_tokens as f64)
}

/// Mean valence, arousal and dominance of the lexicon tokens in each window;
/// [`VAD_NEUTRAL`] when a window has none.
pub fn vad_profile(windows: &[ContextWindow<'_>], lex: &VadLexicon) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * windows.len());
    for w in windows {
        let mut sum = [0.0; 3];
        let mut n = 0usize;
        for v in w.words().filter_map(|t| lex.get(t)) {
            sum[0] += v.valence;
            sum[1] += v.arousal;
            sum[2] += v.dominance;
            n += 1;
        }
        if n == 0 {
            out.extend([VAD_NEUTRAL; 3]);
        } else {
            out.extend(sum.map(|s| s / n as f64));
        }
    }
    out
}

/// Per window and emotion, the mean intensity over tokens carrying that
/// emotion; zero when none does.
pub fn intensity_profile(windows: &[ContextWindow<'_>], lex: &IntensityLexicon) -> Vec<f64> {
    let mut out = Vec::with_capacity(Emotion::ALL.len() * windows.len());
    for w in windows {
        for e in Emotion::ALL {
            let (sum, n) = w.words().filter_map(|t| lex.get(t, e)).fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
            out.push(if n == 0 { 0.0 } else { sum / n as f64 });
        }
    }
    out
}

/// One category vector per dialogue utterance with at least one token, in
/// document order. These are the points the cluster model is fitted on.
pub fn utterance_points(s: &Screenplay, lex: &CategoryLexicon, norm: CategoryNorm) -> Vec<Vec<f64>> {
    let offsets = s.element_offsets();
    let mut points = Vec::new();
    for e in s.elements.iter().filter(|e| e.character.is_some()) {
        let start = offsets[e.ordinal];
        let toks = s.tokens[start..].iter().take_while(|t| t.element == e.ordinal).map(|t| t.text.as_str());
        let mut toks = toks.peekable();
        if toks.peek().is_none() {
            continue;
        }
        points.push(match norm {
            CategoryNorm::Distribution => category_distribution(toks, lex),
            CategoryNorm::Rates => category_rates(toks, lex),
        });
    }
    points
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainFeatureVector {
    pub blocks: Vec<(FeatureBlock, Vec<f64>)>,
}

impl DomainFeatureVector {
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|(_, v)| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block_set(&self) -> BlockSet {
        self.blocks.iter().map(|(b, _)| *b).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|(_, v)| v.iter().copied()).collect()
    }

    /// Keeps only the blocks in `set`.
    pub fn select(&self, set: BlockSet) -> DomainFeatureVector {
        DomainFeatureVector { blocks: self.blocks.iter().filter(|(b, _)| set.contains(*b)).cloned().collect() }
    }

    pub fn column_names(&self) -> Vec<String> {
        let k = self.blocks.iter().find(|(b, _)| *b == FeatureBlock::Clus).map_or(0, |(_, v)| v.len());
        self.block_set().column_names(k)
    }
}

/// Seed for one character's curve of one signal in one document.
pub fn curve_seed(base: u64, doc_id: &str, rank: usize, signal: Signal) -> u64 {
    mix_seed(mix_seed(base, stable_hash(doc_id)), (rank * 2 + signal as usize) as u64)
}

fn curve_values<'a>(curve: &'a ActivityCurve, cfg: &FeatureConfig) -> impl Iterator<Item = f64> + 'a {
    let (mode, alpha) = (cfg.curve_value, cfg.mask_alpha);
    curve.boundaries.iter().map(move |s| match mode {
        CurveValue::Distance => s.distance,
        CurveValue::Masked if s.p_value <= alpha => s.distance,
        CurveValue::Masked => 0.0,
    })
}

/// Computes the enabled blocks for one screenplay, in block order.
pub fn assemble_domain_features(
    s: &Screenplay,
    partition: &SegmentPartition,
    lex: &Lexicons,
    tagger: &dyn Tagger,
    clusters: Option<&ClusterModel>,
    cfg: &FeatureConfig,
    blocks: BlockSet,
) -> Result<DomainFeatureVector, FeatureError> {
    let needs_characters =
        blocks.contains(FeatureBlock::Ling) || blocks.contains(FeatureBlock::Emo) || blocks.contains(FeatureBlock::Tt);
    let characters = if needs_characters {
        let top = top_speaking_characters(s, TOP_CHARACTERS)?;
        if top.len() < TOP_CHARACTERS {
            return Err(FeatureError::TooFewCharacters { needed: TOP_CHARACTERS, found: top.len() });
        }
        top
    } else {
        Vec::new()
    };
    let windows = if blocks.contains(FeatureBlock::Vad) || blocks.contains(FeatureBlock::Int) {
        context_windows(s, partition, cfg.window_pct)?
    } else {
        Vec::new()
    };

    let mut out = Vec::new();
    for block in blocks.iter() {
        let values = match block {
            FeatureBlock::Ling | FeatureBlock::Emo => {
                let mut v = Vec::with_capacity(block.dims(0));
                for (rank, c) in characters.iter().enumerate() {
                    let source = match block {
                        FeatureBlock::Ling => UnitSource::Tags(tagger),
                        _ => UnitSource::Categories(&lex.categories),
                    };
                    let seed = curve_seed(cfg.seed, &s.id, rank, source.signal());
                    let curve = activity_curve(c, partition, source, cfg.n_perm, seed)?;
                    v.extend(curve_values(&curve, cfg));
                }
                v
            }
            FeatureBlock::Tt => characters.iter().map(type_token_ratio).collect::<Result<_, _>>()?,
            FeatureBlock::Vad => vad_profile(&windows, &lex.vad),
            FeatureBlock::Int => intensity_profile(&windows, &lex.intensity),
            FeatureBlock::Clus => {
                let model = clusters.ok_or(FeatureError::MissingClusterModel)?;
                let points = utterance_points(s, &lex.categories, cfg.category_norm);
                crate::cluster::cluster_histogram(&points, model)?
            }
        };
        out.push((block, values));
    }
    Ok(DomainFeatureVector { blocks: out })
}
