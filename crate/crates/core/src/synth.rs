//! Synthetic screenplay corpora with planted, controllable signals.
//!
//! Scripts are laid out in two passes: first the element skeleton and its
//! token counts, then the words, so every planted word lands at a known
//! token position. Filler words are pronounceable pseudo-words that no
//! lexicon, tagger suffix rule or marker list knows about.
//!
//! Signals:
//! - markers: nominated scripts carry marker words inside the structural
//!   point windows; the others carry the same number outside them.
//! - arcs: in nominated scripts the two main characters speak words of the
//!   first lexicon category and verb-like words before the midpoint, then
//!   words of the second category and adjective-like words after it. In the
//!   others each utterance picks a side at random, so corpus-wide word
//!   counts match and only the change over time differs.
//! - arousal: nominated scripts are sprinkled with high-arousal words,
//!   the others with low-arousal words.

use std::collections::HashSet;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{CoarseTagger, Tag, Tagger};
use crate::lexicon::{Lexicons, BUILTIN_CATEGORIES, BUILTIN_INTENSITY, BUILTIN_VAD};
use crate::par::mix_seed;
use crate::pipeline::{DatasetManifest, ManifestEntry, ManifestMeta, PipelineError};
use crate::segment::{context_window_range, partition_segments, NUM_SEGMENTS};

pub const MARKERS: [&str; 10] =
    ["epiphany", "reckoning", "ordeal", "threshold", "mentor", "elixir", "summons", "crucible", "nemesis", "omen"];

const FUNCTION_FILLERS: [&str; 18] = [
    "the", "a", "to", "and", "of", "you", "it", "in", "is", "that", "we", "not", "on", "with", "he", "she", "this",
    "for",
];
const CONSONANTS: &[u8] = b"bdfgkmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const FILLER_VOCAB: usize = 1500;
const PARENTHETICALS: [&str; 2] = ["(V.O.)", "(O.S.)"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_docs: usize,
    /// Target length; each script varies by up to 15% either way.
    pub tokens_per_doc: usize,
    pub positive_fraction: f64,
    pub seed: u64,
    pub markers: bool,
    pub arcs: bool,
    pub arousal: bool,
    pub markers_per_window: usize,
    /// Window size the markers are planted for; match the pipeline's.
    pub window_pct: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 200,
            tokens_per_doc: 5000,
            positive_fraction: 0.5,
            seed: 0,
            markers: true,
            arcs: false,
            arousal: false,
            markers_per_window: 3,
            window_pct: crate::segment::DEFAULT_WINDOW_PCT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDoc {
    pub id: String,
    pub label: u8,
    pub text: String,
    /// The token stream the text parses to.
    pub tokens: Vec<String>,
}

struct Vocabulary {
    fillers: Vec<String>,
    zipf: WeightedIndex<f64>,
    locations: Vec<String>,
    names: Vec<String>,
    arc_a: Vec<String>,
    arc_b: Vec<String>,
    verbish: Vec<String>,
    adjish: Vec<String>,
    high_arousal: Vec<String>,
    low_arousal: Vec<String>,
}

fn pseudo_word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    (0..syllables)
        .flat_map(|_| [*CONSONANTS.choose(rng).unwrap() as char, *VOWELS.choose(rng).unwrap() as char])
        .collect()
}

fn sorted(words: impl Iterator<Item = String>) -> Vec<String> {
    let mut v: Vec<String> = words.collect();
    v.sort();
    v
}

impl Vocabulary {
    fn new(rng: &mut ChaCha8Rng, lex: &Lexicons) -> Vocabulary {
        let tagger = CoarseTagger;
        let mut taken: HashSet<String> =
            lex.vad.keys().chain(lex.intensity.keys()).chain(lex.categories.keys()).map(String::from).collect();
        taken.extend(MARKERS.iter().chain(&FUNCTION_FILLERS).map(|s| s.to_string()));
        let mut fresh = |rng: &mut ChaCha8Rng, suffix: &str, tag: Tag, n: usize| -> Vec<String> {
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let syllables = rng.random_range(2..=3);
                let w = pseudo_word(rng, syllables) + suffix;
                if tagger.tag(&w) == tag && taken.insert(w.clone()) {
                    out.push(w);
                }
            }
            out
        };
        let fillers = fresh(rng, "", Tag::Noun, FILLER_VOCAB);
        let locations = fresh(rng, "", Tag::Noun, 24);
        let names = fresh(rng, "", Tag::Noun, 40);
        let verbish = [fresh(rng, "ing", Tag::Verb, 15), fresh(rng, "ed", Tag::Verb, 15)].concat();
        let adjish = [fresh(rng, "ous", Tag::Adj, 15), fresh(rng, "ful", Tag::Adj, 15)].concat();
        let zipf = WeightedIndex::new((0..FILLER_VOCAB).map(|r| 1.0 / (r as f64 + 2.0))).expect("positive weights");

        let cats = &lex.categories;
        let only = |c: usize| sorted(cats.keys().filter(|w| cats.categories_of(w) == [c]).map(String::from));
        let (arc_a, arc_b) = (only(0), only(1.min(cats.len() - 1)));
        let by_arousal = |keep: fn(f64) -> bool| {
            sorted(lex.vad.keys().filter(|w| lex.vad.get(w).is_some_and(|v| keep(v.arousal))).map(String::from))
        };
        let high_arousal = by_arousal(|a| a >= 0.6);
        let low_arousal = by_arousal(|a| a <= 0.4);
        Vocabulary { fillers, zipf, locations, names, arc_a, arc_b, verbish, adjish, high_arousal, low_arousal }
    }

    fn filler(&self, rng: &mut ChaCha8Rng) -> String {
        if rng.random_bool(0.35) {
            FUNCTION_FILLERS.choose(rng).unwrap().to_string()
        } else {
            self.fillers[self.zipf.sample(rng)].clone()
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Heading { exterior: bool, location: usize, night: bool },
    Action,
    Dialogue { speaker: usize, parenthetical: Option<usize> },
}

#[derive(Debug, Clone, Copy)]
struct Planned {
    kind: Kind,
    start: usize,
    len: usize,
}

const MAIN_CHARACTERS: usize = 2;
const MINOR_CHARACTERS: usize = 4;

fn skeleton(rng: &mut ChaCha8Rng, vocab: &Vocabulary, target: usize) -> Vec<Planned> {
    let mut plan = Vec::new();
    let mut n = 0;
    while n < target {
        let kind = Kind::Heading {
            exterior: rng.random_bool(0.4),
            location: rng.random_range(0..vocab.locations.len()),
            night: rng.random_bool(0.3),
        };
        plan.push(Planned { kind, start: n, len: 3 });
        n += 3;
        for _ in 0..rng.random_range(3..=8) {
            let (kind, len) = if rng.random_bool(0.35) {
                (Kind::Action, rng.random_range(8..=40))
            } else {
                let speaker = if rng.random_bool(0.7) {
                    rng.random_range(0..MAIN_CHARACTERS)
                } else {
                    MAIN_CHARACTERS + rng.random_range(0..MINOR_CHARACTERS)
                };
                let parenthetical = rng.random_bool(0.05).then(|| rng.random_range(0..PARENTHETICALS.len()));
                (Kind::Dialogue { speaker, parenthetical }, rng.random_range(4..=30))
            };
            plan.push(Planned { kind, start: n, len });
            n += len;
        }
    }
    plan
}

fn distinct_positions(rng: &mut ChaCha8Rng, pool: &[usize], k: usize) -> Vec<usize> {
    pool.choose_multiple(rng, k.min(pool.len())).copied().collect()
}

/// Capitalised sentences of 5 to 12 words, wrapped at 60 columns.
fn render_prose(rng: &mut ChaCha8Rng, words: &[String]) -> String {
    let mut sentences = Vec::new();
    let mut rest = words;
    while !rest.is_empty() {
        let take = rng.random_range(5..=12).min(rest.len());
        let mut s = rest[..take].join(" ");
        if let Some(first) = s.get(..1) {
            s.replace_range(..1, &first.to_ascii_uppercase());
        }
        s.push('.');
        sentences.push(s);
        rest = &rest[take..];
    }
    let mut lines: Vec<String> = Vec::new();
    let mut line = String::new();
    for w in sentences.join(" ").split(' ') {
        if !line.is_empty() && line.len() + 1 + w.len() > 60 {
            lines.push(std::mem::take(&mut line));
        }
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str(w);
    }
    if !line.is_empty() {
        lines.push(line);
    }
    lines.join("\n")
}

fn generate_doc(cfg: &SynthConfig, vocab: &Vocabulary, index: usize, label: u8) -> SynthDoc {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, index as u64 + 1));
    let jitter = rng.random_range(0.85..=1.15);
    let target = ((cfg.tokens_per_doc as f64 * jitter) as usize).max(20);
    let plan = skeleton(&mut rng, vocab, target);
    let n = plan.last().map_or(0, |p| p.start + p.len);
    let cast: Vec<&String> = vocab.names.choose_multiple(&mut rng, MAIN_CHARACTERS + MINOR_CHARACTERS).collect();

    let mut words: Vec<String> = Vec::with_capacity(n);
    let mut free = vec![true; n];
    for p in &plan {
        match p.kind {
            Kind::Heading { exterior, location, night } => {
                words.push(if exterior { "ext" } else { "int" }.to_string());
                words.push(vocab.locations[location].clone());
                words.push(if night { "night" } else { "day" }.to_string());
                free[p.start..p.start + p.len].iter_mut().for_each(|f| *f = false);
            }
            _ => (0..p.len).for_each(|_| words.push(vocab.filler(&mut rng))),
        }
    }

    if cfg.arousal {
        let pool = if label == 1 { &vocab.high_arousal } else { &vocab.low_arousal };
        for i in (0..n).filter(|&i| free[i]) {
            if !pool.is_empty() && rng.random_bool(0.06) {
                words[i] = pool.choose(&mut rng).unwrap().clone();
            }
        }
    }

    let partition = partition_segments(n).expect("non-empty script");
    if cfg.arcs {
        for p in &plan {
            let Kind::Dialogue { speaker, .. } = p.kind else { continue };
            if speaker >= MAIN_CHARACTERS || p.len < 3 {
                continue;
            }
            let early = partition.segment_of(p.start).is_some_and(|s| s < NUM_SEGMENTS / 2);
            let first_side = if label == 1 { early } else { rng.random_bool(0.5) };
            let (emotion, shape) =
                if first_side { (&vocab.arc_a, &vocab.verbish) } else { (&vocab.arc_b, &vocab.adjish) };
            let slots: Vec<usize> = (p.start..p.start + p.len).collect();
            let chosen = distinct_positions(&mut rng, &slots, 3);
            for (j, &i) in chosen.iter().enumerate() {
                let pool = if j < 2 { emotion } else { shape };
                words[i] = pool.choose(&mut rng).unwrap().clone();
            }
        }
    }

    if cfg.markers && cfg.markers_per_window > 0 {
        let windows: Vec<_> = partition
            .sp_indices
            .iter()
            .map(|&sp| context_window_range(sp, n, cfg.window_pct).expect("sp inside script"))
            .collect();
        let mut chosen = Vec::new();
        if label == 1 {
            for w in &windows {
                let pool: Vec<usize> = w.clone().filter(|&i| free[i]).collect();
                chosen.extend(distinct_positions(&mut rng, &pool, cfg.markers_per_window));
            }
        } else {
            let pool: Vec<usize> = (0..n).filter(|&i| free[i] && !windows.iter().any(|w| w.contains(&i))).collect();
            chosen = distinct_positions(&mut rng, &pool, cfg.markers_per_window * windows.len());
        }
        for i in chosen {
            words[i] = MARKERS.choose(&mut rng).unwrap().to_string();
        }
    }

    let mut blocks = Vec::with_capacity(plan.len());
    for p in &plan {
        let span = &words[p.start..p.start + p.len];
        blocks.push(match p.kind {
            Kind::Heading { exterior, location, night } => format!(
                "{}. {} - {}",
                if exterior { "EXT" } else { "INT" },
                vocab.locations[location].to_ascii_uppercase(),
                if night { "NIGHT" } else { "DAY" }
            ),
            Kind::Action => render_prose(&mut rng, span),
            Kind::Dialogue { speaker, parenthetical } => {
                let mut cue = cast[speaker].to_ascii_uppercase();
                if let Some(k) = parenthetical {
                    cue = format!("{cue} {}", PARENTHETICALS[k]);
                }
                format!("{cue}\n{}", render_prose(&mut rng, span))
            }
        });
    }
    let mut text = blocks.join("\n\n");
    text.push('\n');
    SynthDoc { id: format!("script_{index:04}"), label, text, tokens: words }
}

/// Generates the corpus in id order. Labels are a seeded shuffle of
/// `round(n_docs * positive_fraction)` positives.
pub fn generate_corpus(cfg: &SynthConfig, lex: &Lexicons) -> Vec<SynthDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0));
    let vocab = Vocabulary::new(&mut rng, lex);
    let n_pos = (cfg.n_docs as f64 * cfg.positive_fraction.clamp(0.0, 1.0)).round() as usize;
    let mut labels: Vec<u8> = (0..cfg.n_docs).map(|i| (i < n_pos) as u8).collect();
    labels.shuffle(&mut rng);
    labels.iter().enumerate().map(|(i, &l)| generate_doc(cfg, &vocab, i, l)).collect()
}

/// Writes `scripts/`, `manifest.jsonl`, copies of the builtin lexicons under
/// `lexicons/` and a `config.txt` that points at them.
pub fn write_corpus(dir: &Path, cfg: &SynthConfig) -> Result<DatasetManifest, PipelineError> {
    let write = |path: &Path, text: &str| std::fs::write(path, text).map_err(|e| PipelineError::io(path, e));
    let mkdir = |path: &Path| std::fs::create_dir_all(path).map_err(|e| PipelineError::io(path, e));
    let scripts = dir.join("scripts");
    let lexicons = dir.join("lexicons");
    mkdir(&scripts)?;
    mkdir(&lexicons)?;

    let docs = generate_corpus(cfg, &Lexicons::builtin());
    let mut manifest = DatasetManifest {
        meta: ManifestMeta { name: "synthetic".into(), seed: Some(cfg.seed) },
        base_dir: dir.to_path_buf(),
        ..DatasetManifest::default()
    };
    for d in &docs {
        let rel = Path::new("scripts").join(format!("{}.txt", d.id));
        write(&dir.join(&rel), &d.text)?;
        manifest.entries.push(ManifestEntry { id: d.id.clone(), path: rel, label: d.label });
    }
    manifest.save(&dir.join("manifest.jsonl"))?;

    write(&lexicons.join("vad.tsv"), BUILTIN_VAD)?;
    write(&lexicons.join("intensity.tsv"), BUILTIN_INTENSITY)?;
    write(&lexicons.join("categories.txt"), BUILTIN_CATEGORIES)?;
    let blocks = if cfg.arcs { "ling, emo" } else { "none" };
    let config = format!(
        "# Generated with the corpus.\nseed = {}\nwindow_pct = {}\nblocks = {blocks}\nvad_lexicon = lexicons/vad.tsv\nintensity_lexicon = lexicons/intensity.tsv\ncategory_lexicon = lexicons/categories.txt\n",
        cfg.seed, cfg.window_pct
    );
    write(&dir.join("config.txt"), &config)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_screenplay, top_speaking_characters};
    use crate::segment::context_windows;

    fn small(markers: bool, arcs: bool, arousal: bool) -> SynthConfig {
        SynthConfig { n_docs: 12, tokens_per_doc: 1200, markers, arcs, arousal, seed: 5, ..SynthConfig::default() }
    }

    #[test]
    fn text_parses_to_planned_tokens() {
        for cfg in [small(true, false, false), small(true, true, true)] {
            for d in generate_corpus(&cfg, &Lexicons::builtin()) {
                let s = parse_screenplay(&d.text, &d.id).unwrap();
                let toks: Vec<&str> = s.tokens.iter().map(|t| t.text.as_str()).collect();
                assert_eq!(toks, d.tokens, "{}", d.id);
                let top = top_speaking_characters(&s, 2).unwrap();
                assert!(top.iter().all(|c| c.total_tokens >= 100), "{}", d.id);
            }
        }
    }

    #[test]
    fn labels_and_determinism() {
        let cfg = small(true, false, false);
        let a = generate_corpus(&cfg, &Lexicons::builtin());
        assert_eq!(a, generate_corpus(&cfg, &Lexicons::builtin()));
        assert_eq!(a.iter().filter(|d| d.label == 1).count(), 6);
        let other = generate_corpus(&SynthConfig { seed: 6, ..cfg }, &Lexicons::builtin());
        assert_ne!(a[0].text, other[0].text);
    }

    #[test]
    fn markers_sit_inside_windows_only_for_positives() {
        let cfg = small(true, false, false);
        for d in generate_corpus(&cfg, &Lexicons::builtin()) {
            let s = parse_screenplay(&d.text, &d.id).unwrap();
            let p = partition_segments(s.len()).unwrap();
            let in_windows: usize = context_windows(&s, &p, cfg.window_pct)
                .unwrap()
                .iter()
                .map(|w| w.words().filter(|t| MARKERS.contains(t)).count())
                .sum();
            let total = d.tokens.iter().filter(|t| MARKERS.contains(&t.as_str())).count();
            if d.label == 1 {
                assert!(in_windows >= 9, "{}", d.id);
            } else {
                assert_eq!(in_windows, 0, "{}", d.id);
                assert_eq!(total, 27, "{}", d.id);
            }
        }
    }

    #[test]
    fn fillers_are_lexicon_free() {
        let lex = Lexicons::builtin();
        let docs = generate_corpus(&small(false, false, false), &lex);
        for t in docs.iter().flat_map(|d| &d.tokens) {
            assert!(lex.vad.get(t).is_none() && lex.categories.categories_of(t).is_empty(), "{t}");
        }
    }
}
