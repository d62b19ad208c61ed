//! Affect lexicons: valence/arousal/dominance, emotion intensity and lexical
//! categories. Keys pass through [`tokenize`] at load time so lookups agree
//! with the token stream; terms that tokenize to more than one token are
//! dropped.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::tokenize;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("score out of [0, 1] for term {0:?}")]
    Range(String),
    #[error("lexicon has no categories")]
    EmptyLexicon,
}

/// Non-fatal loader findings, e.g. duplicate terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconWarning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LexiconWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Emotion {
    Anger,
    Fear,
    Joy,
    Sadness,
}

impl Emotion {
    pub const ALL: [Emotion; 4] = [Emotion::Anger, Emotion::Fear, Emotion::Joy, Emotion::Sadness];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
        }
    }

    pub fn parse(s: &str) -> Option<Emotion> {
        Emotion::ALL.into_iter().find(|e| e.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vad {
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
}

#[derive(Debug, Clone, Default)]
pub struct VadLexicon {
    entries: HashMap<String, Vad>,
}

#[derive(Debug, Clone, Default)]
pub struct IntensityLexicon {
    entries: HashMap<String, [Option<f64>; 4]>,
}

#[derive(Debug, Clone)]
pub struct CategoryLexicon {
    names: Vec<String>,
    index: HashMap<String, Vec<usize>>,
}

fn read(path: &Path) -> Result<String, LexiconError> {
    std::fs::read_to_string(path).map_err(|source| LexiconError::Io { path: path.display().to_string(), source })
}

/// Non-comment, non-blank lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn single_token(term: &str) -> Option<String> {
    let mut toks = tokenize(term);
    (toks.len() == 1).then(|| toks.pop().unwrap())
}

fn score(field: &str, line: usize, term: &str) -> Result<f64, LexiconError> {
    let v: f64 =
        field.trim().parse().map_err(|_| LexiconError::Parse { line, reason: format!("bad score {field:?}") })?;
    if !(0.0..=1.0).contains(&v) {
        return Err(LexiconError::Range(term.to_string()));
    }
    Ok(v)
}

fn log_warnings(path: &Path, warnings: &[LexiconWarning]) {
    for w in warnings {
        log::warn!("{}: {}", path.display(), w);
    }
}

impl VadLexicon {
    /// Parses `term<TAB>valence<TAB>arousal<TAB>dominance` lines.
    pub fn parse(text: &str) -> Result<(Self, Vec<LexiconWarning>), LexiconError> {
        let mut lex = VadLexicon::default();
        let mut warnings = Vec::new();
        for (line, l) in content_lines(text) {
            let fields: Vec<&str> = l.split('\t').collect();
            if fields.len() != 4 {
                return Err(LexiconError::Parse { line, reason: format!("expected 4 fields, got {}", fields.len()) });
            }
            let term = fields[0];
            let vad = Vad {
                valence: score(fields[1], line, term)?,
                arousal: score(fields[2], line, term)?,
                dominance: score(fields[3], line, term)?,
            };
            let Some(key) = single_token(term) else { continue };
            if lex.entries.insert(key.clone(), vad).is_some() {
                warnings.push(LexiconWarning { line, message: format!("duplicate term {key:?}, keeping last") });
            }
        }
        Ok((lex, warnings))
    }

    pub fn get(&self, token: &str) -> Option<Vad> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl IntensityLexicon {
    /// Parses `term<TAB>emotion<TAB>score` lines.
    pub fn parse(text: &str) -> Result<(Self, Vec<LexiconWarning>), LexiconError> {
        let mut lex = IntensityLexicon::default();
        let mut warnings = Vec::new();
        for (line, l) in content_lines(text) {
            let fields: Vec<&str> = l.split('\t').collect();
            if fields.len() != 3 {
                return Err(LexiconError::Parse { line, reason: format!("expected 3 fields, got {}", fields.len()) });
            }
            let term = fields[0];
            let emotion = Emotion::parse(fields[1].trim())
                .ok_or_else(|| LexiconError::Parse { line, reason: format!("unknown emotion {:?}", fields[1]) })?;
            let value = score(fields[2], line, term)?;
            let Some(key) = single_token(term) else { continue };
            let slot = &mut lex.entries.entry(key.clone()).or_default()[emotion as usize];
            if slot.replace(value).is_some() {
                warnings.push(LexiconWarning {
                    line,
                    message: format!("duplicate term {key:?} for {}, keeping last", emotion.name()),
                });
            }
        }
        Ok((lex, warnings))
    }

    pub fn get(&self, token: &str, emotion: Emotion) -> Option<f64> {
        self.entries.get(token).and_then(|e| e[emotion as usize])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl CategoryLexicon {
    /// Parses `name: word word ...` lines, one category per line.
    pub fn parse(text: &str) -> Result<(Self, Vec<LexiconWarning>), LexiconError> {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, Vec<usize>> = HashMap::new();
        let mut warnings = Vec::new();
        for (line, l) in content_lines(text) {
            let (name, words) = l
                .split_once(':')
                .ok_or_else(|| LexiconError::Parse { line, reason: "expected `name: words`".into() })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(LexiconError::Parse { line, reason: "empty category name".into() });
            }
            if names.iter().any(|n| n == name) {
                return Err(LexiconError::Parse { line, reason: format!("duplicate category {name:?}") });
            }
            let cat = names.len();
            names.push(name.to_string());
            for word in words.split_whitespace() {
                let Some(key) = single_token(word) else { continue };
                let cats = index.entry(key.clone()).or_default();
                if cats.contains(&cat) {
                    warnings.push(LexiconWarning { line, message: format!("{key:?} repeated in {name:?}") });
                } else {
                    cats.push(cat);
                }
            }
        }
        if names.is_empty() {
            return Err(LexiconError::EmptyLexicon);
        }
        Ok((CategoryLexicon { names, index }, warnings))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn categories_of(&self, token: &str) -> &[usize] {
        self.index.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    fn counts<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> (Vec<f64>, usize, usize) {
        let mut counts = vec![0.0; self.names.len()];
        let mut hits = 0;
        let mut n = 0;
        for t in tokens {
            n += 1;
            for &c in self.categories_of(t) {
                counts[c] += 1.0;
                hits += 1;
            }
        }
        (counts, hits, n)
    }
}

pub fn load_vad(path: &Path) -> Result<VadLexicon, LexiconError> {
    let (lex, warnings) = VadLexicon::parse(&read(path)?)?;
    log_warnings(path, &warnings);
    Ok(lex)
}

pub fn load_intensity(path: &Path) -> Result<IntensityLexicon, LexiconError> {
    let (lex, warnings) = IntensityLexicon::parse(&read(path)?)?;
    log_warnings(path, &warnings);
    Ok(lex)
}

pub fn load_categories(path: &Path) -> Result<CategoryLexicon, LexiconError> {
    let (lex, warnings) = CategoryLexicon::parse(&read(path)?)?;
    log_warnings(path, &warnings);
    Ok(lex)
}

/// Category hit counts divided by the total number of hits; uniform when
/// nothing matches. A token in several categories counts once for each.
pub fn category_distribution<'a>(tokens: impl IntoIterator<Item = &'a str>, lex: &CategoryLexicon) -> Vec<f64> {
    let (mut counts, hits, _) = lex.counts(tokens);
    if hits == 0 {
        let u = 1.0 / counts.len() as f64;
        counts.iter_mut().for_each(|c| *c = u);
    } else {
        counts.iter_mut().for_each(|c| *c /= hits as f64);
    }
    counts
}

/// Category hit counts divided by the number of tokens; zeros for an empty
/// token list.
pub fn category_rates<'a>(tokens: impl IntoIterator<Item = &'a str>, lex: &CategoryLexicon) -> Vec<f64> {
    let (mut counts, _, n) = lex.counts(tokens);
    if n > 0 {
        counts.iter_mut().for_each(|c| *c /= n as f64);
    }
    counts
}

/// The three lexicons the feature extractors need.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub vad: VadLexicon,
    pub intensity: IntensityLexicon,
    pub categories: CategoryLexicon,
}

pub const BUILTIN_VAD: &str = include_str!("../data/vad.tsv");
pub const BUILTIN_INTENSITY: &str = include_str!("../data/intensity.tsv");
pub const BUILTIN_CATEGORIES: &str = include_str!("../data/categories.txt");

impl Lexicons {
    /// The small synthetic lexicons shipped with the crate.
    pub fn builtin() -> Self {
        Lexicons {
            vad: VadLexicon::parse(BUILTIN_VAD).expect("builtin VAD lexicon").0,
            intensity: IntensityLexicon::parse(BUILTIN_INTENSITY).expect("builtin intensity lexicon").0,
            categories: CategoryLexicon::parse(BUILTIN_CATEGORIES).expect("builtin category lexicon").0,
        }
    }

    /// Loads each lexicon from its path, falling back to the builtin one.
    pub fn load(vad: Option<&Path>, intensity: Option<&Path>, categories: Option<&Path>) -> Result<Self, LexiconError> {
        let builtin = Lexicons::builtin();
        Ok(Lexicons {
            vad: vad.map(load_vad).transpose()?.unwrap_or(builtin.vad),
            intensity: intensity.map(load_intensity).transpose()?.unwrap_or(builtin.intensity),
            categories: categories.map(load_categories).transpose()?.unwrap_or(builtin.categories),
        })
    }
}
