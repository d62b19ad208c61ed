//! Tf-idf over structural-point window text, restricted to the top-k terms
//! by summed training tf-idf mass.
//!
//! `idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1`, raw term counts, and the
//! final vector is L2-normalised.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::Screenplay;
use crate::segment::{context_windows, SegmentError, SegmentPartition};

pub const DEFAULT_TOP_K: usize = 500;

#[derive(Debug, Error)]
pub enum TfidfError {
    #[error("cannot fit tf-idf on an empty corpus")]
    EmptyCorpus,
    #[error("top_k must be at least 1")]
    InvalidTopK,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    /// Term to column index, in lexicographic term order.
    pub vocabulary: BTreeMap<String, usize>,
    /// Document frequency, indexed by vocabulary column.
    pub df: Vec<usize>,
    pub n_docs: usize,
    /// Summed training tf-idf, indexed by vocabulary column.
    pub importance: Vec<f64>,
    /// Selected terms, most important first.
    pub selected: Vec<String>,
    #[serde(default)]
    pub stopwords: BTreeSet<String>,
}

/// Tokens of the nine structural-point windows, concatenated in SP order.
/// Overlapping windows contribute their shared tokens more than once.
pub fn sp_text(s: &Screenplay, partition: &SegmentPartition, window_pct: f64) -> Result<Vec<String>, SegmentError> {
    Ok(context_windows(s, partition, window_pct)?.iter().flat_map(|w| w.words().map(str::to_string)).collect())
}

pub fn idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

pub fn fit_tfidf<D: AsRef<[String]>>(docs: &[D], top_k: usize) -> Result<TfidfModel, TfidfError> {
    fit_tfidf_with_stopwords(docs, top_k, BTreeSet::new())
}

pub fn fit_tfidf_with_stopwords<D: AsRef<[String]>>(
    docs: &[D],
    top_k: usize,
    stopwords: BTreeSet<String>,
) -> Result<TfidfModel, TfidfError> {
    if docs.is_empty() {
        return Err(TfidfError::EmptyCorpus);
    }
    if top_k == 0 {
        return Err(TfidfError::InvalidTopK);
    }
    let counts: Vec<HashMap<&str, usize>> = docs
        .iter()
        .map(|d| {
            let mut m = HashMap::new();
            for t in d.as_ref().iter().filter(|t| !stopwords.contains(*t)) {
                *m.entry(t.as_str()).or_insert(0) += 1;
            }
            m
        })
        .collect();

    let terms: BTreeSet<&str> = counts.iter().flat_map(|m| m.keys().copied()).collect();
    let vocabulary: BTreeMap<String, usize> = terms.iter().enumerate().map(|(i, t)| (t.to_string(), i)).collect();
    let mut df = vec![0usize; vocabulary.len()];
    for m in &counts {
        for t in m.keys() {
            df[vocabulary[*t]] += 1;
        }
    }
    let n_docs = docs.len();
    let mut importance = vec![0.0; vocabulary.len()];
    for m in &counts {
        for (t, &c) in m {
            let col = vocabulary[*t];
            importance[col] += c as f64 * idf(n_docs, df[col]);
        }
    }

    let mut order: Vec<(&String, usize)> = vocabulary.iter().map(|(t, &i)| (t, i)).collect();
    order.sort_by(|a, b| {
        importance[b.1].partial_cmp(&importance[a.1]).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(b.0))
    });
    let selected = order.into_iter().take(top_k).map(|(t, _)| t.clone()).collect();

    Ok(TfidfModel { vocabulary, df, n_docs, importance, selected, stopwords })
}

impl TfidfModel {
    pub fn dim(&self) -> usize {
        self.selected.len()
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|&i| idf(self.n_docs, self.df[i]))
    }

    /// Tf-idf over the selected terms, L2-normalised. Unknown tokens are
    /// ignored and a document without selected terms maps to zeros.
    pub fn transform(&self, doc: &[String]) -> Vec<f64> {
        let column: HashMap<&str, usize> = self.selected.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        let mut v = vec![0.0; self.selected.len()];
        for t in doc {
            if let Some(&i) = column.get(t.as_str()) {
                v[i] += 1.0;
            }
        }
        for (x, t) in v.iter_mut().zip(&self.selected) {
            if *x > 0.0 {
                *x *= self.idf_of(t).unwrap_or(0.0);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    /// Writes `term, index, df, importance` rows in column order.
    pub fn write_vocabulary_tsv<W: Write>(&self, mut out: W) -> Result<(), TfidfError> {
        writeln!(out, "term\tindex\tdf\timportance\tselected")?;
        let chosen: BTreeSet<&str> = self.selected.iter().map(String::as_str).collect();
        for (term, &i) in &self.vocabulary {
            writeln!(
                out,
                "{term}\t{i}\t{}\t{}\t{}",
                self.df[i],
                self.importance[i],
                chosen.contains(term.as_str()) as u8
            )?;
        }
        Ok(())
    }
}
