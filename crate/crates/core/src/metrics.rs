//! Intrinsic similarity, diversity and fluency metrics: smoothed BLEU-2,
//! Levenshtein edit distance, Distinct-2, and an embedding soft-alignment
//! similarity (`mover_sim`, a stand-in for optimal-transport scores; only
//! orderings should be compared across systems).

use crate::concepts::{cosine, EmbeddingTable};
use crate::text::{tokenize, Casing, Token};
use std::collections::{HashMap, HashSet};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("distinct-2 of a collection with no bigrams is undefined")]
    NoBigrams,
    #[error("mover_sim: no embeddable token on one side")]
    NoEmbeddableTokens,
    #[error(transparent)]
    Concept(#[from] crate::concepts::ConceptError),
}

/// Per-pair metric values, each within its stated range.
#[derive(Clone, Debug, serde::Serialize)]
pub struct MetricReport {
    pub bleu2: f64,
    pub levenshtein: usize,
    pub mover_sim: f64,
    pub ppl: f64,
    pub distinct2: f64,
}

fn ngram_counts(tokens: &[Token], n: usize) -> HashMap<&[Token], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Smoothed sentence BLEU-2: geometric mean of add-1 smoothed 1-gram and
/// 2-gram modified precisions times the brevity penalty. Both sides empty
/// yields 1; an empty candidate against a non-empty reference yields 0.
pub fn bleu2(candidate: &[Token], reference: &[Token]) -> f64 {
    if candidate.is_empty() && reference.is_empty() {
        return 1.0;
    }
    if candidate.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=2 {
        let cand = ngram_counts(candidate, n);
        let rf = ngram_counts(reference, n);
        let total: usize = cand.values().sum();
        let matched: usize = cand
            .iter()
            .map(|(g, &c)| c.min(rf.get(g).copied().unwrap_or(0)))
            .sum();
        // Add-1 smoothing keeps single-sentence scores defined.
        let p = (matched + 1) as f64 / (total + 1) as f64;
        log_sum += 0.5 * p.ln();
    }
    let c = candidate.len() as f64;
    let r = reference.len() as f64;
    let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    bp * log_sum.exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevUnit {
    Char,
    Token,
}

impl LevUnit {
    pub fn parse(s: &str) -> Option<LevUnit> {
        match s.to_lowercase().as_str() {
            "char" => Some(LevUnit::Char),
            "token" => Some(LevUnit::Token),
            _ => None,
        }
    }
}

impl std::fmt::Display for LevUnit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LevUnit::Char => "char",
            LevUnit::Token => "token",
        })
    }
}

fn lev_dp<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Minimal insert/delete/substitute count at the chosen unit.
pub fn levenshtein(a: &str, b: &str, unit: LevUnit) -> usize {
    match unit {
        LevUnit::Char => {
            let ca: Vec<char> = a.chars().collect();
            let cb: Vec<char> = b.chars().collect();
            lev_dp(&ca, &cb)
        }
        LevUnit::Token => {
            let ta = tokenize(a, Casing::Preserve);
            let tb = tokenize(b, Casing::Preserve);
            lev_dp(&ta, &tb)
        }
    }
}

/// Unique bigrams across the collection divided by total bigrams.
pub fn distinct2(texts: &[Vec<Token>]) -> Result<f64, MetricError> {
    let mut unique: HashSet<(&Token, &Token)> = HashSet::new();
    let mut total = 0usize;
    for t in texts {
        for w in t.windows(2) {
            unique.insert((&w[0], &w[1]));
            total += 1;
        }
    }
    if total == 0 {
        return Err(MetricError::NoBigrams);
    }
    Ok(unique.len() as f64 / total as f64)
}

fn side_mean(from: &[Vec<f64>], to: &[Vec<f64>]) -> Result<f64, MetricError> {
    let mut sum = 0.0;
    for u in from {
        let mut best = -1.0f64;
        for v in to {
            best = best.max(cosine(u, v)?);
        }
        sum += best;
    }
    Ok(sum / from.len() as f64)
}

/// Relaxed soft-alignment similarity: symmetrized mean over tokens of the
/// max cosine to the other side, affinely mapped from [-1, 1] to [0, 1].
/// Symmetric in its arguments.
pub fn mover_sim(a: &[Token], b: &[Token], emb: &EmbeddingTable) -> Result<f64, MetricError> {
    let embed = |side: &[Token]| -> Vec<Vec<f64>> {
        side.iter()
            .filter_map(|t| emb.lookup(&t.as_str().to_lowercase()).cloned())
            .collect()
    };
    let va = embed(a);
    let vb = embed(b);
    if va.is_empty() || vb.is_empty() {
        return Err(MetricError::NoEmbeddableTokens);
    }
    let raw = 0.5 * (side_mean(&va, &vb)? + side_mean(&vb, &va)?);
    Ok((raw + 1.0) / 2.0)
}
