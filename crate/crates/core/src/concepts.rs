//! Lexicon-backed concept extraction and embedding-based concept
//! alteration.
//!
//! Extraction is a greedy left-to-right longest match of lowercase token
//! phrases against a pre-curated concept lexicon; alteration replaces a
//! concept with its nearest lexicon neighbor under cosine similarity of
//! static word embeddings.

use crate::text::{tokenize, Casing, Token};
use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConceptError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("embedding file line {line}: {msg}")]
    BadEmbeddingFile { line: usize, msg: String },
    #[error("phrase {0:?} is not embeddable; keep the original concept")]
    NotEmbeddable(String),
    #[error("no candidate neighbor for {0:?}; keep the original concept")]
    NoCandidate(String),
    #[error("cosine of zero-norm vector")]
    ZeroNorm,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
}

/// Set of lowercase token phrases (1..=5 tokens each).
#[derive(Clone, Debug)]
pub struct ConceptLexicon {
    entries: HashSet<Vec<Token>>,
    max_phrase_len: usize,
}

impl ConceptLexicon {
    pub fn new<I: IntoIterator<Item = Vec<Token>>>(phrases: I) -> Result<Self, ConceptError> {
        let mut entries = HashSet::new();
        let mut max_phrase_len = 0;
        for p in phrases {
            if p.is_empty() {
                continue;
            }
            let p: Vec<Token> = p.iter().map(Token::to_lowercase).collect();
            max_phrase_len = max_phrase_len.max(p.len());
            entries.insert(p);
        }
        if entries.is_empty() {
            return Err(ConceptError::EmptyLexicon);
        }
        Ok(ConceptLexicon {
            entries,
            max_phrase_len,
        })
    }

    /// One lowercase concept per line, tokens space-separated.
    pub fn load(path: &Path) -> Result<Self, ConceptError> {
        let file = std::fs::File::open(path)?;
        let mut phrases = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            let toks = tokenize(&line, Casing::Lower);
            if !toks.is_empty() {
                phrases.push(toks);
            }
        }
        ConceptLexicon::new(phrases)
    }

    pub fn contains(&self, phrase: &[Token]) -> bool {
        self.entries.contains(phrase)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<Token>> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut sorted: Vec<String> = self
            .entries
            .iter()
            .map(|p| crate::text::detokenize(p))
            .collect();
        sorted.sort();
        let mut h = Sha256::new();
        for s in sorted {
            h.update(&s);
            h.update([0u8]);
        }
        format!("{:x}", h.finalize())[..16].to_string()
    }
}

/// A lexicon match inside a source text, in token offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConceptSpan {
    /// Lowercase matched phrase.
    pub phrase: Vec<Token>,
    pub start: usize,
    pub end: usize,
}

/// Greedy left-to-right longest match on lowercased tokens. Spans never
/// overlap and are returned in source order; duplicate phrases stay as
/// distinct spans.
pub fn extract_concepts(text: &str, lex: &ConceptLexicon) -> Vec<ConceptSpan> {
    let tokens = tokenize(text, Casing::Lower);
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let cap = lex.max_phrase_len.min(tokens.len() - i);
        let mut matched = 0;
        for k in (1..=cap).rev() {
            if lex.contains(&tokens[i..i + k]) {
                matched = k;
                break;
            }
        }
        if matched > 0 {
            out.push(ConceptSpan {
                phrase: tokens[i..i + matched].to_vec(),
                start: i,
                end: i + matched,
            });
            i += matched;
        } else {
            i += 1;
        }
    }
    out
}

/// Distinct concept phrases of `spans` in first-occurrence order.
pub fn unique_phrases(spans: &[ConceptSpan]) -> Vec<Vec<Token>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for s in spans {
        if seen.insert(s.phrase.clone()) {
            out.push(s.phrase.clone());
        }
    }
    out
}

/// word -> dense vector map; lookups are exact-match on the lowercase word.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, vectors: HashMap<String, Vec<f64>>) -> Self {
        EmbeddingTable { dim, vectors }
    }

    pub fn empty(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    /// Text word-vector format: first line `count dim`, then
    /// `word v1 .. vdim` per line.
    pub fn load(path: &Path) -> Result<Self, ConceptError> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let (_, header) = lines.next().ok_or(ConceptError::BadEmbeddingFile {
            line: 1,
            msg: "missing header".to_string(),
        })?;
        let header = header?;
        let mut parts = header.split_whitespace();
        let count: usize =
            parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or(ConceptError::BadEmbeddingFile {
                    line: 1,
                    msg: "header must be `count dim`".to_string(),
                })?;
        let dim: usize =
            parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or(ConceptError::BadEmbeddingFile {
                    line: 1,
                    msg: "header must be `count dim`".to_string(),
                })?;
        let mut vectors = HashMap::with_capacity(count);
        for (i, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts
                .next()
                .ok_or(ConceptError::BadEmbeddingFile {
                    line: i + 1,
                    msg: "missing word".to_string(),
                })?
                .to_lowercase();
            let vec: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let vec = vec.map_err(|e| ConceptError::BadEmbeddingFile {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if vec.len() != dim {
                return Err(ConceptError::BadEmbeddingFile {
                    line: i + 1,
                    msg: format!("expected {dim} components, got {}", vec.len()),
                });
            }
            vectors.insert(word, vec);
        }
        Ok(EmbeddingTable { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lookup(&self, word: &str) -> Option<&Vec<f64>> {
        self.vectors.get(&word.to_lowercase())
    }

    /// Phrase embedding: the joined `a_b` entry when present, otherwise the
    /// mean of the per-token vectors (all tokens must be present).
    pub fn embed_phrase(&self, phrase: &[Token]) -> Option<Vec<f64>> {
        let joined = phrase
            .iter()
            .map(Token::as_str)
            .collect::<Vec<_>>()
            .join("_");
        if let Some(v) = self.lookup(&joined) {
            return Some(v.clone());
        }
        let mut sum = vec![0.0; self.dim];
        for t in phrase {
            let v = self.lookup(t.as_str())?;
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
        for s in &mut sum {
            *s /= phrase.len() as f64;
        }
        Some(sum)
    }
}

/// Standard cosine similarity, clamped to [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, ConceptError> {
    if u.len() != v.len() {
        return Err(ConceptError::DimMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(ConceptError::ZeroNorm);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Nearest lexicon entry to `phrase` under cosine similarity, excluding the
/// phrase itself; ties break lexicographically. Errors signal "keep the
/// original concept" to callers.
pub fn nearest_concept(
    phrase: &[Token],
    emb: &EmbeddingTable,
    lex: &ConceptLexicon,
) -> Result<Vec<Token>, ConceptError> {
    let lower: Vec<Token> = phrase.iter().map(Token::to_lowercase).collect();
    let repr = crate::text::detokenize(&lower);
    let query = emb
        .embed_phrase(&lower)
        .ok_or_else(|| ConceptError::NotEmbeddable(repr.clone()))?;
    let mut best: Option<(f64, String, Vec<Token>)> = None;
    for entry in lex.iter() {
        if *entry == lower {
            continue;
        }
        let Some(v) = emb.embed_phrase(entry) else {
            continue;
        };
        let sim = cosine(&query, &v)?;
        let key = crate::text::detokenize(entry);
        let better = match &best {
            None => true,
            Some((s, k, _)) => sim > *s || (sim == *s && key < *k),
        };
        if better {
            best = Some((sim, key, entry.clone()));
        }
    }
    best.map(|(_, _, e)| e)
        .ok_or(ConceptError::NoCandidate(repr))
}
