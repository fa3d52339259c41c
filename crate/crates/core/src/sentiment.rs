//! Pluggable sentence-polarity scoring.
//!
//! The bundled implementation is a lexicon mean; an external classifier can
//! be plugged in through a line-oriented subprocess protocol (UTF-8 text
//! line in, decimal score line out, one-to-one, flushed per line).

use crate::text::{tokenize, Casing, LabeledExample, Polarity};
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

#[derive(Debug, thiserror::Error)]
pub enum SentimentError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("sentiment lexicon line {line}: {msg}")]
    BadLexiconFile { line: usize, msg: String },
    #[error("scorer subprocess protocol error: {0}")]
    Protocol(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Negative,
    Neutral,
    Positive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Negative => "negative",
            Verdict::Neutral => "neutral",
            Verdict::Positive => "positive",
        })
    }
}

/// Sentence polarity in [-1, 1] with a threshold classification:
/// negative iff `score < theta_neg`, positive iff `score > theta_pos`,
/// neutral otherwise.
pub trait PolarityScorer: Send + Sync {
    fn score(&self, text: &str) -> Result<f64, SentimentError>;

    /// `(theta_neg, theta_pos)` with `theta_neg < 0 < theta_pos`.
    fn thresholds(&self) -> (f64, f64) {
        (-0.1, 0.1)
    }

    fn classify(&self, text: &str) -> Result<Verdict, SentimentError> {
        let s = self.score(text)?;
        let (neg, pos) = self.thresholds();
        Ok(if s < neg {
            Verdict::Negative
        } else if s > pos {
            Verdict::Positive
        } else {
            Verdict::Neutral
        })
    }
}

/// word -> polarity in [-1, 1]; lookups are on lowercase words and missing
/// words score 0.
#[derive(Clone, Debug, Default)]
pub struct SentimentLexicon {
    polarity: HashMap<String, f64>,
}

impl SentimentLexicon {
    pub fn new<I: IntoIterator<Item = (String, f64)>>(entries: I) -> Self {
        SentimentLexicon {
            polarity: entries
                .into_iter()
                .map(|(w, s)| (w.to_lowercase(), s.clamp(-1.0, 1.0)))
                .collect(),
        }
    }

    /// `word<TAB>score` per line.
    pub fn load(path: &Path) -> Result<Self, SentimentError> {
        let file = std::fs::File::open(path)?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, score) = line
                .split_once('\t')
                .ok_or(SentimentError::BadLexiconFile {
                    line: i + 1,
                    msg: "expected word<TAB>score".to_string(),
                })?;
            let score: f64 = score
                .trim()
                .parse()
                .map_err(|e| SentimentError::BadLexiconFile {
                    line: i + 1,
                    msg: format!("bad score: {e}"),
                })?;
            entries.push((word.to_string(), score));
        }
        Ok(SentimentLexicon::new(entries))
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.polarity.get(&word.to_lowercase()).copied()
    }

    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut sorted: Vec<(&String, &f64)> = self.polarity.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(b.0));
        let mut h = Sha256::new();
        for (w, s) in sorted {
            h.update(format!("{w}\t{s}\n"));
        }
        format!("{:x}", h.finalize())[..16].to_string()
    }
}

/// Mean of per-token polarities over tokens present in the lexicon; 0 when
/// no token is present. Bag-of-words: permutation-invariant.
pub fn lexicon_score(text: &str, lex: &SentimentLexicon) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in tokenize(text, Casing::Lower) {
        if let Some(s) = lex.get(t.as_str()) {
            sum += s;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Lexicon-backed scorer with configurable thresholds.
#[derive(Clone, Debug)]
pub struct LexiconScorer {
    pub lexicon: SentimentLexicon,
    pub theta_neg: f64,
    pub theta_pos: f64,
}

impl LexiconScorer {
    pub fn new(lexicon: SentimentLexicon) -> Self {
        LexiconScorer {
            lexicon,
            theta_neg: -0.1,
            theta_pos: 0.1,
        }
    }

    pub fn with_thresholds(lexicon: SentimentLexicon, theta_neg: f64, theta_pos: f64) -> Self {
        LexiconScorer {
            lexicon,
            theta_neg,
            theta_pos,
        }
    }
}

impl PolarityScorer for LexiconScorer {
    fn score(&self, text: &str) -> Result<f64, SentimentError> {
        Ok(lexicon_score(text, &self.lexicon))
    }

    fn thresholds(&self) -> (f64, f64) {
        (self.theta_neg, self.theta_pos)
    }
}

/// Scorer backed by an external process speaking the line protocol.
/// Requests are serialized per handle.
pub struct SubprocessScorer {
    child: Mutex<(Child, ChildStdin, BufReader<ChildStdout>)>,
    theta_neg: f64,
    theta_pos: f64,
}

impl SubprocessScorer {
    pub fn spawn(
        program: &str,
        args: &[String],
        theta_neg: f64,
        theta_pos: f64,
    ) -> Result<Self, SentimentError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().ok_or_else(|| {
            SentimentError::Protocol("scorer subprocess has no stdin".to_string())
        })?;
        let stdout = child.stdout.take().ok_or_else(|| {
            SentimentError::Protocol("scorer subprocess has no stdout".to_string())
        })?;
        Ok(SubprocessScorer {
            child: Mutex::new((child, stdin, BufReader::new(stdout))),
            theta_neg,
            theta_pos,
        })
    }
}

impl PolarityScorer for SubprocessScorer {
    fn score(&self, text: &str) -> Result<f64, SentimentError> {
        let mut guard = self
            .child
            .lock()
            .map_err(|_| SentimentError::Protocol("scorer mutex poisoned".to_string()))?;
        let (_, stdin, stdout) = &mut *guard;
        let one_line = text.replace('\n', " ");
        writeln!(stdin, "{one_line}")?;
        stdin.flush()?;
        let mut reply = String::new();
        stdout.read_line(&mut reply)?;
        reply
            .trim()
            .parse::<f64>()
            .map_err(|e| SentimentError::Protocol(format!("bad score line {reply:?}: {e}")))
    }

    fn thresholds(&self) -> (f64, f64) {
        (self.theta_neg, self.theta_pos)
    }
}

impl Drop for SubprocessScorer {
    fn drop(&mut self) {
        if let Ok(mut guard) = self.child.lock() {
            let _ = guard.0.kill();
            let _ = guard.0.wait();
        }
    }
}

/// Partition by label, order preserved: `(negative, positive)`.
pub fn split_corpus_by_polarity(
    examples: &[LabeledExample],
) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    for ex in examples {
        match ex.label {
            Polarity::Negative => neg.push(ex.clone()),
            Polarity::Positive => pos.push(ex.clone()),
        }
    }
    (neg, pos)
}
