//! Word-level tokenization, vocabulary management and dataset I/O.
//!
//! Tokenization splits on whitespace and separates the punctuation marks
//! `. , ! ? ; : " ' ( )` into their own tokens, so phrase constraints can be
//! matched exactly at the token level.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Punctuation characters that always become standalone tokens.
const SPLIT_PUNCT: &[char] = &['.', ',', '!', '?', ';', ':', '"', '\'', '(', ')'];

/// Surface form of the beginning-of-sequence sentinel.
pub const BOS: &str = "<s>";
/// Surface form of the end-of-sequence sentinel.
pub const EOS: &str = "</s>";
/// Surface form of the unknown-word sentinel.
pub const UNK: &str = "<unk>";

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: unknown label {value:?}")]
    BadLabel { line: usize, value: String },
    #[error("invalid token {0:?}: must be non-empty with no whitespace")]
    BadToken(String),
}

/// A single tokenizer unit: non-empty, no internal whitespace.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    pub fn new(s: impl Into<String>) -> Result<Self, DataError> {
        let s = s.into();
        if s.is_empty() || s.chars().any(char::is_whitespace) {
            return Err(DataError::BadToken(s));
        }
        Ok(Token(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn to_lowercase(&self) -> Token {
        Token(self.0.to_lowercase())
    }

    /// First-letter-capitalized form, e.g. `plot` -> `Plot`.
    pub fn capitalized(&self) -> Token {
        let mut chars = self.0.chars();
        match chars.next() {
            Some(c) => Token(c.to_uppercase().chain(chars).collect()),
            None => self.clone(),
        }
    }
}

impl TryFrom<String> for Token {
    type Error = DataError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Token::new(s)
    }
}

impl From<Token> for String {
    fn from(t: Token) -> String {
        t.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for Token {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Casing {
    Preserve,
    Lower,
}

/// Splits `text` into tokens: whitespace-separated chunks with the
/// `SPLIT_PUNCT` characters broken out as single-character tokens.
/// Casing is applied last. Empty input yields an empty list.
pub fn tokenize(text: &str, casing: Casing) -> Vec<Token> {
    let mut out: Vec<Token> = Vec::new();
    for chunk in text.split_whitespace() {
        let mut cur = String::new();
        for ch in chunk.chars() {
            if SPLIT_PUNCT.contains(&ch) {
                if !cur.is_empty() {
                    out.push(Token(std::mem::take(&mut cur)));
                }
                out.push(Token(ch.to_string()));
            } else {
                cur.push(ch);
            }
        }
        if !cur.is_empty() {
            out.push(Token(cur));
        }
    }
    if casing == Casing::Lower {
        for t in &mut out {
            *t = t.to_lowercase();
        }
    }
    out
}

/// Joins tokens with single spaces. `tokenize(detokenize(ts))` is identity
/// for any `ts` produced by `tokenize`.
pub fn detokenize(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(Token::as_str)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Dense token <-> id mapping with reserved BOS/EOS/UNK sentinels at the
/// front. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<Token>,
    ids: HashMap<Token, usize>,
}

impl Vocabulary {
    pub const BOS_ID: usize = 0;
    pub const EOS_ID: usize = 1;
    pub const UNK_ID: usize = 2;

    /// Builds a vocabulary from regular tokens (insertion order, duplicates
    /// ignored). Sentinels are always present and come first.
    pub fn new<I: IntoIterator<Item = Token>>(regular: I) -> Vocabulary {
        let mut tokens = vec![
            Token(BOS.to_string()),
            Token(EOS.to_string()),
            Token(UNK.to_string()),
        ];
        let mut ids: HashMap<Token, usize> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        for t in regular {
            if !ids.contains_key(&t) {
                ids.insert(t.clone(), tokens.len());
                tokens.push(t);
            }
        }
        Vocabulary { tokens, ids }
    }

    pub fn from_corpus(corpus: &[Vec<Token>]) -> Vocabulary {
        Vocabulary::new(corpus.iter().flatten().cloned())
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    /// Number of non-sentinel entries.
    pub fn regular_size(&self) -> usize {
        self.tokens.len() - 3
    }

    pub fn id(&self, token: &Token) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &Token) -> usize {
        self.id(token).unwrap_or(Self::UNK_ID)
    }

    pub fn token(&self, id: usize) -> &Token {
        &self.tokens[id]
    }

    pub fn contains(&self, token: &Token) -> bool {
        self.ids.contains_key(token)
    }

    /// Regular (non-sentinel) tokens in id order.
    pub fn regular_tokens(&self) -> &[Token] {
        &self.tokens[3..]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub fn opposite(self) -> Polarity {
        match self {
            Polarity::Negative => Polarity::Positive,
            Polarity::Positive => Polarity::Negative,
        }
    }

    /// Accepts the aliases `0`, `1`, `neg`, `pos`, `negative`, `positive`.
    pub fn parse(s: &str) -> Option<Polarity> {
        match s.trim().to_lowercase().as_str() {
            "0" | "neg" | "negative" => Some(Polarity::Negative),
            "1" | "pos" | "positive" => Some(Polarity::Positive),
            _ => None,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Negative => "negative",
            Polarity::Positive => "positive",
        })
    }
}

/// A polarity-labeled source document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub label: Polarity,
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    Tsv,
    Jsonl,
}

impl DataFormat {
    pub fn parse(s: &str) -> Option<DataFormat> {
        match s.to_lowercase().as_str() {
            "tsv" => Some(DataFormat::Tsv),
            "jsonl" => Some(DataFormat::Jsonl),
            _ => None,
        }
    }
}

/// Loads labeled examples in file order. TSV is `id<TAB>label<TAB>text`
/// without a header; JSONL has string fields `id`, `label`, `text`.
pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Vec<LabeledExample>, DataError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        match format {
            DataFormat::Tsv => {
                let mut parts = line.splitn(3, '\t');
                let id = parts.next().unwrap_or("");
                let label = parts.next().ok_or_else(|| DataError::Malformed {
                    line: lineno,
                    msg: "missing label column".to_string(),
                })?;
                let text = parts.next().ok_or_else(|| DataError::Malformed {
                    line: lineno,
                    msg: "missing text column".to_string(),
                })?;
                let label = Polarity::parse(label).ok_or_else(|| DataError::BadLabel {
                    line: lineno,
                    value: label.to_string(),
                })?;
                if text.is_empty() {
                    return Err(DataError::Malformed {
                        line: lineno,
                        msg: "empty text".to_string(),
                    });
                }
                out.push(LabeledExample {
                    id: id.to_string(),
                    label,
                    text: text.to_string(),
                });
            }
            DataFormat::Jsonl => {
                let v: serde_json::Value =
                    serde_json::from_str(&line).map_err(|e| DataError::Malformed {
                        line: lineno,
                        msg: e.to_string(),
                    })?;
                let field = |name: &str| -> Result<String, DataError> {
                    v.get(name)
                        .and_then(|x| x.as_str())
                        .map(str::to_string)
                        .ok_or_else(|| DataError::Malformed {
                            line: lineno,
                            msg: format!("missing string field {name:?}"),
                        })
                };
                let id = field("id")?;
                let label_raw = field("label")?;
                let text = field("text")?;
                let label = Polarity::parse(&label_raw).ok_or(DataError::BadLabel {
                    line: lineno,
                    value: label_raw,
                })?;
                if text.is_empty() {
                    return Err(DataError::Malformed {
                        line: lineno,
                        msg: "empty text".to_string(),
                    });
                }
                out.push(LabeledExample { id, label, text });
            }
        }
    }
    Ok(out)
}

/// Writes examples in the format accepted by `load_dataset`. TSV text must
/// not contain tabs or newlines.
pub fn save_dataset(
    path: &Path,
    examples: &[LabeledExample],
    format: DataFormat,
) -> Result<(), DataError> {
    let mut file = std::fs::File::create(path)?;
    for (i, ex) in examples.iter().enumerate() {
        match format {
            DataFormat::Tsv => {
                if ex.text.contains('\t') || ex.text.contains('\n') {
                    return Err(DataError::Malformed {
                        line: i + 1,
                        msg: "text contains tab or newline, not representable in TSV".to_string(),
                    });
                }
                writeln!(file, "{}\t{}\t{}", ex.id, ex.label, ex.text)?;
            }
            DataFormat::Jsonl => {
                let v = serde_json::json!({
                    "id": ex.id,
                    "label": ex.label.to_string(),
                    "text": ex.text,
                });
                writeln!(file, "{v}")?;
            }
        }
    }
    Ok(())
}

/// Reads a corpus file with one tokenizable sentence per line.
pub fn load_corpus(path: &Path, casing: Casing) -> Result<Vec<Vec<Token>>, DataError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let toks = tokenize(&line, casing);
        if !toks.is_empty() {
            out.push(toks);
        }
    }
    Ok(out)
}
