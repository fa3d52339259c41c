//! Language models: the `LanguageModel` interface, an add-alpha smoothed
//! n-gram model trainable from a corpus, and a table-driven model for
//! deterministic tests.
//!
//! Distributions range over every vocabulary entry except BOS; EOS and UNK
//! are first-class entries that receive smoothed mass like any other token.

use crate::text::{detokenize, Token, Vocabulary};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum LmError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("vocabulary has no regular tokens")]
    EmptyVocabulary,
    #[error("order must be >= 1, got {0}")]
    BadOrder(usize),
    #[error("alpha must be > 0, got {0}")]
    BadAlpha(f64),
    #[error("token {0:?} not in vocabulary")]
    OutOfVocabulary(String),
    #[error("probability row for context {0:?} sums to {1}, expected 1")]
    UnnormalizedRow(String, f64),
    #[error("perplexity of an empty sequence is undefined")]
    EmptySequence,
    #[error("malformed model file at line {line}: {msg}")]
    BadModelFile { line: usize, msg: String },
}

/// Next-token conditional log-probability provider over a fixed vocabulary.
///
/// `next_logprobs` returns one entry per vocabulary id; the BOS entry is
/// `-inf` and the exponentials of the rest sum to 1.
pub trait LanguageModel: Send + Sync {
    fn vocabulary(&self) -> &Vocabulary;
    fn next_logprobs(&self, context: &[usize]) -> Vec<f64>;
    /// Stable identifier of the model contents, for config fingerprints.
    fn fingerprint(&self) -> String;
}

/// Per-context counts for one n-gram context.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct ContextCounts {
    total: u64,
    by_token: BTreeMap<usize, u64>,
}

/// Add-alpha smoothed n-gram model. Contexts are the most recent
/// `order - 1` tokens, left-padded with BOS; immutable once trained.
#[derive(Clone, Debug, PartialEq)]
pub struct NGramLM {
    order: usize,
    alpha: f64,
    vocab: Vocabulary,
    counts: BTreeMap<Vec<usize>, ContextCounts>,
}

impl NGramLM {
    /// Trains on a corpus of token sentences. Sentences are wrapped in
    /// BOS/EOS internally; tokens outside `vocab` count as UNK.
    pub fn train(
        vocab: Vocabulary,
        corpus: &[Vec<Token>],
        order: usize,
        alpha: f64,
    ) -> Result<NGramLM, LmError> {
        if order < 1 {
            return Err(LmError::BadOrder(order));
        }
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(LmError::BadAlpha(alpha));
        }
        if vocab.regular_size() == 0 {
            return Err(LmError::EmptyVocabulary);
        }
        let mut counts: BTreeMap<Vec<usize>, ContextCounts> = BTreeMap::new();
        let ctx_len = order - 1;
        for sentence in corpus {
            let mut seq = vec![Vocabulary::BOS_ID; ctx_len];
            seq.extend(sentence.iter().map(|t| vocab.id_or_unk(t)));
            seq.push(Vocabulary::EOS_ID);
            for i in ctx_len..seq.len() {
                let ctx = seq[i - ctx_len..i].to_vec();
                let entry = counts.entry(ctx).or_default();
                entry.total += 1;
                *entry.by_token.entry(seq[i]).or_insert(0) += 1;
            }
        }
        Ok(NGramLM {
            order,
            alpha,
            vocab,
            counts,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn context_key(&self, context: &[usize]) -> Vec<usize> {
        let ctx_len = self.order - 1;
        let mut key = Vec::with_capacity(ctx_len);
        if context.len() < ctx_len {
            key.resize(ctx_len - context.len(), Vocabulary::BOS_ID);
            key.extend_from_slice(context);
        } else {
            key.extend_from_slice(&context[context.len() - ctx_len..]);
        }
        key
    }

    /// Writes the model as a versioned plain-text count dump.
    pub fn save(&self, path: &Path) -> Result<(), LmError> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "cfgen-ngram v1")?;
        writeln!(f, "order\t{}", self.order)?;
        writeln!(f, "alpha\t{}", self.alpha)?;
        writeln!(f, "vocab\t{}", self.vocab.regular_size())?;
        for t in self.vocab.regular_tokens() {
            writeln!(f, "{t}")?;
        }
        let rows: usize = self.counts.values().map(|c| c.by_token.len()).sum();
        writeln!(f, "counts\t{rows}")?;
        for (ctx, cc) in &self.counts {
            let ctx_str = ctx
                .iter()
                .map(|&id| self.vocab.token(id).as_str())
                .collect::<Vec<_>>()
                .join(" ");
            for (&tok, &n) in &cc.by_token {
                writeln!(f, "{ctx_str}\t{}\t{n}", self.vocab.token(tok))?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<NGramLM, LmError> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let mut next = |expect: &str| -> Result<(usize, String), LmError> {
            lines
                .next()
                .map(|(i, l)| Ok((i + 1, l?)))
                .unwrap_or(Err(LmError::BadModelFile {
                    line: 0,
                    msg: format!("unexpected end of file, expected {expect}"),
                }))
        };
        let (line, header) = next("header")?;
        if header != "cfgen-ngram v1" {
            return Err(LmError::BadModelFile {
                line,
                msg: format!("bad header {header:?}"),
            });
        }
        let kv = |line: usize, s: &str, key: &str| -> Result<String, LmError> {
            match s.split_once('\t') {
                Some((k, v)) if k == key => Ok(v.to_string()),
                _ => Err(LmError::BadModelFile {
                    line,
                    msg: format!("expected {key}<TAB>value"),
                }),
            }
        };
        let (l, s) = next("order")?;
        let order: usize = kv(l, &s, "order")?
            .parse()
            .map_err(|e| LmError::BadModelFile {
                line: l,
                msg: format!("bad order: {e}"),
            })?;
        let (l, s) = next("alpha")?;
        let alpha: f64 = kv(l, &s, "alpha")?
            .parse()
            .map_err(|e| LmError::BadModelFile {
                line: l,
                msg: format!("bad alpha: {e}"),
            })?;
        let (l, s) = next("vocab")?;
        let vsize: usize = kv(l, &s, "vocab")?
            .parse()
            .map_err(|e| LmError::BadModelFile {
                line: l,
                msg: format!("bad vocab size: {e}"),
            })?;
        let mut regular = Vec::with_capacity(vsize);
        for _ in 0..vsize {
            let (l, s) = next("vocab token")?;
            regular.push(Token::new(s).map_err(|e| LmError::BadModelFile {
                line: l,
                msg: e.to_string(),
            })?);
        }
        let vocab = Vocabulary::new(regular);
        let (l, s) = next("counts")?;
        let rows: usize = kv(l, &s, "counts")?
            .parse()
            .map_err(|e| LmError::BadModelFile {
                line: l,
                msg: format!("bad counts size: {e}"),
            })?;
        let mut counts: BTreeMap<Vec<usize>, ContextCounts> = BTreeMap::new();
        let lookup = |line: usize, s: &str| -> Result<usize, LmError> {
            vocab
                .id(&Token::new(s).map_err(|e| LmError::BadModelFile {
                    line,
                    msg: e.to_string(),
                })?)
                .ok_or_else(|| LmError::BadModelFile {
                    line,
                    msg: format!("count references unknown token {s:?}"),
                })
        };
        for _ in 0..rows {
            let (l, s) = next("count row")?;
            let mut parts = s.splitn(3, '\t');
            let (ctx_str, tok_str, n_str) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(LmError::BadModelFile {
                        line: l,
                        msg: "expected context<TAB>token<TAB>count".to_string(),
                    })
                }
            };
            let mut ctx = Vec::new();
            for w in ctx_str.split(' ').filter(|w| !w.is_empty()) {
                ctx.push(lookup(l, w)?);
            }
            let tok = lookup(l, tok_str)?;
            let n: u64 = n_str.parse().map_err(|e| LmError::BadModelFile {
                line: l,
                msg: format!("bad count: {e}"),
            })?;
            let entry = counts.entry(ctx).or_default();
            entry.total += n;
            *entry.by_token.entry(tok).or_insert(0) += n;
        }
        if order < 1 {
            return Err(LmError::BadOrder(order));
        }
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(LmError::BadAlpha(alpha));
        }
        Ok(NGramLM {
            order,
            alpha,
            vocab,
            counts,
        })
    }
}

impl LanguageModel for NGramLM {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_logprobs(&self, context: &[usize]) -> Vec<f64> {
        let key = self.context_key(context);
        let empty = ContextCounts::default();
        let cc = self.counts.get(&key).unwrap_or(&empty);
        // Predictable set: everything except BOS.
        let v = (self.vocab.size() - 1) as f64;
        let denom = cc.total as f64 + self.alpha * v;
        let mut out = vec![f64::NEG_INFINITY; self.vocab.size()];
        for (id, lp) in out.iter_mut().enumerate().skip(1) {
            let c = cc.by_token.get(&id).copied().unwrap_or(0) as f64;
            *lp = ((c + self.alpha) / denom).ln();
        }
        out
    }

    fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(format!("ngram|{}|{}|", self.order, self.alpha));
        for t in self.vocab.regular_tokens() {
            h.update(t.as_str());
            h.update([0u8]);
        }
        for (ctx, cc) in &self.counts {
            h.update(format!("{ctx:?}"));
            for (tok, n) in &cc.by_token {
                h.update(format!("{tok}:{n};"));
            }
        }
        format!("{:x}", h.finalize())[..16].to_string()
    }
}

/// Test-oracle model: an explicit map from full context to a probability
/// row, with a default row for unlisted contexts.
#[derive(Clone, Debug)]
pub struct TableLM {
    vocab: Vocabulary,
    rows: BTreeMap<Vec<usize>, Vec<f64>>,
    default: Vec<f64>,
}

impl TableLM {
    /// Rows are probabilities indexed by vocabulary id; each must sum to 1
    /// within 1e-9 with zero mass on BOS.
    pub fn new(
        vocab: Vocabulary,
        rows: Vec<(Vec<usize>, Vec<f64>)>,
        default: Vec<f64>,
    ) -> Result<TableLM, LmError> {
        if vocab.regular_size() == 0 {
            return Err(LmError::EmptyVocabulary);
        }
        let check = |ctx: &[usize], row: &[f64]| -> Result<Vec<f64>, LmError> {
            let sum: f64 = row.iter().sum();
            if row.len() != vocab.size()
                || (sum - 1.0).abs() > 1e-9
                || row[Vocabulary::BOS_ID] != 0.0
            {
                return Err(LmError::UnnormalizedRow(format!("{ctx:?}"), sum));
            }
            Ok(row.iter().map(|&p| p.ln()).collect())
        };
        let default = check(&[], &default)?;
        let mut table = BTreeMap::new();
        for (ctx, row) in rows {
            let row = check(&ctx, &row)?;
            table.insert(ctx, row);
        }
        Ok(TableLM {
            vocab,
            rows: table,
            default,
        })
    }
}

impl LanguageModel for TableLM {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_logprobs(&self, context: &[usize]) -> Vec<f64> {
        self.rows.get(context).unwrap_or(&self.default).clone()
    }

    fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(format!("table|{:?}|{:?}", self.rows, self.default));
        format!("{:x}", h.finalize())[..16].to_string()
    }
}

/// Sum of per-position next-token log-probabilities; 0 for an empty
/// sequence, always <= 0. Errors on out-of-vocabulary tokens.
pub fn sequence_logprob(lm: &dyn LanguageModel, tokens: &[Token]) -> Result<f64, LmError> {
    let vocab = lm.vocabulary();
    let mut ids = Vec::with_capacity(tokens.len());
    for t in tokens {
        ids.push(
            vocab
                .id(t)
                .ok_or_else(|| LmError::OutOfVocabulary(t.to_string()))?,
        );
    }
    let mut total = 0.0;
    for i in 0..ids.len() {
        total += lm.next_logprobs(&ids[..i])[ids[i]];
    }
    Ok(total)
}

/// `exp(-logprob / len)`; >= 1 for any proper model. Errors on an empty
/// sequence.
pub fn perplexity(lm: &dyn LanguageModel, tokens: &[Token]) -> Result<f64, LmError> {
    if tokens.is_empty() {
        return Err(LmError::EmptySequence);
    }
    let lp = sequence_logprob(lm, tokens)?;
    Ok((-lp / tokens.len() as f64).exp())
}

/// Convenience: debug string of a token sequence, used in error paths.
pub fn sequence_repr(tokens: &[Token]) -> String {
    detokenize(tokens)
}
