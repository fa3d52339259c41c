//! Decoding prompt construction: the first-token (1g) prompt and the
//! longest-neutral-prefix (np) prompt.

use crate::concepts::{extract_concepts, ConceptLexicon};
use crate::sentiment::{PolarityScorer, SentimentError, Verdict};
use crate::text::{detokenize, tokenize, Casing, Token};

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("cannot build a prompt from empty text")]
    EmptyText,
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Unigram,
    NeutralPrefix,
    None,
}

impl std::fmt::Display for PromptKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PromptKind::Unigram => "unigram",
            PromptKind::NeutralPrefix => "neutral_prefix",
            PromptKind::None => "none",
        })
    }
}

/// A decoding prompt: unigram prompts have length 1, neutral-prefix prompts
/// length >= 4, and `None` prompts are empty (the caller skips generation).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prompt {
    pub tokens: Vec<Token>,
    pub kind: PromptKind,
}

/// The first token of the original input.
pub fn prompt_1g(text: &str) -> Result<Prompt, PromptError> {
    let tokens = tokenize(text, Casing::Preserve);
    let first = tokens.into_iter().next().ok_or(PromptError::EmptyText)?;
    Ok(Prompt {
        tokens: vec![first],
        kind: PromptKind::Unigram,
    })
}

/// The longest strict token prefix of length >= 4 that the scorer predicts
/// neutral and whose complementary suffix contains at least one extracted
/// concept. Absence is a value: `kind == None` means the caller skips np
/// generation for this example.
pub fn prompt_np(
    text: &str,
    scorer: &dyn PolarityScorer,
    lex: &ConceptLexicon,
) -> Result<Prompt, PromptError> {
    let tokens = tokenize(text, Casing::Preserve);
    let spans = extract_concepts(text, lex);
    let none = Prompt {
        tokens: Vec::new(),
        kind: PromptKind::None,
    };
    if tokens.len() < 5 {
        // A strict prefix of length >= 4 needs at least 5 tokens.
        return Ok(none);
    }
    // Longest-first: the first neutral qualifying prefix is the answer.
    for len in (4..tokens.len()).rev() {
        let suffix_has_concept = spans.iter().any(|s| s.start >= len);
        if !suffix_has_concept {
            continue;
        }
        let prefix = &tokens[..len];
        if scorer.classify(&detokenize(prefix))? == Verdict::Neutral {
            return Ok(Prompt {
                tokens: prefix.to_vec(),
                kind: PromptKind::NeutralPrefix,
            });
        }
    }
    Ok(none)
}
