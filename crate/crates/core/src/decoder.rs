//! Constrained beam search: per-step expansion, partial-satisfaction
//! scoring, budget-infeasibility pruning, grouping by satisfied-clause count
//! with tolerance, round-robin selection across groups, repetition blocking
//! and length-penalized final ranking.

use crate::constraints::{
    advance, infeasible, max_partial_ratio, satisfied_count, ConstraintSet, ConstraintState,
};
use crate::lm::LanguageModel;
use crate::text::{Token, Vocabulary};
use std::collections::HashMap;

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("vocabulary has no regular tokens")]
    EmptyVocabulary,
    #[error("prompt of {prompt} tokens exceeds max_len {max_len}")]
    PromptTooLong { prompt: usize, max_len: usize },
    #[error("decoding produced no finished hypotheses")]
    NoGeneration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderConfig {
    pub beam_size: usize,
    pub length_penalty_alpha: f64,
    /// Blocked repeated n-gram size; 0 disables blocking.
    pub no_repeat_ngram: usize,
    /// In-progress constraint reward coefficient for step scoring.
    pub beta: f64,
    /// Groups within this distance of the best satisfied-clause count are
    /// kept at selection time.
    pub sat_tolerance: usize,
    /// Unsatisfied-clause penalty in the final ranking objective.
    pub lambda: f64,
    /// Maximum number of generated tokens (prompt excluded).
    pub max_len: usize,
    pub seed: u64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beam_size: 20,
            length_penalty_alpha: 0.3,
            no_repeat_ngram: 2,
            beta: 1.25,
            sat_tolerance: 2,
            lambda: 10.0,
            max_len: 64,
            seed: 0,
        }
    }
}

/// A partial generation inside the beam. `tokens` excludes the prompt;
/// `logprob` is the sum of the per-step log-probabilities actually taken
/// (including the EOS step for finished hypotheses).
#[derive(Clone, Debug)]
pub struct Hypothesis {
    pub tokens: Vec<usize>,
    pub logprob: f64,
    pub cstate: ConstraintState,
    pub finished: bool,
}

/// A finished, ranked generation.
#[derive(Clone, Debug)]
pub struct Generation {
    pub tokens: Vec<Token>,
    pub logprob: f64,
    pub satisfied_clauses: usize,
    /// `length_normalize(logprob) - lambda * (m - satisfied_clauses)`.
    pub objective: f64,
    pub normalized_score: f64,
}

/// GNMT-style length normalization: `s / ((5 + len) / 6)^alpha` for
/// `len >= 1`, `s` unchanged for `len == 0`.
pub fn length_normalize(score: f64, len: usize, alpha: f64) -> f64 {
    if len == 0 {
        score
    } else {
        score / ((5.0 + len as f64) / 6.0).powf(alpha)
    }
}

/// Step score: length-normalized cumulative log-probability plus the
/// in-progress reward `beta * max_partial_ratio`.
pub fn step_score(h: &Hypothesis, set: &ConstraintSet, cfg: &DecoderConfig) -> f64 {
    length_normalize(h.logprob, h.tokens.len(), cfg.length_penalty_alpha)
        + cfg.beta * max_partial_ratio(&h.cstate, set)
}

/// Compares two id sequences by the lexicographic order of their surfaces.
fn lex_cmp(vocab: &Vocabulary, a: &[usize], b: &[usize]) -> std::cmp::Ordering {
    let sa = a.iter().map(|&i| vocab.token(i).as_str());
    let sb = b.iter().map(|&i| vocab.token(i).as_str());
    sa.cmp(sb)
}

/// Next tokens banned by the no-repeat-n-gram rule for the sequence
/// `prompt ++ generated` (prompt tokens count toward the window).
fn banned_next_tokens(full: &[usize], k: usize) -> Vec<usize> {
    // A ban needs a complete prior k-gram, so sequences shorter than k
    // ban nothing.
    if k == 0 || full.len() < k {
        return Vec::new();
    }
    if k == 1 {
        // Every token already present is banned.
        return full.to_vec();
    }
    let prefix = &full[full.len() - (k - 1)..];
    let mut banned = Vec::new();
    for i in 0..=full.len().saturating_sub(k) {
        if &full[i..i + k - 1] == prefix {
            banned.push(full[i + k - 1]);
        }
    }
    banned
}

/// Runs constrained beam search and returns all finished hypotheses ranked
/// by descending objective. Deterministic: exact score ties break by the
/// lexicographic order of the generated token surfaces.
pub fn decode(
    lm: &dyn LanguageModel,
    prompt: &[Token],
    set: &ConstraintSet,
    cfg: &DecoderConfig,
) -> Result<Vec<Generation>, DecodeError> {
    let vocab = lm.vocabulary();
    if vocab.regular_size() == 0 {
        return Err(DecodeError::EmptyVocabulary);
    }
    if prompt.len() > cfg.max_len {
        return Err(DecodeError::PromptTooLong {
            prompt: prompt.len(),
            max_len: cfg.max_len,
        });
    }
    // OOV prompt tokens feed the LM as UNK but advance constraints with
    // their original surfaces.
    let prompt_ids: Vec<usize> = prompt.iter().map(|t| vocab.id_or_unk(t)).collect();
    let mut init_state = ConstraintState::new(set);
    for t in prompt {
        init_state = advance(&init_state, set, t);
    }

    let mut beam = vec![Hypothesis {
        tokens: Vec::new(),
        logprob: 0.0,
        cstate: init_state,
        finished: false,
    }];
    let mut pool: Vec<Hypothesis> = Vec::new();

    for _step in 0..cfg.max_len {
        let mut candidates: Vec<Hypothesis> = Vec::new();
        for h in &beam {
            let mut ctx = Vec::with_capacity(prompt_ids.len() + h.tokens.len());
            ctx.extend_from_slice(&prompt_ids);
            ctx.extend_from_slice(&h.tokens);
            let row = lm.next_logprobs(&ctx);

            // EOS terminates into the pool; it creates no n-gram and needs
            // no feasibility (unsatisfied clauses are penalized at ranking).
            let eos_lp = row[Vocabulary::EOS_ID];
            if eos_lp.is_finite() {
                pool.push(Hypothesis {
                    tokens: h.tokens.clone(),
                    logprob: h.logprob + eos_lp,
                    cstate: h.cstate.clone(),
                    finished: true,
                });
            }

            let banned = banned_next_tokens(&ctx, cfg.no_repeat_ngram);
            let remaining = cfg.max_len - (h.tokens.len() + 1);
            for (id, &lp) in row.iter().enumerate() {
                if id == Vocabulary::BOS_ID || id == Vocabulary::EOS_ID || !lp.is_finite() {
                    continue;
                }
                if banned.contains(&id) {
                    continue;
                }
                let cstate = advance(&h.cstate, set, vocab.token(id));
                if infeasible(&cstate, set, remaining) {
                    continue;
                }
                let mut tokens = Vec::with_capacity(h.tokens.len() + 1);
                tokens.extend_from_slice(&h.tokens);
                tokens.push(id);
                candidates.push(Hypothesis {
                    tokens,
                    logprob: h.logprob + lp,
                    cstate,
                    finished: false,
                });
            }
        }
        if candidates.is_empty() {
            beam.clear();
            break;
        }

        // Group by satisfied-clause count; drop groups below tolerance.
        let mut groups: HashMap<usize, Vec<Hypothesis>> = HashMap::new();
        for c in candidates {
            groups
                .entry(satisfied_count(&c.cstate))
                .or_default()
                .push(c);
        }
        let max_count = *groups.keys().max().unwrap();
        let floor = max_count.saturating_sub(cfg.sat_tolerance);
        let mut ordered: Vec<(usize, Vec<Hypothesis>)> = groups
            .into_iter()
            .filter(|(count, _)| *count >= floor)
            .collect();
        ordered.sort_by_key(|(count, _)| std::cmp::Reverse(*count));
        for (_, g) in &mut ordered {
            g.sort_by(|a, b| {
                step_score(b, set, cfg)
                    .partial_cmp(&step_score(a, set, cfg))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| lex_cmp(vocab, &a.tokens, &b.tokens))
            });
        }

        // Round-robin allocation from the most-satisfied group down.
        let mut selected = Vec::with_capacity(cfg.beam_size.min(64));
        let mut cursors = vec![0usize; ordered.len()];
        'fill: loop {
            let mut advanced = false;
            for (gi, (_, g)) in ordered.iter().enumerate() {
                if cursors[gi] < g.len() {
                    selected.push(g[cursors[gi]].clone());
                    cursors[gi] += 1;
                    advanced = true;
                    if selected.len() >= cfg.beam_size {
                        break 'fill;
                    }
                }
            }
            if !advanced {
                break;
            }
        }
        beam = selected;
    }

    // Survivors at max_len are force-finished without an EOS step.
    for mut h in beam {
        h.finished = true;
        pool.push(h);
    }
    if pool.is_empty() {
        return Err(DecodeError::NoGeneration);
    }

    let m = set.len();
    let mut out: Vec<Generation> = pool
        .into_iter()
        .map(|h| {
            let normalized = length_normalize(h.logprob, h.tokens.len(), cfg.length_penalty_alpha);
            let sat = satisfied_count(&h.cstate);
            Generation {
                tokens: h.tokens.iter().map(|&i| vocab.token(i).clone()).collect(),
                logprob: h.logprob,
                satisfied_clauses: sat,
                objective: normalized - cfg.lambda * (m - sat) as f64,
                normalized_score: normalized,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.objective
            .partial_cmp(&a.objective)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                a.tokens
                    .iter()
                    .map(Token::as_str)
                    .cmp(b.tokens.iter().map(Token::as_str))
            })
    });
    Ok(out)
}
