//! CNF lexical constraints and the per-hypothesis satisfaction state.
//!
//! A constraint set is a conjunction of clauses, each a disjunction of
//! positive phrase predicates. A predicate is satisfied when its phrase
//! occurs contiguously in the generated text (prompt included). Partial
//! matches of multi-token predicates are tracked with a failure-function
//! automaton per predicate.

use crate::text::Token;
use std::collections::HashSet;

#[derive(Debug, thiserror::Error)]
pub enum ConstraintError {
    #[error("empty concept phrase")]
    EmptyPhrase,
    #[error("malformed constraint line {line}: {msg}")]
    BadLine { line: usize, msg: String },
}

/// A positive phrase predicate with its KMP failure function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Predicate {
    tokens: Vec<Token>,
    failure: Vec<usize>,
}

impl Predicate {
    pub fn new(tokens: Vec<Token>) -> Result<Predicate, ConstraintError> {
        if tokens.is_empty() {
            return Err(ConstraintError::EmptyPhrase);
        }
        let mut failure = vec![0; tokens.len()];
        let mut k = 0;
        for i in 1..tokens.len() {
            while k > 0 && tokens[i] != tokens[k] {
                k = failure[k - 1];
            }
            if tokens[i] == tokens[k] {
                k += 1;
            }
            failure[i] = k;
        }
        Ok(Predicate { tokens, failure })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Automaton step: longest prefix of the phrase that is a suffix of the
    /// text extended by `token`, given the previous such length `state`.
    pub fn transition(&self, state: usize, token: &Token) -> usize {
        let mut k = state;
        while k > 0 && &self.tokens[k] != token {
            k = self.failure[k - 1];
        }
        if &self.tokens[k] == token {
            k + 1
        } else {
            0
        }
    }

    pub fn phrase_string(&self) -> String {
        crate::text::detokenize(&self.tokens)
    }
}

/// A disjunction of predicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub predicates: Vec<Predicate>,
}

impl Clause {
    pub fn line_string(&self) -> String {
        self.predicates
            .iter()
            .map(Predicate::phrase_string)
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// A conjunction of clauses; `len() == 0` means unconstrained decoding.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    pub clauses: Vec<Clause>,
}

impl ConstraintSet {
    pub fn empty() -> ConstraintSet {
        ConstraintSet::default()
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Parses the constraint-file form: one clause per line, predicates
    /// separated by `|`, tokens by spaces.
    pub fn from_lines<'a, I: IntoIterator<Item = &'a str>>(
        lines: I,
    ) -> Result<ConstraintSet, ConstraintError> {
        let mut clauses = Vec::new();
        for (i, line) in lines.into_iter().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut predicates = Vec::new();
            for part in line.split('|') {
                let tokens: Result<Vec<Token>, _> =
                    part.split_whitespace().map(Token::new).collect();
                let tokens = tokens.map_err(|e| ConstraintError::BadLine {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
                predicates.push(
                    Predicate::new(tokens).map_err(|_| ConstraintError::BadLine {
                        line: i + 1,
                        msg: "empty predicate".to_string(),
                    })?,
                );
            }
            clauses.push(Clause { predicates });
        }
        Ok(ConstraintSet { clauses })
    }

    pub fn line_strings(&self) -> Vec<String> {
        self.clauses.iter().map(Clause::line_string).collect()
    }
}

/// One clause per concept; with `include_capitalized`, each clause admits
/// the lowercase and the first-letter-capitalized form. Duplicate concepts
/// collapse to a single clause.
pub fn build_cnf(
    concepts: &[Vec<Token>],
    include_capitalized: bool,
) -> Result<ConstraintSet, ConstraintError> {
    let mut seen: HashSet<Vec<Token>> = HashSet::new();
    let mut clauses = Vec::new();
    for phrase in concepts {
        if phrase.is_empty() {
            return Err(ConstraintError::EmptyPhrase);
        }
        let lower: Vec<Token> = phrase.iter().map(Token::to_lowercase).collect();
        if !seen.insert(lower.clone()) {
            continue;
        }
        let mut predicates = Vec::new();
        if include_capitalized {
            let capped: Vec<Token> = lower.iter().map(Token::capitalized).collect();
            if capped != lower {
                predicates.push(Predicate::new(capped)?);
            }
        }
        predicates.push(Predicate::new(lower)?);
        clauses.push(Clause { predicates });
    }
    Ok(ConstraintSet { clauses })
}

/// Incremental satisfaction state: a satisfied flag per clause plus, for
/// each predicate of each unsatisfied clause, the length of the longest
/// suffix of the text that is a proper prefix of the predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintState {
    satisfied: Vec<bool>,
    partials: Vec<Vec<usize>>,
}

impl ConstraintState {
    pub fn new(set: &ConstraintSet) -> ConstraintState {
        ConstraintState {
            satisfied: vec![false; set.clauses.len()],
            partials: set
                .clauses
                .iter()
                .map(|c| vec![0; c.predicates.len()])
                .collect(),
        }
    }

    pub fn is_satisfied(&self, clause: usize) -> bool {
        self.satisfied[clause]
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|&s| s)
    }
}

/// Extends the state by one token. Clause satisfaction is sticky; satisfied
/// clauses stop tracking partials.
pub fn advance(state: &ConstraintState, set: &ConstraintSet, token: &Token) -> ConstraintState {
    let mut next = state.clone();
    for (ci, clause) in set.clauses.iter().enumerate() {
        if next.satisfied[ci] {
            continue;
        }
        let mut completed = false;
        for (pi, pred) in clause.predicates.iter().enumerate() {
            let s = pred.transition(next.partials[ci][pi], token);
            if s == pred.len() {
                completed = true;
            }
            next.partials[ci][pi] = s;
        }
        if completed {
            next.satisfied[ci] = true;
            for p in &mut next.partials[ci] {
                *p = 0;
            }
        }
    }
    next
}

/// Number of satisfied clauses.
pub fn satisfied_count(state: &ConstraintState) -> usize {
    state.satisfied.iter().filter(|&&s| s).count()
}

/// Maximum `|partial| / |phrase|` over predicates of unsatisfied clauses
/// with phrase length >= 2; zero when none exist.
pub fn max_partial_ratio(state: &ConstraintState, set: &ConstraintSet) -> f64 {
    let mut best = 0.0f64;
    for (ci, clause) in set.clauses.iter().enumerate() {
        if state.satisfied[ci] {
            continue;
        }
        for (pi, pred) in clause.predicates.iter().enumerate() {
            if pred.len() >= 2 {
                let r = state.partials[ci][pi] as f64 / pred.len() as f64;
                if r > best {
                    best = r;
                }
            }
        }
    }
    best
}

/// Cheapest number of further tokens that could satisfy clause `ci`,
/// crediting current partials.
fn clause_min_needed(state: &ConstraintState, set: &ConstraintSet, ci: usize) -> usize {
    set.clauses[ci]
        .predicates
        .iter()
        .enumerate()
        .map(|(pi, p)| p.len() - state.partials[ci][pi])
        .min()
        .unwrap_or(0)
}

/// True iff no completion within `remaining_budget` tokens can satisfy all
/// clauses. Exact: cheap bounds first, then a bounded search over the joint
/// partial-match state (predicates can share tokens, so the per-clause
/// minima may overlap).
pub fn infeasible(state: &ConstraintState, set: &ConstraintSet, remaining_budget: usize) -> bool {
    let unsat: Vec<usize> = (0..set.clauses.len())
        .filter(|&ci| !state.satisfied[ci])
        .collect();
    if unsat.is_empty() {
        return false;
    }
    let needed: Vec<usize> = unsat
        .iter()
        .map(|&ci| clause_min_needed(state, set, ci))
        .collect();
    // Lower bound: every clause must be completed individually.
    if needed.iter().copied().max().unwrap_or(0) > remaining_budget {
        return true;
    }
    // Upper bound: complete one clause from its current partial, then the
    // rest from scratch (finishing a clause may clobber the others' partial
    // matches, so only the first clause gets partial credit).
    let full: Vec<usize> = unsat
        .iter()
        .map(|&ci| {
            set.clauses[ci]
                .predicates
                .iter()
                .map(|p| p.len())
                .min()
                .unwrap_or(0)
        })
        .collect();
    let sum_full: usize = full.iter().sum();
    let sequential = needed
        .iter()
        .zip(&full)
        .map(|(&n, &f)| sum_full - f + n)
        .min()
        .unwrap_or(0);
    if sequential <= remaining_budget {
        return false;
    }
    // Exact search. Only tokens occurring in unsatisfied predicates can
    // make progress, so the BFS alphabet is finite and small.
    let mut alphabet: Vec<&Token> = Vec::new();
    let mut seen_tok: HashSet<&Token> = HashSet::new();
    for &ci in &unsat {
        for pred in &set.clauses[ci].predicates {
            for t in pred.tokens() {
                if seen_tok.insert(t) {
                    alphabet.push(t);
                }
            }
        }
    }
    let mut frontier = vec![state.clone()];
    let mut visited: HashSet<(Vec<bool>, Vec<Vec<usize>>)> = HashSet::new();
    visited.insert((state.satisfied.clone(), state.partials.clone()));
    for _ in 0..remaining_budget {
        let mut next_frontier = Vec::new();
        for s in &frontier {
            for &tok in &alphabet {
                let ns = advance(s, set, tok);
                if ns.all_satisfied() {
                    return false;
                }
                let key = (ns.satisfied.clone(), ns.partials.clone());
                if visited.insert(key) {
                    next_frontier.push(ns);
                }
            }
        }
        if next_frontier.is_empty() {
            break;
        }
        frontier = next_frontier;
    }
    true
}
