//! Acceptance suite: twelve verifiable criteria, one printed pass/fail line
//! each (run with `cargo test --test acceptance -- --nocapture`).
//!
//! Oracles are implemented from scratch in this file (exhaustive
//! enumeration, full-text rescans, recursive edit distance) and compared
//! against the library's incremental implementations.

use cfgen::concepts::EmbeddingTable;
use cfgen::constraints::{
    advance, max_partial_ratio, satisfied_count, Clause, ConstraintSet, ConstraintState, Predicate,
};
use cfgen::decoder::{decode, length_normalize, DecoderConfig};
use cfgen::lm::{perplexity, LanguageModel, NGramLM, TableLM};
use cfgen::metrics::{bleu2, distinct2, levenshtein, mover_sim, LevUnit};
use cfgen::pipeline::{
    augment, generate_cfs, records_to_jsonl, CFRecord, GenMode, GenerateOpts, Steers,
};
use cfgen::prompts::{prompt_1g, prompt_np, PromptKind};
use cfgen::sentiment::{
    split_corpus_by_polarity, LexiconScorer, PolarityScorer, SentimentLexicon, Verdict,
};
use cfgen::text::{
    detokenize, load_dataset, tokenize, Casing, DataFormat, LabeledExample, Polarity, Token,
    Vocabulary,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn verdict_line(n: usize, name: &str, ok: bool) {
    println!(
        "criterion {n:2} ({name}): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} ({name}) failed");
}

fn toks(s: &str) -> Vec<Token> {
    tokenize(s, Casing::Preserve)
}

// ---------------------------------------------------------------------
// Randomized decoder instances shared by criteria 1, 3, 4, 5.

struct Instance {
    lm: TableLM,
    set: ConstraintSet,
    max_len: usize,
}

/// Alphabet the decoder can emit: every id except BOS and EOS.
fn emit_ids(vocab: &Vocabulary) -> Vec<usize> {
    (0..vocab.size())
        .filter(|&id| id != Vocabulary::BOS_ID && id != Vocabulary::EOS_ID)
        .collect()
}

fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters = ["a", "b", "c", "d", "e", "f"];
    let k = rng.gen_range(2..=6usize);
    let words: Vec<Token> = letters[..k]
        .iter()
        .map(|w| Token::new(*w).unwrap())
        .collect();
    let vocab = Vocabulary::new(words.clone());

    // Random probability row: positive weight on everything except BOS.
    let row_of = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut row = vec![0.0; vocab.size()];
        let mut total = 0.0;
        for (id, cell) in row.iter_mut().enumerate().skip(1) {
            let w = rng.gen_range(0.05..1.0);
            let _ = id;
            *cell = w;
            total += w;
        }
        for cell in row.iter_mut().skip(1) {
            *cell /= total;
        }
        row
    };

    // Context-specific rows for every history of length <= 2, default row
    // beyond that, so scores genuinely depend on context.
    let alphabet = emit_ids(&vocab);
    let mut rows: Vec<(Vec<usize>, Vec<f64>)> = vec![(vec![], row_of(&mut rng))];
    for &a in &alphabet {
        rows.push((vec![a], row_of(&mut rng)));
        for &b in &alphabet {
            rows.push((vec![a, b], row_of(&mut rng)));
        }
    }
    let default = row_of(&mut rng);
    let lm = TableLM::new(vocab, rows, default).unwrap();

    let n_clauses = rng.gen_range(0..=2usize);
    let clauses = (0..n_clauses)
        .map(|_| {
            let len = rng.gen_range(1..=2usize);
            let phrase: Vec<Token> = (0..len)
                .map(|_| Token::new(letters[rng.gen_range(0..k)]).unwrap())
                .collect();
            Clause {
                predicates: vec![Predicate::new(phrase).unwrap()],
            }
        })
        .collect();
    Instance {
        lm,
        set: ConstraintSet { clauses },
        max_len: rng.gen_range(2..=5usize),
    }
}

fn oracle_cfg(beam_size: usize) -> DecoderConfig {
    DecoderConfig {
        beam_size,
        // The repetition filter is a separate mechanism with its own
        // criterion; the optimality oracle runs without it.
        no_repeat_ngram: 0,
        lambda: 10.0,
        ..DecoderConfig::default()
    }
}

/// Independent exhaustive scorer: walks every admissible sequence (every
/// step keeps the constraints completable within the remaining budget),
/// finishing with EOS at any length < max_len or without EOS at exactly
/// max_len, and returns the best final objective.
fn oracle_best_objective(inst: &Instance, cfg: &DecoderConfig) -> f64 {
    let vocab = inst.lm.vocabulary();
    let alphabet = emit_ids(vocab);
    let m = inst.set.len();

    fn clause_satisfiable_within(
        state: &ConstraintState,
        set: &ConstraintSet,
        vocab: &Vocabulary,
        budget: usize,
    ) -> bool {
        // From-scratch feasibility: try every completion over the clause
        // tokens (tiny alphabets at this scale).
        if state.all_satisfied() {
            return true;
        }
        if budget == 0 {
            return false;
        }
        let mut tokens: Vec<&Token> = Vec::new();
        for (ci, clause) in set.clauses.iter().enumerate() {
            if state.is_satisfied(ci) {
                continue;
            }
            for p in &clause.predicates {
                for t in p.tokens() {
                    if !tokens.contains(&t) {
                        tokens.push(t);
                    }
                }
            }
        }
        for t in tokens {
            let ns = advance(state, set, t);
            if clause_satisfiable_within(&ns, set, vocab, budget - 1) {
                return true;
            }
        }
        let _ = vocab;
        false
    }

    struct Walk<'a> {
        inst: &'a Instance,
        cfg: &'a DecoderConfig,
        alphabet: &'a [usize],
        m: usize,
        best: f64,
    }

    impl Walk<'_> {
        fn finish(&mut self, lp: f64, len: usize, state: &ConstraintState) {
            let sat = satisfied_count(state);
            let obj = length_normalize(lp, len, self.cfg.length_penalty_alpha)
                - self.cfg.lambda * (self.m - sat) as f64;
            if obj > self.best {
                self.best = obj;
            }
        }

        fn step(&mut self, ids: &mut Vec<usize>, lp: f64, state: &ConstraintState) {
            let row = self.inst.lm.next_logprobs(ids);
            // EOS finish (possible at every length < max_len).
            self.finish(lp + row[Vocabulary::EOS_ID], ids.len(), state);
            if ids.len() == self.inst.max_len {
                return;
            }
            for &id in self.alphabet {
                let ns = advance(state, &self.inst.set, self.inst.lm.vocabulary().token(id));
                let remaining = self.inst.max_len - (ids.len() + 1);
                if !clause_satisfiable_within(
                    &ns,
                    &self.inst.set,
                    self.inst.lm.vocabulary(),
                    remaining,
                ) {
                    continue;
                }
                ids.push(id);
                if ids.len() == self.inst.max_len {
                    // Forced finish without the EOS step.
                    self.finish(lp + row[id], ids.len(), &ns);
                } else {
                    self.step(ids, lp + row[id], &ns);
                }
                ids.pop();
            }
        }
    }

    let mut walk = Walk {
        inst,
        cfg,
        alphabet: &alphabet,
        m,
        best: f64::NEG_INFINITY,
    };
    let init = ConstraintState::new(&inst.set);
    walk.step(&mut Vec::new(), 0.0, &init);
    walk.best
}

/// Best satisfied-clause count among oracle-optimal finishes.
fn oracle_optimum_satisfies_all(inst: &Instance, cfg: &DecoderConfig) -> bool {
    // The optimum satisfies all clauses iff its objective has no lambda
    // deficit; check by comparing against a fully-satisfied lower bound.
    let best = oracle_best_objective(inst, cfg);
    // Any objective above -lambda must have all clauses satisfied, since a
    // single unsatisfied clause costs lambda = 10 and normalized logprobs
    // are <= 0.
    best > -cfg.lambda
}

#[test]
fn criterion_01_decoder_oracle_optimality() {
    let start = std::time::Instant::now();
    let mut checked = 0;
    for seed in 0..120u64 {
        let inst = random_instance(seed);
        let cfg = DecoderConfig {
            max_len: inst.max_len,
            ..oracle_cfg(1_000_000)
        };
        let got = decode(&inst.lm, &[], &inst.set, &cfg).unwrap();
        let want = oracle_best_objective(&inst, &cfg);
        assert!(
            (got[0].objective - want).abs() <= 1e-12,
            "seed {seed}: decoder {} vs oracle {}",
            got[0].objective,
            want
        );
        checked += 1;
    }
    let ok = checked >= 100 && start.elapsed().as_secs() < 60;
    verdict_line(1, "decoder oracle optimality", ok);
}

#[test]
fn criterion_02_constraint_state_oracle() {
    let start = std::time::Instant::now();
    let letters = ["a", "b", "c"];
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_preds = rng.gen_range(1..=4usize);
        // Group the predicates into 1..=n clauses.
        let n_clauses = rng.gen_range(1..=n_preds);
        let mut clauses: Vec<Vec<Predicate>> = vec![Vec::new(); n_clauses];
        for i in 0..n_preds {
            let len = rng.gen_range(1..=3usize);
            let phrase: Vec<Token> = (0..len)
                .map(|_| Token::new(letters[rng.gen_range(0..3)]).unwrap())
                .collect();
            clauses[i % n_clauses].push(Predicate::new(phrase).unwrap());
        }
        let set = ConstraintSet {
            clauses: clauses
                .into_iter()
                .map(|predicates| Clause { predicates })
                .collect(),
        };
        let text: Vec<Token> = (0..rng.gen_range(0..=12usize))
            .map(|_| Token::new(letters[rng.gen_range(0..3)]).unwrap())
            .collect();

        let mut st = ConstraintState::new(&set);
        for t in &text {
            st = advance(&st, &set, t);
        }

        // From-scratch full-text oracle.
        let occurs = |phrase: &[Token]| text.windows(phrase.len()).any(|w| w == phrase);
        let mut oracle_ratio = 0.0f64;
        for (ci, clause) in set.clauses.iter().enumerate() {
            let sat = clause.predicates.iter().any(|p| occurs(p.tokens()));
            assert_eq!(st.is_satisfied(ci), sat, "seed {seed} clause {ci}");
            if sat {
                continue;
            }
            for p in &clause.predicates {
                if p.len() < 2 {
                    continue;
                }
                let longest = (0..p.len())
                    .rev()
                    .find(|&k| k <= text.len() && text[text.len() - k..] == p.tokens()[..k])
                    .unwrap_or(0);
                oracle_ratio = oracle_ratio.max(longest as f64 / p.len() as f64);
            }
        }
        assert_eq!(
            max_partial_ratio(&st, &set),
            oracle_ratio,
            "seed {seed}: partial ratio mismatch"
        );
    }
    let ok = start.elapsed().as_secs() < 5;
    verdict_line(2, "constraint-state oracle", ok);
}

#[test]
fn criterion_03_beam_monotonicity() {
    // Runs over the first 50 oracle instances (the same family criteria 1 and 4
    // sample from). Truncated beam search is not monotone in beam size in full
    // generality -- grouped round-robin allocation can displace a prefix that a
    // smaller beam kept -- so this is an empirical check on typical instances.
    let mut violations = 0;
    for seed in 0..50u64 {
        let inst = random_instance(seed);
        let mut prev = f64::NEG_INFINITY;
        for beam in [1usize, 2, 4, 8, 1_000_000] {
            let cfg = DecoderConfig {
                max_len: inst.max_len,
                ..oracle_cfg(beam)
            };
            let best = decode(&inst.lm, &[], &inst.set, &cfg).unwrap()[0].objective;
            if best < prev - 1e-12 {
                violations += 1;
                eprintln!("seed {seed} beam {beam}: {best} < {prev}");
            }
            prev = prev.max(best);
        }
    }
    verdict_line(3, "beam monotonicity", violations == 0);
}

#[test]
fn criterion_04_satisfaction_dominance() {
    let mut violations = 0;
    for seed in 0..120u64 {
        let inst = random_instance(seed);
        if inst.set.is_empty() {
            continue;
        }
        let cfg = DecoderConfig {
            max_len: inst.max_len,
            ..oracle_cfg(1_000_000)
        };
        if oracle_optimum_satisfies_all(&inst, &cfg) {
            let got = decode(&inst.lm, &[], &inst.set, &cfg).unwrap();
            if got[0].satisfied_clauses != inst.set.len() {
                violations += 1;
                eprintln!("seed {seed}: top result misses clauses");
            }
        }
    }
    verdict_line(4, "satisfaction dominance", violations == 0);
}

fn has_repeated_bigram(tokens: &[Token]) -> bool {
    let mut seen = std::collections::HashSet::new();
    tokens
        .windows(2)
        .any(|w| !seen.insert((w[0].as_str().to_string(), w[1].as_str().to_string())))
}

#[test]
fn criterion_05_repetition_blocking() {
    let mut violations = 0;
    // Randomized instances re-run with the bigram filter on.
    for seed in 0..120u64 {
        let inst = random_instance(seed);
        let cfg = DecoderConfig {
            max_len: inst.max_len,
            no_repeat_ngram: 2,
            ..oracle_cfg(16)
        };
        if let Ok(out) = decode(&inst.lm, &[], &inst.set, &cfg) {
            for g in out {
                if has_repeated_bigram(&g.tokens) {
                    violations += 1;
                }
            }
        }
    }
    // Every generation from the fixture pipeline runs (prompt included in
    // the blocked window, so the concatenation must be clean too).
    let fx = fixture_runs();
    for records in [
        &fx.np.records,
        &fx.unigram.records,
        &fx.no_constraints.records,
    ] {
        for r in records.iter() {
            if has_repeated_bigram(&r.cf_tokens()) {
                violations += 1;
                eprintln!("repeated bigram in {}", r.cf_text());
            }
        }
    }
    verdict_line(5, "repetition blocking", violations == 0);
}

#[test]
fn criterion_06_lm_correctness() {
    // Conditional rows sum to 1 over random contexts.
    let corpus: Vec<Vec<Token>> = load_dataset(&fixture("toy_corpus.tsv"), DataFormat::Tsv)
        .unwrap()
        .iter()
        .map(|e| tokenize(&e.text, Casing::Preserve))
        .collect();
    let vocab = Vocabulary::from_corpus(&corpus);
    let lm = NGramLM::train(vocab.clone(), &corpus, 3, 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ok = true;
    for _ in 0..1000 {
        let len = rng.gen_range(0..6usize);
        let ctx: Vec<usize> = (0..len).map(|_| rng.gen_range(0..vocab.size())).collect();
        let sum: f64 = lm.next_logprobs(&ctx).iter().map(|lp| lp.exp()).sum();
        if (sum - 1.0).abs() > 1e-9 {
            ok = false;
            eprintln!("row for {ctx:?} sums to {sum}");
        }
    }

    // Uniform model perplexity equals |V|.
    let words = ["a", "b", "c", "d", "e"];
    let uvocab = Vocabulary::new(words.iter().map(|w| Token::new(*w).unwrap()));
    let mut row = vec![0.0; uvocab.size()];
    for cell in row.iter_mut().skip(3) {
        *cell = 1.0 / words.len() as f64;
    }
    let uniform = TableLM::new(uvocab, vec![], row).unwrap();
    let ppl = perplexity(&uniform, &toks("a c e b")).unwrap();
    if (ppl - words.len() as f64).abs() > 1e-9 {
        ok = false;
        eprintln!("uniform perplexity {ppl} != {}", words.len());
    }

    // Trained conditionals match hand-computed add-alpha values.
    // Corpus "a b c" + "a b b", order 2, alpha 0.5, predictable |V| = 5.
    let tvocab = Vocabulary::new(toks("a b c"));
    let tlm = NGramLM::train(tvocab.clone(), &[toks("a b c"), toks("a b b")], 2, 0.5).unwrap();
    let id = |s: &str| tvocab.id(&Token::new(s).unwrap()).unwrap();
    let p = |ctx: &[usize], t: usize| tlm.next_logprobs(ctx)[t].exp();
    for (got, want) in [
        (p(&[], id("a")), 2.5 / 4.5),
        (p(&[id("a")], id("b")), 2.5 / 4.5),
        (p(&[id("b")], id("c")), 1.5 / 5.5),
        (p(&[id("b")], id("b")), 1.5 / 5.5),
        (p(&[id("c")], Vocabulary::EOS_ID), 1.5 / 3.5),
        (p(&[id("a")], Vocabulary::UNK_ID), 0.5 / 4.5),
    ] {
        if (got - want).abs() > 1e-12 {
            ok = false;
            eprintln!("conditional {got} != {want}");
        }
    }
    verdict_line(6, "lm correctness", ok);
}

#[test]
fn criterion_07_metric_oracles() {
    let mut ok = true;

    // Levenshtein vs recursive brute force.
    fn lev_rec(a: &[char], b: &[char]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => (lev_rec(ra, rb) + usize::from(x != y))
                .min(lev_rec(ra, b) + 1)
                .min(lev_rec(a, rb) + 1),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let alphabet = ['a', 'b', 'c'];
    for _ in 0..500 {
        let mk = |rng: &mut ChaCha8Rng| -> String {
            (0..rng.gen_range(0..=8usize))
                .map(|_| alphabet[rng.gen_range(0..3)])
                .collect()
        };
        let a = mk(&mut rng);
        let b = mk(&mut rng);
        let ca: Vec<char> = a.chars().collect();
        let cb: Vec<char> = b.chars().collect();
        if levenshtein(&a, &b, LevUnit::Char) != lev_rec(&ca, &cb) {
            ok = false;
            eprintln!("levenshtein mismatch on {a:?} vs {b:?}");
        }
    }
    ok &= levenshtein("kitten", "sitting", LevUnit::Char) == 3;
    ok &= (distinct2(&[toks("a b a b")]).unwrap() - 2.0 / 3.0).abs() < 1e-15;

    // bleu2(x, x) = 1.
    let x = toks("the film was charming and the ending was warm .");
    ok &= (bleu2(&x, &x) - 1.0).abs() <= 1e-12;

    // mover_sim symmetry on random pairs over the fixture embeddings.
    let emb = EmbeddingTable::load(&fixture("embeddings.vec")).unwrap();
    let words = [
        "film", "plot", "ending", "was", "the", "warm", "dull", "story",
    ];
    for _ in 0..100 {
        let mk = |rng: &mut ChaCha8Rng| -> Vec<Token> {
            (0..rng.gen_range(1..=6usize))
                .map(|_| Token::new(words[rng.gen_range(0..words.len())]).unwrap())
                .collect()
        };
        let a = mk(&mut rng);
        let b = mk(&mut rng);
        let ab = mover_sim(&a, &b, &emb).unwrap();
        let ba = mover_sim(&b, &a, &emb).unwrap();
        if (ab - ba).abs() > 1e-12 {
            ok = false;
            eprintln!("mover asymmetry {ab} vs {ba}");
        }
    }
    verdict_line(7, "metric oracles", ok);
}

#[test]
fn criterion_08_prompt_rules() {
    let mut ok = true;
    let lex = cfgen::concepts::ConceptLexicon::load(&fixture("concepts.txt")).unwrap();
    let slex = SentimentLexicon::load(&fixture("sentiment.tsv")).unwrap();
    let scorer = LexiconScorer::new(slex);
    let cases = load_dataset(&fixture("np_cases.tsv"), DataFormat::Tsv).unwrap();
    for case in &cases {
        let p = prompt_np(&case.text, &scorer, &lex).unwrap();
        // Exhaustive prefix scan oracle.
        let tokens = tokenize(&case.text, Casing::Preserve);
        let spans = cfgen::concepts::extract_concepts(&case.text, &lex);
        let mut best: Option<usize> = None;
        for len in 4..tokens.len() {
            if spans.iter().any(|s| s.start >= len)
                && scorer.classify(&detokenize(&tokens[..len])).unwrap() == Verdict::Neutral
            {
                best = Some(len);
            }
        }
        match (best, p.kind) {
            (None, PromptKind::None) => {}
            (Some(len), PromptKind::NeutralPrefix) if p.tokens.len() == len && len >= 4 => {}
            _ => {
                ok = false;
                eprintln!("np mismatch on {}: {:?} vs scan {best:?}", case.id, p.kind);
            }
        }
    }
    // The Table-6-style all-negative opener is skipped.
    ok &= prompt_np(&cases[0].text, &scorer, &lex).unwrap().kind == PromptKind::None;

    // prompt_1g equals the first tokenize slice on random texts.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let words = ["the", "film", "was", "fine", ",", "truly", "."];
    for _ in 0..1000 {
        let text: String = (0..rng.gen_range(1..=10usize))
            .map(|_| words[rng.gen_range(0..words.len())])
            .collect::<Vec<_>>()
            .join(" ");
        let p = prompt_1g(&text).unwrap();
        if p.tokens != tokenize(&text, Casing::Preserve)[0..1] {
            ok = false;
        }
    }
    verdict_line(8, "prompt rules", ok);
}

// ---------------------------------------------------------------------
// Shared fixture pipeline runs (criteria 5, 9-12).

struct FixtureWorld {
    examples: Vec<LabeledExample>,
    np: cfgen::pipeline::RunOutput,
    unigram: cfgen::pipeline::RunOutput,
    no_constraints: cfgen::pipeline::RunOutput,
    emb: EmbeddingTable,
}

fn fixture_decoder_config() -> DecoderConfig {
    DecoderConfig {
        max_len: 24,
        ..DecoderConfig::default()
    }
}

fn fixture_models() -> (Vec<LabeledExample>, NGramLM, NGramLM) {
    let examples = load_dataset(&fixture("toy_corpus.tsv"), DataFormat::Tsv).unwrap();
    let corpus: Vec<Vec<Token>> = examples
        .iter()
        .map(|e| tokenize(&e.text, Casing::Preserve))
        .collect();
    let vocab = Vocabulary::from_corpus(&corpus);
    let (neg, pos) = split_corpus_by_polarity(&examples);
    let split_corpus = |xs: &[LabeledExample]| -> Vec<Vec<Token>> {
        xs.iter()
            .map(|e| tokenize(&e.text, Casing::Preserve))
            .collect()
    };
    let lm_pos = NGramLM::train(vocab.clone(), &split_corpus(&pos), 3, 0.01).unwrap();
    let lm_neg = NGramLM::train(vocab, &split_corpus(&neg), 3, 0.01).unwrap();
    (examples, lm_pos, lm_neg)
}

fn fixture_runs() -> &'static FixtureWorld {
    static WORLD: OnceLock<FixtureWorld> = OnceLock::new();
    WORLD.get_or_init(|| {
        let (examples, lm_pos, lm_neg) = fixture_models();
        let lex = cfgen::concepts::ConceptLexicon::load(&fixture("concepts.txt")).unwrap();
        let scorer = LexiconScorer::new(SentimentLexicon::load(&fixture("sentiment.tsv")).unwrap());
        let emb = EmbeddingTable::load(&fixture("embeddings.vec")).unwrap();
        let steers = Steers {
            positive: &lm_pos,
            negative: &lm_neg,
        };
        let cfg = fixture_decoder_config();
        let run = |mode: GenMode| {
            let mut opts = GenerateOpts::new(mode);
            opts.jobs = 4;
            generate_cfs(&examples, &steers, &lex, &scorer, &cfg, &opts).unwrap()
        };
        FixtureWorld {
            np: run(GenMode::Np),
            unigram: run(GenMode::Unigram),
            no_constraints: run(GenMode::NoConstraints),
            examples,
            emb,
        }
    })
}

/// Wrapper counting how often each steer serves a next-token query.
struct CountingLM<'a> {
    inner: &'a NGramLM,
    calls: &'a AtomicUsize,
}

impl LanguageModel for CountingLM<'_> {
    fn vocabulary(&self) -> &Vocabulary {
        self.inner.vocabulary()
    }
    fn next_logprobs(&self, context: &[usize]) -> Vec<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.next_logprobs(context)
    }
    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }
}

#[test]
fn criterion_09_steer_routing() {
    let (examples, lm_pos, lm_neg) = fixture_models();
    let lex = cfgen::concepts::ConceptLexicon::load(&fixture("concepts.txt")).unwrap();
    let scorer = LexiconScorer::new(SentimentLexicon::load(&fixture("sentiment.tsv")).unwrap());
    let cfg = DecoderConfig {
        max_len: 8,
        beam_size: 4,
        ..DecoderConfig::default()
    };
    let mut ok = true;
    for ex in &examples {
        let pos_calls = AtomicUsize::new(0);
        let neg_calls = AtomicUsize::new(0);
        let steers = Steers {
            positive: &CountingLM {
                inner: &lm_pos,
                calls: &pos_calls,
            },
            negative: &CountingLM {
                inner: &lm_neg,
                calls: &neg_calls,
            },
        };
        let run = generate_cfs(
            std::slice::from_ref(ex),
            &steers,
            &lex,
            &scorer,
            &cfg,
            &GenerateOpts::new(GenMode::Unigram),
        )
        .unwrap();
        let (pos, neg) = (
            pos_calls.load(Ordering::Relaxed),
            neg_calls.load(Ordering::Relaxed),
        );
        // The positive steer is queried iff the source is negative.
        let routed_ok = match ex.label {
            Polarity::Negative => pos > 0 && neg == 0,
            Polarity::Positive => neg > 0 && pos == 0,
        };
        let label_ok = run
            .records
            .iter()
            .all(|r| r.cf_label != ex.label && r.steer_polarity == r.cf_label);
        if !routed_ok || !label_ok {
            ok = false;
            eprintln!("{}: pos_calls {pos}, neg_calls {neg}", ex.id);
        }
    }
    // Label-flip scan over the full shared runs as well.
    let fx = fixture_runs();
    let by_id: std::collections::HashMap<&str, Polarity> = fx
        .examples
        .iter()
        .map(|e| (e.id.as_str(), e.label))
        .collect();
    for records in [
        &fx.np.records,
        &fx.unigram.records,
        &fx.no_constraints.records,
    ] {
        for r in records.iter() {
            if r.cf_label == by_id[r.source_id.as_str()] {
                ok = false;
            }
        }
    }
    verdict_line(9, "steer routing", ok);
}

fn mode_means(
    records: &[CFRecord],
    examples: &[LabeledExample],
    emb: &EmbeddingTable,
) -> (f64, f64) {
    let by_id: std::collections::HashMap<&str, &LabeledExample> =
        examples.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut bleu_sum = 0.0;
    let mut mover_sum = 0.0;
    for r in records {
        let original = tokenize(&by_id[r.source_id.as_str()].text, Casing::Preserve);
        let cf = r.cf_tokens();
        bleu_sum += bleu2(&cf, &original);
        mover_sum += mover_sim(&cf, &original, emb).unwrap();
    }
    let n = records.len() as f64;
    (bleu_sum / n, mover_sum / n)
}

#[test]
fn criterion_10_directional_similarity_ordering() {
    let start = std::time::Instant::now();
    let fx = fixture_runs();
    assert!(fx.examples.len() >= 50);
    let (np_bleu, np_mover) = mode_means(&fx.np.records, &fx.examples, &fx.emb);
    let (og_bleu, og_mover) = mode_means(&fx.unigram.records, &fx.examples, &fx.emb);
    println!(
        "  np: bleu2 {np_bleu:.4}, mover {np_mover:.4}; 1g: bleu2 {og_bleu:.4}, mover {og_mover:.4}"
    );
    let ok = np_bleu > og_bleu && np_mover > og_mover && start.elapsed().as_secs() < 120;
    verdict_line(10, "directional similarity ordering", ok);
}

#[test]
fn criterion_11_no_constraint_ablation_ordering() {
    let fx = fixture_runs();
    let (np_bleu, _) = mode_means(&fx.np.records, &fx.examples, &fx.emb);
    let (nc_bleu, _) = mode_means(&fx.no_constraints.records, &fx.examples, &fx.emb);
    println!("  np bleu2 {np_bleu:.4}, no-constraints bleu2 {nc_bleu:.4}");
    verdict_line(11, "no-constraint ablation ordering", nc_bleu < np_bleu);
}

#[test]
fn criterion_12_pipeline_determinism_and_arithmetic() {
    let mut ok = true;
    // Byte-identical serialized outputs across two independent runs.
    let (examples, lm_pos, lm_neg) = fixture_models();
    let lex = cfgen::concepts::ConceptLexicon::load(&fixture("concepts.txt")).unwrap();
    let scorer = LexiconScorer::new(SentimentLexicon::load(&fixture("sentiment.tsv")).unwrap());
    let steers = Steers {
        positive: &lm_pos,
        negative: &lm_neg,
    };
    let cfg = fixture_decoder_config();
    let run = || {
        let mut opts = GenerateOpts::new(GenMode::Np);
        opts.jobs = 4;
        let out = generate_cfs(&examples, &steers, &lex, &scorer, &cfg, &opts).unwrap();
        (
            records_to_jsonl(&out.records),
            serde_json::to_string(&out.manifest).unwrap(),
        )
    };
    let (a_records, a_manifest) = run();
    let (b_records, b_manifest) = run();
    if a_records != b_records || a_manifest != b_manifest {
        ok = false;
        eprintln!("outputs differ across identical runs");
    }

    // Coverage accounting for the np run.
    let fx = fixture_runs();
    if fx.np.records.len() + fx.np.manifest.skips.len() != fx.examples.len() {
        ok = false;
        eprintln!("np coverage accounting mismatch");
    }

    // Augment arithmetic at several downsample sizes.
    for downsample in [None, Some(0), Some(5), Some(fx.np.records.len())] {
        let ds = augment(&fx.examples, &fx.np.records, downsample, 42).unwrap();
        let expected = fx.examples.len() + downsample.unwrap_or(fx.np.records.len());
        if ds.manifest.total != expected || ds.examples().len() != expected {
            ok = false;
            eprintln!("augment arithmetic mismatch at {downsample:?}");
        }
        // Fixed seed reproduces the same sample.
        let ds2 = augment(&fx.examples, &fx.np.records, downsample, 42).unwrap();
        if records_to_jsonl(&ds.cfs) != records_to_jsonl(&ds2.cfs) {
            ok = false;
            eprintln!("augment sample differs across identical seeds");
        }
    }
    verdict_line(12, "pipeline determinism and arithmetic", ok);
}
