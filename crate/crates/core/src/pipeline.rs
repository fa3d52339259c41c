//! End-to-end orchestration: per-example constraint building, opposite-
//! polarity steer selection, 1g/np/no-constraint generation, candidate
//! sweeps over the length penalty, loose/tight selection, concept-altered
//! runs, downsampled augmentation and metric reporting.

use crate::concepts::{
    extract_concepts, nearest_concept, unique_phrases, ConceptLexicon, EmbeddingTable,
};
use crate::constraints::{build_cnf, ConstraintSet};
use crate::decoder::{decode, DecodeError, DecoderConfig};
use crate::lm::{perplexity, LanguageModel, LmError};
use crate::metrics::{bleu2, distinct2, levenshtein, mover_sim, LevUnit, MetricError};
use crate::prompts::{prompt_1g, prompt_np, PromptError, PromptKind};
use crate::sentiment::{PolarityScorer, SentimentError};
use crate::text::{detokenize, tokenize, Casing, LabeledExample, Polarity, Token, Vocabulary};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("positive and negative steers use different vocabularies")]
    VocabularyMismatch,
    #[error("no candidates to select from")]
    NoCandidates,
    #[error("downsample_to {requested} exceeds candidate count {available}")]
    DownsampleTooLarge { requested: usize, available: usize },
    #[error("counterfactual records reference unknown source ids: {0}")]
    UnmatchedSourceIds(String),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
    #[error(transparent)]
    Constraint(#[from] crate::constraints::ConstraintError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// The two sentiment steers. The decoder always runs with the steer of the
/// polarity opposite to the source label.
pub struct Steers<'a> {
    pub positive: &'a dyn LanguageModel,
    pub negative: &'a dyn LanguageModel,
}

impl<'a> Steers<'a> {
    pub fn for_target(&self, target: Polarity) -> &'a dyn LanguageModel {
        match target {
            Polarity::Positive => self.positive,
            Polarity::Negative => self.negative,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenMode {
    Np,
    Unigram,
    NoConstraints,
}

impl GenMode {
    pub fn parse(s: &str) -> Option<GenMode> {
        match s.to_lowercase().as_str() {
            "np" => Some(GenMode::Np),
            "1g" => Some(GenMode::Unigram),
            "no_constraints" | "no-constraints" => Some(GenMode::NoConstraints),
            _ => None,
        }
    }
}

impl std::fmt::Display for GenMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GenMode::Np => "np",
            GenMode::Unigram => "1g",
            GenMode::NoConstraints => "no_constraints",
        })
    }
}

/// One generated counterfactual with its prompt, constraints, scores and
/// provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CFRecord {
    pub source_id: String,
    pub prompt_kind: PromptKind,
    pub prompt_tokens: Vec<String>,
    /// Clause lines in the constraint-file form (`pred|pred`, tokens
    /// space-separated).
    pub constraint_set: Vec<String>,
    pub generation_tokens: Vec<String>,
    pub logprob: f64,
    pub objective: f64,
    pub satisfied_clauses: usize,
    pub steer_polarity: Polarity,
    pub cf_label: Polarity,
    pub config_fingerprint: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scorer_verdict: Option<String>,
}

impl CFRecord {
    pub fn generation_text(&self) -> String {
        self.generation_tokens.join(" ")
    }

    /// The counterfactual surface: prompt followed by the generated
    /// continuation. Metrics, selection and augmentation all act on this.
    pub fn cf_tokens(&self) -> Vec<Token> {
        self.prompt_tokens
            .iter()
            .chain(&self.generation_tokens)
            .map(|s| Token::new(s.clone()).expect("record token"))
            .collect()
    }

    pub fn cf_text(&self) -> String {
        detokenize(&self.cf_tokens())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkipEntry {
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnsatisfiableClause {
    pub id: String,
    pub clause: String,
}

/// Run provenance: effective configuration, per-mode counts, skip reasons
/// and unsatisfiable-clause flags.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_fingerprint: String,
    pub mode: String,
    pub effective_config: BTreeMap<String, String>,
    pub input_count: usize,
    pub generated_count: usize,
    pub skips: Vec<SkipEntry>,
    pub unsatisfiable_clauses: Vec<UnsatisfiableClause>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub records: Vec<CFRecord>,
    pub manifest: RunManifest,
}

/// Options beyond the mode: concept alteration, a fixed constraint-set
/// override, scorer verdict annotation, and worker count.
pub struct GenerateOpts<'a> {
    pub mode: GenMode,
    pub alter_concepts: Option<&'a EmbeddingTable>,
    pub constraint_override: Option<&'a ConstraintSet>,
    pub verify_with_scorer: bool,
    pub jobs: usize,
}

impl<'a> GenerateOpts<'a> {
    pub fn new(mode: GenMode) -> Self {
        GenerateOpts {
            mode,
            alter_concepts: None,
            constraint_override: None,
            verify_with_scorer: false,
            jobs: 1,
        }
    }
}

/// Deterministic fingerprint of (decoder config, mode, lexicon hashes, LM
/// hashes).
pub fn config_fingerprint(
    cfg: &DecoderConfig,
    mode: GenMode,
    lex: &ConceptLexicon,
    steers: &Steers,
) -> String {
    let mut h = Sha256::new();
    h.update(format!(
        "beam={};alpha={};norep={};beta={};tol={};lambda={};maxlen={};seed={};mode={};lex={};pos={};neg={}",
        cfg.beam_size,
        cfg.length_penalty_alpha,
        cfg.no_repeat_ngram,
        cfg.beta,
        cfg.sat_tolerance,
        cfg.lambda,
        cfg.max_len,
        cfg.seed,
        mode,
        lex.fingerprint(),
        steers.positive.fingerprint(),
        steers.negative.fingerprint(),
    ));
    format!("{:x}", h.finalize())[..16].to_string()
}

fn decoder_config_map(cfg: &DecoderConfig) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("beam_size".to_string(), cfg.beam_size.to_string()),
        (
            "length_penalty_alpha".to_string(),
            cfg.length_penalty_alpha.to_string(),
        ),
        (
            "no_repeat_ngram".to_string(),
            cfg.no_repeat_ngram.to_string(),
        ),
        ("beta".to_string(), cfg.beta.to_string()),
        ("sat_tolerance".to_string(), cfg.sat_tolerance.to_string()),
        ("lambda".to_string(), cfg.lambda.to_string()),
        ("max_len".to_string(), cfg.max_len.to_string()),
        ("seed".to_string(), cfg.seed.to_string()),
    ])
}

enum ExampleOutcome {
    Record(Box<CFRecord>, Vec<UnsatisfiableClause>),
    Skip(SkipEntry),
}

fn run_example(
    ex: &LabeledExample,
    steers: &Steers,
    lex: &ConceptLexicon,
    scorer: &dyn PolarityScorer,
    cfg: &DecoderConfig,
    opts: &GenerateOpts,
    fingerprint: &str,
) -> Result<ExampleOutcome, PipelineError> {
    let skip = |reason: &str| {
        Ok(ExampleOutcome::Skip(SkipEntry {
            id: ex.id.clone(),
            reason: reason.to_string(),
        }))
    };

    // Constraints from extracted concepts (unless overridden or ablated).
    let set = if opts.mode == GenMode::NoConstraints {
        ConstraintSet::empty()
    } else if let Some(over) = opts.constraint_override {
        over.clone()
    } else {
        let spans = extract_concepts(&ex.text, lex);
        let mut phrases = unique_phrases(&spans);
        if let Some(emb) = opts.alter_concepts {
            for p in &mut phrases {
                // Unembeddable concepts keep their original phrase.
                if let Ok(alt) = nearest_concept(p, emb, lex) {
                    *p = alt;
                }
            }
        }
        build_cnf(&phrases, true)?
    };

    let prompt = match opts.mode {
        GenMode::Np => {
            let p = prompt_np(&ex.text, scorer, lex)?;
            if p.kind == PromptKind::None {
                return skip("no neutral prefix of length >= 4 with a concept in the suffix");
            }
            p
        }
        GenMode::Unigram | GenMode::NoConstraints => prompt_1g(&ex.text)?,
    };

    let target = ex.label.opposite();
    let lm = steers.for_target(target);
    let vocab = lm.vocabulary();

    // A clause none of whose predicates can be produced by the LM (a token
    // outside its vocabulary) can only be satisfied by the prompt.
    let unsat: Vec<UnsatisfiableClause> = set
        .clauses
        .iter()
        .filter(|c| {
            c.predicates
                .iter()
                .all(|p| p.tokens().iter().any(|t| !vocab.contains(t)))
        })
        .map(|c| UnsatisfiableClause {
            id: ex.id.clone(),
            clause: c.line_string(),
        })
        .collect();

    let generations = match decode(lm, &prompt.tokens, &set, cfg) {
        Ok(g) => g,
        Err(e) => return skip(&format!("decode failed: {e}")),
    };
    let Some(top) = generations.into_iter().next() else {
        return skip("decode produced no generations");
    };

    let scorer_verdict = if opts.verify_with_scorer {
        Some(scorer.classify(&detokenize(&top.tokens))?.to_string())
    } else {
        None
    };

    Ok(ExampleOutcome::Record(
        Box::new(CFRecord {
            source_id: ex.id.clone(),
            prompt_kind: prompt.kind,
            prompt_tokens: prompt.tokens.iter().map(|t| t.to_string()).collect(),
            constraint_set: set.line_strings(),
            generation_tokens: top.tokens.iter().map(|t| t.to_string()).collect(),
            logprob: top.logprob,
            objective: top.objective,
            satisfied_clauses: top.satisfied_clauses,
            steer_polarity: target,
            cf_label: target,
            config_fingerprint: fingerprint.to_string(),
            scorer_verdict,
        }),
        unsat,
    ))
}

/// Generates one counterfactual per example (the top-ranked generation),
/// decoding with the steer of the opposite polarity. Output order matches
/// input order; np-mode examples without a qualifying prefix are skipped
/// into the manifest.
pub fn generate_cfs(
    examples: &[LabeledExample],
    steers: &Steers,
    lex: &ConceptLexicon,
    scorer: &dyn PolarityScorer,
    cfg: &DecoderConfig,
    opts: &GenerateOpts,
) -> Result<RunOutput, PipelineError> {
    if steers.positive.vocabulary() != steers.negative.vocabulary() {
        return Err(PipelineError::VocabularyMismatch);
    }
    let fingerprint = config_fingerprint(cfg, opts.mode, lex, steers);

    let outcomes: Vec<Result<ExampleOutcome, PipelineError>> = if opts.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .expect("thread pool");
        pool.install(|| {
            examples
                .par_iter()
                .map(|ex| run_example(ex, steers, lex, scorer, cfg, opts, &fingerprint))
                .collect()
        })
    } else {
        examples
            .iter()
            .map(|ex| run_example(ex, steers, lex, scorer, cfg, opts, &fingerprint))
            .collect()
    };

    let mut records = Vec::new();
    let mut skips = Vec::new();
    let mut unsatisfiable = Vec::new();
    for outcome in outcomes {
        match outcome? {
            ExampleOutcome::Record(r, mut u) => {
                records.push(*r);
                unsatisfiable.append(&mut u);
            }
            ExampleOutcome::Skip(s) => skips.push(s),
        }
    }

    let manifest = RunManifest {
        config_fingerprint: fingerprint,
        mode: opts.mode.to_string(),
        effective_config: decoder_config_map(cfg),
        input_count: examples.len(),
        generated_count: records.len(),
        skips,
        unsatisfiable_clauses: unsatisfiable,
    };
    Ok(RunOutput { records, manifest })
}

/// Convenience wrapper: every concept is passed through its embedding
/// nearest neighbor before constraint construction.
pub fn concept_altered_run(
    examples: &[LabeledExample],
    steers: &Steers,
    lex: &ConceptLexicon,
    scorer: &dyn PolarityScorer,
    cfg: &DecoderConfig,
    emb: &EmbeddingTable,
    mode: GenMode,
) -> Result<RunOutput, PipelineError> {
    let mut opts = GenerateOpts::new(mode);
    opts.alter_concepts = Some(emb);
    generate_cfs(examples, steers, lex, scorer, cfg, &opts)
}

pub const SWEEP_PENALTIES: [f64; 4] = [0.1, 0.3, 0.5, 0.7];

/// One sweep candidate: the record plus the length penalty it was decoded
/// with (needed by selection tie-breaking).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepCandidate {
    pub length_penalty_alpha: f64,
    pub record: CFRecord,
}

/// Decodes one example at each sweep penalty, all else fixed. Empty when
/// the example has no qualifying prompt in the given mode.
pub fn sweep_candidates(
    example: &LabeledExample,
    steers: &Steers,
    lex: &ConceptLexicon,
    scorer: &dyn PolarityScorer,
    cfg: &DecoderConfig,
    mode: GenMode,
) -> Result<Vec<SweepCandidate>, PipelineError> {
    let mut out = Vec::new();
    for alpha in SWEEP_PENALTIES {
        let cfg = DecoderConfig {
            length_penalty_alpha: alpha,
            ..cfg.clone()
        };
        let run = generate_cfs(
            std::slice::from_ref(example),
            steers,
            lex,
            scorer,
            &cfg,
            &GenerateOpts::new(mode),
        )?;
        if let Some(record) = run.records.into_iter().next() {
            out.push(SweepCandidate {
                length_penalty_alpha: alpha,
                record,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectMode {
    /// Most dissimilar to the reference (lowest mover similarity).
    Loose,
    /// Most similar to the reference (highest mover similarity).
    Tight,
}

impl SelectMode {
    pub fn parse(s: &str) -> Option<SelectMode> {
        match s.to_lowercase().as_str() {
            "loose" => Some(SelectMode::Loose),
            "tight" => Some(SelectMode::Tight),
            _ => None,
        }
    }
}

/// Selection against explicit reference tokens; ties break by lower length
/// penalty, then lexicographic generation text.
pub fn select_variant_against(
    candidates: &[SweepCandidate],
    reference: &[Token],
    emb: &EmbeddingTable,
    mode: SelectMode,
) -> Result<CFRecord, PipelineError> {
    if candidates.is_empty() {
        return Err(PipelineError::NoCandidates);
    }
    let mut best: Option<(f64, &SweepCandidate)> = None;
    for cand in candidates {
        let sim = mover_sim(&cand.record.cf_tokens(), reference, emb)?;
        let better = match &best {
            None => true,
            Some((s, b)) => {
                let strictly = match mode {
                    SelectMode::Loose => sim < *s,
                    SelectMode::Tight => sim > *s,
                };
                strictly
                    || (sim == *s
                        && (cand.length_penalty_alpha < b.length_penalty_alpha
                            || (cand.length_penalty_alpha == b.length_penalty_alpha
                                && cand.record.cf_text() < b.record.cf_text())))
            }
        };
        if better {
            best = Some((sim, cand));
        }
    }
    Ok(best.expect("non-empty candidates").1.record.clone())
}

/// Loose/tight selection relative to the original example text.
pub fn select_variant(
    candidates: &[SweepCandidate],
    original: &LabeledExample,
    emb: &EmbeddingTable,
    mode: SelectMode,
) -> Result<CFRecord, PipelineError> {
    let reference = tokenize(&original.text, Casing::Preserve);
    select_variant_against(candidates, &reference, emb, mode)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AugmentManifest {
    pub originals: usize,
    pub selected_cfs: usize,
    pub total: usize,
    pub downsample_to: Option<usize>,
    pub seed: u64,
    pub counts_per_prompt_kind: BTreeMap<String, usize>,
    pub counts_per_source: BTreeMap<String, usize>,
}

/// Originals plus selected counterfactuals projected to labeled examples.
#[derive(Clone, Debug)]
pub struct AugmentedDataset {
    pub originals: Vec<LabeledExample>,
    pub cfs: Vec<CFRecord>,
    pub manifest: AugmentManifest,
}

impl AugmentedDataset {
    /// The concatenated training view: originals then counterfactuals.
    pub fn examples(&self) -> Vec<LabeledExample> {
        let mut out = self.originals.clone();
        for (i, cf) in self.cfs.iter().enumerate() {
            out.push(LabeledExample {
                id: format!("{}::cf{}", cf.source_id, i),
                label: cf.cf_label,
                text: cf.cf_text(),
            });
        }
        out
    }
}

/// Concatenates originals with a uniform without-replacement sample of the
/// counterfactuals (all of them when `downsample_to` is absent).
pub fn augment(
    originals: &[LabeledExample],
    cfs: &[CFRecord],
    downsample_to: Option<usize>,
    seed: u64,
) -> Result<AugmentedDataset, PipelineError> {
    use rand::SeedableRng;
    let selected: Vec<CFRecord> = match downsample_to {
        None => cfs.to_vec(),
        Some(k) => {
            if k > cfs.len() {
                return Err(PipelineError::DownsampleTooLarge {
                    requested: k,
                    available: cfs.len(),
                });
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut idx = rand::seq::index::sample(&mut rng, cfs.len(), k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| cfs[i].clone()).collect()
        }
    };
    let mut per_kind: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_source: BTreeMap<String, usize> = BTreeMap::new();
    for cf in &selected {
        *per_kind.entry(cf.prompt_kind.to_string()).or_insert(0) += 1;
        *per_source.entry(cf.source_id.clone()).or_insert(0) += 1;
    }
    let manifest = AugmentManifest {
        originals: originals.len(),
        selected_cfs: selected.len(),
        total: originals.len() + selected.len(),
        downsample_to,
        seed,
        counts_per_prompt_kind: per_kind,
        counts_per_source: per_source,
    };
    Ok(AugmentedDataset {
        originals: originals.to_vec(),
        cfs: selected,
        manifest,
    })
}

#[derive(Clone, Debug)]
pub struct ReportRow {
    pub id: String,
    pub prompt_kind: String,
    pub bleu2: f64,
    pub levenshtein: usize,
    pub unit: LevUnit,
    pub mover_sim: f64,
    pub ppl: f64,
}

/// Per-pair metrics plus per-prompt-kind corpus Distinct-2 and means.
#[derive(Clone, Debug)]
pub struct MetricTable {
    pub rows: Vec<ReportRow>,
    pub distinct2_by_kind: BTreeMap<String, f64>,
    pub unit: LevUnit,
}

impl MetricTable {
    pub fn mean(&self, kind: &str, f: impl Fn(&ReportRow) -> f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.prompt_kind == kind)
            .map(f)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    /// CSV emission: `id,bleu2,levenshtein,unit,mover_sim,ppl,
    /// distinct2_corpus` with one mean row per prompt kind. BLEU is mean
    /// sentence-level; the header comment says so.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# bleu2 is add-1-smoothed sentence BLEU-2; means are per-sentence means\n");
        out.push_str(
            "# mover_sim is an embedding soft-alignment stand-in; compare orderings only\n",
        );
        out.push_str("id,bleu2,levenshtein,unit,mover_sim,ppl,distinct2_corpus\n");
        for r in &self.rows {
            let d2 = self.distinct2_by_kind.get(&r.prompt_kind).copied();
            out.push_str(&format!(
                "{},{:.6},{},{},{:.6},{:.6},{}\n",
                r.id,
                r.bleu2,
                r.levenshtein,
                r.unit,
                r.mover_sim,
                r.ppl,
                d2.map(|v| format!("{v:.6}")).unwrap_or_default()
            ));
        }
        let kinds: Vec<String> = self.distinct2_by_kind.keys().cloned().collect();
        for kind in kinds {
            let b = self.mean(&kind, |r| r.bleu2).unwrap_or(f64::NAN);
            let l = self
                .mean(&kind, |r| r.levenshtein as f64)
                .unwrap_or(f64::NAN);
            let m = self.mean(&kind, |r| r.mover_sim).unwrap_or(f64::NAN);
            let p = self.mean(&kind, |r| r.ppl).unwrap_or(f64::NAN);
            out.push_str(&format!(
                "mean:{},{:.6},{:.2},{},{:.6},{:.6},{:.6}\n",
                kind, b, l, self.unit, m, p, self.distinct2_by_kind[&kind]
            ));
        }
        out
    }
}

/// Per-pair BLEU-2 / Levenshtein / mover similarity / perplexity against
/// the aligned original, plus per-prompt-kind corpus Distinct-2.
pub fn report(
    originals: &[LabeledExample],
    cfs: &[CFRecord],
    lm_for_ppl: &dyn LanguageModel,
    emb: &EmbeddingTable,
    unit: LevUnit,
) -> Result<MetricTable, PipelineError> {
    let by_id: BTreeMap<&str, &LabeledExample> =
        originals.iter().map(|e| (e.id.as_str(), e)).collect();
    let unmatched: Vec<&str> = cfs
        .iter()
        .map(|c| c.source_id.as_str())
        .filter(|id| !by_id.contains_key(id))
        .collect();
    if !unmatched.is_empty() {
        return Err(PipelineError::UnmatchedSourceIds(unmatched.join(", ")));
    }

    let vocab = lm_for_ppl.vocabulary();
    let mut rows = Vec::new();
    let mut texts_by_kind: BTreeMap<String, Vec<Vec<Token>>> = BTreeMap::new();
    for cf in cfs {
        let original = by_id[cf.source_id.as_str()];
        let orig_tokens = tokenize(&original.text, Casing::Preserve);
        let gen_tokens = cf.cf_tokens();
        // OOV tokens count as UNK for perplexity.
        let ppl_tokens: Vec<Token> = gen_tokens
            .iter()
            .map(|t| {
                if vocab.contains(t) {
                    t.clone()
                } else {
                    vocab.token(Vocabulary::UNK_ID).clone()
                }
            })
            .collect();
        let ppl = if ppl_tokens.is_empty() {
            f64::NAN
        } else {
            perplexity(lm_for_ppl, &ppl_tokens)?
        };
        let kind = cf.prompt_kind.to_string();
        rows.push(ReportRow {
            id: cf.source_id.clone(),
            prompt_kind: kind.clone(),
            bleu2: bleu2(&gen_tokens, &orig_tokens),
            levenshtein: levenshtein(&cf.cf_text(), &original.text, unit),
            unit,
            mover_sim: mover_sim(&gen_tokens, &orig_tokens, emb)?,
            ppl,
        });
        texts_by_kind.entry(kind).or_default().push(gen_tokens);
    }
    let mut distinct2_by_kind = BTreeMap::new();
    for (kind, texts) in &texts_by_kind {
        distinct2_by_kind.insert(kind.clone(), distinct2(texts)?);
    }
    Ok(MetricTable {
        rows,
        distinct2_by_kind,
        unit,
    })
}

/// JSONL emission for counterfactual records: one object per line, field
/// names exactly as `CFRecord` lists them.
pub fn records_to_jsonl(records: &[CFRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("serializable record"))
        .map(|l| l + "\n")
        .collect()
}

pub fn records_from_jsonl(s: &str) -> Result<Vec<CFRecord>, serde_json::Error> {
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
