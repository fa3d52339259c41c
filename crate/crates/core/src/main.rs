//! Command-line front end: each subcommand fronts one pipeline operation.
//!
//! Exit codes: 0 ok; 2 config error; 3 I/O error; 4 contract violation.
//! Setting precedence: flags > config file > defaults.

use cfgen::concepts::{extract_concepts, ConceptLexicon, EmbeddingTable};
use cfgen::lm::NGramLM;
use cfgen::metrics::LevUnit;
use cfgen::pipeline::{
    augment, generate_cfs, records_from_jsonl, records_to_jsonl, report, select_variant,
    select_variant_against, sweep_candidates, GenMode, GenerateOpts, SelectMode, Steers,
    SweepCandidate,
};
use cfgen::runconfig::RunConfig;
use cfgen::sentiment::{LexiconScorer, SentimentLexicon};
use cfgen::text::{load_corpus, load_dataset, save_dataset, Casing, DataFormat, Token, Vocabulary};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_CONTRACT: u8 = 4;

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(msg: impl std::fmt::Display) -> CliError {
        CliError {
            code: EXIT_CONFIG,
            message: msg.to_string(),
        }
    }

    fn io(msg: impl std::fmt::Display) -> CliError {
        CliError {
            code: EXIT_IO,
            message: msg.to_string(),
        }
    }

    fn contract(msg: impl std::fmt::Display) -> CliError {
        CliError {
            code: EXIT_CONTRACT,
            message: msg.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "cfgen",
    about = "Loose counterfactual generation with lexically constrained, sentiment-steered decoding",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an add-alpha smoothed n-gram language model on a text corpus
    TrainLm(TrainLmArgs),
    /// Extract lexicon concept spans from a labeled dataset
    Extract(ExtractArgs),
    /// Generate one counterfactual per example
    Generate(GenerateArgs),
    /// Decode each example at length penalties 0.1, 0.3, 0.5 and 0.7
    Sweep(GenerateArgs),
    /// Pick one sweep candidate per example by mover similarity
    Select(SelectArgs),
    /// Concatenate originals with (optionally downsampled) counterfactuals
    Augment(AugmentArgs),
    /// Per-pair similarity/fluency metrics as CSV
    Report(ReportArgs),
}

/// Flags shared by every config-driven command. Unset flags fall back to
/// the config file, then to built-in defaults.
#[derive(Args)]
struct ConfigArgs {
    /// Flat key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Beam size [default: 20]
    #[arg(long)]
    beam_size: Option<usize>,
    /// Length penalty exponent [default: 0.3]
    #[arg(long)]
    length_penalty_alpha: Option<f64>,
    /// Blocked repeated n-gram size, 0 disables [default: 2]
    #[arg(long)]
    no_repeat_ngram: Option<usize>,
    /// In-progress constraint reward coefficient [default: 1.25]
    #[arg(long)]
    beta: Option<f64>,
    /// Satisfied-count group tolerance [default: 2]
    #[arg(long)]
    sat_tolerance: Option<usize>,
    /// Unsatisfied-clause penalty [default: 10]
    #[arg(long)]
    lambda: Option<f64>,
    /// Maximum generated tokens, prompt excluded [default: 64]
    #[arg(long)]
    max_len: Option<usize>,
    /// RNG seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Negative-verdict threshold [default: -0.1]
    #[arg(long)]
    theta_neg: Option<f64>,
    /// Positive-verdict threshold [default: 0.1]
    #[arg(long)]
    theta_pos: Option<f64>,
    /// Parallel worker count [default: 1]
    #[arg(long)]
    jobs: Option<usize>,
}

impl ConfigArgs {
    /// Effective configuration: defaults, then config file, then flags.
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).map_err(CliError::config)?,
            None => RunConfig::default(),
        };
        macro_rules! over {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$field = v; })*
            };
        }
        over!(
            beam_size,
            length_penalty_alpha,
            no_repeat_ngram,
            beta,
            sat_tolerance,
            lambda,
            max_len,
            seed,
            theta_neg,
            theta_pos,
            jobs
        );
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainLmArgs {
    /// Corpus file, one sentence per line
    #[arg(long)]
    corpus: PathBuf,
    /// Extra corpus whose tokens join the vocabulary without contributing
    /// counts; pass the same set to every steer so they share one vocabulary
    #[arg(long)]
    vocab_corpus: Vec<PathBuf>,
    /// N-gram order
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// Additive smoothing constant
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Output model file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    /// Labeled dataset file
    #[arg(long)]
    dataset: PathBuf,
    /// Dataset format: tsv or jsonl
    #[arg(long, default_value = "tsv")]
    format: String,
    /// Concept lexicon file, one phrase per line
    #[arg(long)]
    concepts: PathBuf,
    /// Output spans JSONL
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Labeled dataset file
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Dataset format: tsv or jsonl [default: tsv]
    #[arg(long)]
    format: Option<String>,
    /// Concept lexicon file
    #[arg(long)]
    concepts: Option<PathBuf>,
    /// Sentiment lexicon file (word<TAB>score)
    #[arg(long)]
    sentiment: Option<PathBuf>,
    /// Positive-steer model file
    #[arg(long)]
    lm_positive: Option<PathBuf>,
    /// Negative-steer model file
    #[arg(long)]
    lm_negative: Option<PathBuf>,
    /// Word-embedding file, required with --alter-concepts
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Prompt mode: np, 1g or no_constraints [default: np]
    #[arg(long)]
    mode: Option<String>,
    /// Replace each concept with its embedding nearest neighbor
    #[arg(long)]
    alter_concepts: bool,
    /// Annotate records with the scorer's verdict on the generation
    #[arg(long)]
    verify_with_scorer: bool,
    /// Output directory for cfs.jsonl (candidates.jsonl for sweep) and
    /// manifest.json
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    /// Sweep candidates JSONL (from the sweep command)
    #[arg(long)]
    candidates: PathBuf,
    /// Original labeled dataset
    #[arg(long)]
    dataset: PathBuf,
    /// Dataset format: tsv or jsonl
    #[arg(long, default_value = "tsv")]
    format: String,
    /// Word-embedding file
    #[arg(long)]
    embeddings: PathBuf,
    /// Selection mode: loose or tight
    #[arg(long, default_value = "loose")]
    select: String,
    /// Select relative to these prior generations (CFRecord JSONL)
    /// instead of the original texts
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Output CFRecord JSONL
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AugmentArgs {
    /// Original labeled dataset
    #[arg(long)]
    dataset: PathBuf,
    /// Dataset format: tsv or jsonl
    #[arg(long, default_value = "tsv")]
    format: String,
    /// Counterfactual records JSONL
    #[arg(long)]
    cfs: PathBuf,
    /// Sample this many counterfactuals without replacement; omit to keep
    /// all
    #[arg(long)]
    downsample: Option<usize>,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset file; a manifest is written next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Original labeled dataset
    #[arg(long)]
    dataset: PathBuf,
    /// Dataset format: tsv or jsonl
    #[arg(long, default_value = "tsv")]
    format: String,
    /// Counterfactual records JSONL
    #[arg(long)]
    cfs: PathBuf,
    /// Model file for perplexity
    #[arg(long)]
    lm: PathBuf,
    /// Word-embedding file
    #[arg(long)]
    embeddings: PathBuf,
    /// Levenshtein unit: char or token
    #[arg(long, default_value = "token")]
    lev_unit: String,
    /// Output metrics CSV
    #[arg(long)]
    out: PathBuf,
}

fn parse_format(s: &str) -> CliResult<DataFormat> {
    DataFormat::parse(s).ok_or_else(|| CliError::config(format!("unknown format {s:?}")))
}

fn require_path<'a>(flag: &str, cli: &'a Option<PathBuf>, file: &'a str) -> CliResult<PathBuf> {
    if let Some(p) = cli {
        return Ok(p.clone());
    }
    if !file.is_empty() {
        return Ok(PathBuf::from(file));
    }
    Err(CliError::config(format!("missing required --{flag}")))
}

fn check_readable(path: &Path) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::io(format!("cannot read {}", path.display())))
    }
}

fn write_file(path: &Path, content: &str) -> CliResult {
    std::fs::write(path, content)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn cmd_train_lm(args: &TrainLmArgs) -> CliResult {
    check_readable(&args.corpus)?;
    let corpus = load_corpus(&args.corpus, Casing::Preserve).map_err(CliError::io)?;
    let mut vocab_corpus = corpus.clone();
    for extra in &args.vocab_corpus {
        check_readable(extra)?;
        vocab_corpus.extend(load_corpus(extra, Casing::Preserve).map_err(CliError::io)?);
    }
    // Sorted so that models trained over the same token set share a
    // vocabulary no matter how the corpus files are ordered.
    let unique: std::collections::BTreeSet<Token> = vocab_corpus.into_iter().flatten().collect();
    let vocab = Vocabulary::new(unique);
    let lm = NGramLM::train(vocab, &corpus, args.order, args.alpha).map_err(CliError::config)?;
    lm.save(&args.out).map_err(CliError::io)?;
    Ok(())
}

fn cmd_extract(args: &ExtractArgs) -> CliResult {
    check_readable(&args.dataset)?;
    check_readable(&args.concepts)?;
    let format = parse_format(&args.format)?;
    let examples = load_dataset(&args.dataset, format).map_err(CliError::io)?;
    let lex = ConceptLexicon::load(&args.concepts).map_err(CliError::config)?;
    let mut out = String::new();
    for ex in &examples {
        let spans: Vec<serde_json::Value> = extract_concepts(&ex.text, &lex)
            .into_iter()
            .map(|s| {
                serde_json::json!({
                    "phrase": s.phrase.iter().map(Token::to_string).collect::<Vec<_>>(),
                    "start": s.start,
                    "end": s.end,
                })
            })
            .collect();
        out.push_str(&serde_json::json!({"id": ex.id, "spans": spans}).to_string());
        out.push('\n');
    }
    write_file(&args.out, &out)
}

/// Loads everything generate/sweep share and validates paths up front.
struct GenerateInputs {
    cfg: RunConfig,
    examples: Vec<cfgen::text::LabeledExample>,
    lex: ConceptLexicon,
    scorer: LexiconScorer,
    lm_pos: NGramLM,
    lm_neg: NGramLM,
    emb: Option<EmbeddingTable>,
    mode: GenMode,
    out_dir: PathBuf,
}

fn load_generate_inputs(args: &GenerateArgs) -> CliResult<GenerateInputs> {
    let mut cfg = args.config.resolve()?;
    if let Some(m) = &args.mode {
        cfg.mode = m.clone();
    }
    if let Some(f) = &args.format {
        cfg.format = f.clone();
    }
    if args.alter_concepts {
        cfg.alter_concepts = true;
    }
    if args.verify_with_scorer {
        cfg.verify_with_scorer = true;
    }
    let mode = GenMode::parse(&cfg.mode)
        .ok_or_else(|| CliError::config(format!("unknown mode {:?}", cfg.mode)))?;
    let format = parse_format(&cfg.format)?;

    let dataset = require_path("dataset", &args.dataset, &cfg.dataset)?;
    let concepts = require_path("concepts", &args.concepts, &cfg.concepts)?;
    let sentiment = require_path("sentiment", &args.sentiment, &cfg.sentiment)?;
    let lm_positive = require_path("lm-positive", &args.lm_positive, &cfg.lm_positive)?;
    let lm_negative = require_path("lm-negative", &args.lm_negative, &cfg.lm_negative)?;
    let out_dir = require_path("out-dir", &args.out_dir, &cfg.out_dir)?;
    for p in [&dataset, &concepts, &sentiment, &lm_positive, &lm_negative] {
        check_readable(p)?;
    }
    cfg.dataset = dataset.display().to_string();
    cfg.concepts = concepts.display().to_string();
    cfg.sentiment = sentiment.display().to_string();
    cfg.lm_positive = lm_positive.display().to_string();
    cfg.lm_negative = lm_negative.display().to_string();
    cfg.out_dir = out_dir.display().to_string();

    let emb = if cfg.alter_concepts {
        let p = require_path("embeddings", &args.embeddings, &cfg.embeddings)?;
        check_readable(&p)?;
        cfg.embeddings = p.display().to_string();
        Some(EmbeddingTable::load(&p).map_err(CliError::config)?)
    } else {
        None
    };

    let examples = load_dataset(&dataset, format).map_err(CliError::io)?;
    let lex = ConceptLexicon::load(&concepts).map_err(CliError::config)?;
    let slex = SentimentLexicon::load(&sentiment).map_err(CliError::config)?;
    let scorer = LexiconScorer::with_thresholds(slex, cfg.theta_neg, cfg.theta_pos);
    let lm_pos = NGramLM::load(&lm_positive).map_err(CliError::config)?;
    let lm_neg = NGramLM::load(&lm_negative).map_err(CliError::config)?;

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", out_dir.display())))?;
    Ok(GenerateInputs {
        cfg,
        examples,
        lex,
        scorer,
        lm_pos,
        lm_neg,
        emb,
        mode,
        out_dir,
    })
}

fn effective_config_map(cfg: &RunConfig) -> BTreeMap<String, String> {
    cfg.pairs()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn cmd_generate(args: &GenerateArgs) -> CliResult {
    let inp = load_generate_inputs(args)?;
    let steers = Steers {
        positive: &inp.lm_pos,
        negative: &inp.lm_neg,
    };
    let mut opts = GenerateOpts::new(inp.mode);
    opts.alter_concepts = inp.emb.as_ref();
    opts.verify_with_scorer = inp.cfg.verify_with_scorer;
    opts.jobs = inp.cfg.jobs;
    let mut run = generate_cfs(
        &inp.examples,
        &steers,
        &inp.lex,
        &inp.scorer,
        &inp.cfg.decoder_config(),
        &opts,
    )
    .map_err(CliError::contract)?;
    run.manifest.effective_config = effective_config_map(&inp.cfg);

    write_file(
        &inp.out_dir.join("cfs.jsonl"),
        &records_to_jsonl(&run.records),
    )?;
    let manifest = serde_json::to_string_pretty(&run.manifest).expect("serializable manifest");
    write_file(&inp.out_dir.join("manifest.json"), &(manifest + "\n"))
}

fn cmd_sweep(args: &GenerateArgs) -> CliResult {
    let inp = load_generate_inputs(args)?;
    let steers = Steers {
        positive: &inp.lm_pos,
        negative: &inp.lm_neg,
    };
    let mut lines = String::new();
    let mut produced = 0usize;
    for ex in &inp.examples {
        let cands = sweep_candidates(
            ex,
            &steers,
            &inp.lex,
            &inp.scorer,
            &inp.cfg.decoder_config(),
            inp.mode,
        )
        .map_err(CliError::contract)?;
        for c in &cands {
            lines.push_str(&serde_json::to_string(c).expect("serializable candidate"));
            lines.push('\n');
            produced += 1;
        }
    }
    write_file(&inp.out_dir.join("candidates.jsonl"), &lines)?;
    let manifest = serde_json::json!({
        "mode": inp.mode.to_string(),
        "effective_config": effective_config_map(&inp.cfg),
        "input_count": inp.examples.len(),
        "candidate_count": produced,
    });
    write_file(
        &inp.out_dir.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest).expect("serializable manifest") + "\n"),
    )
}

fn cmd_select(args: &SelectArgs) -> CliResult {
    check_readable(&args.candidates)?;
    check_readable(&args.dataset)?;
    check_readable(&args.embeddings)?;
    let format = parse_format(&args.format)?;
    let mode = SelectMode::parse(&args.select)
        .ok_or_else(|| CliError::config(format!("unknown select mode {:?}", args.select)))?;
    let content = std::fs::read_to_string(&args.candidates).map_err(CliError::io)?;
    let candidates: Vec<SweepCandidate> = content
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::contract(format!("bad candidates file: {e}")))?;
    let originals = load_dataset(&args.dataset, format).map_err(CliError::io)?;
    let emb = EmbeddingTable::load(&args.embeddings).map_err(CliError::config)?;

    let references: Option<BTreeMap<String, Vec<Token>>> = match &args.reference {
        Some(p) => {
            check_readable(p)?;
            let content = std::fs::read_to_string(p).map_err(CliError::io)?;
            let refs = records_from_jsonl(&content)
                .map_err(|e| CliError::contract(format!("bad reference file: {e}")))?;
            Some(
                refs.into_iter()
                    .map(|r| {
                        let toks = r
                            .generation_tokens
                            .iter()
                            .map(|s| Token::new(s.clone()))
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(CliError::contract)?;
                        Ok((r.source_id, toks))
                    })
                    .collect::<CliResult<_>>()?,
            )
        }
        None => None,
    };

    // Group candidates by source, keep the source-id order of first
    // appearance for deterministic output.
    let mut order: Vec<String> = Vec::new();
    let mut by_source: BTreeMap<String, Vec<SweepCandidate>> = BTreeMap::new();
    for c in candidates {
        let id = c.record.source_id.clone();
        if !by_source.contains_key(&id) {
            order.push(id.clone());
        }
        by_source.entry(id).or_default().push(c);
    }
    let by_id: BTreeMap<&str, &cfgen::text::LabeledExample> =
        originals.iter().map(|e| (e.id.as_str(), e)).collect();

    let mut out = Vec::new();
    for id in &order {
        let cands = &by_source[id];
        let selected = match &references {
            Some(refs) => {
                let reference = refs.get(id).ok_or_else(|| {
                    CliError::contract(format!("no reference generation for source id {id:?}"))
                })?;
                select_variant_against(cands, reference, &emb, mode)
            }
            None => {
                let original = by_id.get(id.as_str()).ok_or_else(|| {
                    CliError::contract(format!("candidate references unknown source id {id:?}"))
                })?;
                select_variant(cands, original, &emb, mode)
            }
        }
        .map_err(CliError::contract)?;
        out.push(selected);
    }
    write_file(&args.out, &records_to_jsonl(&out))
}

fn cmd_augment(args: &AugmentArgs) -> CliResult {
    check_readable(&args.dataset)?;
    check_readable(&args.cfs)?;
    let format = parse_format(&args.format)?;
    let originals = load_dataset(&args.dataset, format).map_err(CliError::io)?;
    let content = std::fs::read_to_string(&args.cfs).map_err(CliError::io)?;
    let cfs = records_from_jsonl(&content)
        .map_err(|e| CliError::contract(format!("bad cfs file: {e}")))?;
    let augmented =
        augment(&originals, &cfs, args.downsample, args.seed).map_err(CliError::contract)?;
    save_dataset(&args.out, &augmented.examples(), format).map_err(CliError::contract)?;
    let manifest_path = args.out.with_extension("manifest.json");
    let manifest =
        serde_json::to_string_pretty(&augmented.manifest).expect("serializable manifest");
    write_file(&manifest_path, &(manifest + "\n"))
}

fn cmd_report(args: &ReportArgs) -> CliResult {
    check_readable(&args.dataset)?;
    check_readable(&args.cfs)?;
    check_readable(&args.lm)?;
    check_readable(&args.embeddings)?;
    let format = parse_format(&args.format)?;
    let unit = LevUnit::parse(&args.lev_unit)
        .ok_or_else(|| CliError::config(format!("unknown lev unit {:?}", args.lev_unit)))?;
    let originals = load_dataset(&args.dataset, format).map_err(CliError::io)?;
    let content = std::fs::read_to_string(&args.cfs).map_err(CliError::io)?;
    let cfs = records_from_jsonl(&content)
        .map_err(|e| CliError::contract(format!("bad cfs file: {e}")))?;
    let lm = NGramLM::load(&args.lm).map_err(CliError::config)?;
    let emb = EmbeddingTable::load(&args.embeddings).map_err(CliError::config)?;
    let table = report(&originals, &cfs, &lm, &emb, unit).map_err(CliError::contract)?;
    write_file(&args.out, &table.to_csv())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::TrainLm(args) => cmd_train_lm(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Select(args) => cmd_select(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
