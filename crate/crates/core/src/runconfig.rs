//! Run configuration: decoder settings, file paths and mode flags, with a
//! flat `key=value` file form. Precedence is command-line flags over config
//! file over defaults; the effective configuration round-trips losslessly
//! through its file form.

use crate::decoder::DecoderConfig;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: expected key=value, got {got:?}")]
    BadLine { line: usize, got: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("bad value for {key}: {msg}")]
    BadValue { key: String, msg: String },
}

/// Every setting a command can take, flat and stringly-typed at the file
/// boundary. Path fields are empty strings when unset; each command
/// validates the paths it actually needs before doing any work.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    // Decoder settings (defaults match `DecoderConfig::default`).
    pub beam_size: usize,
    pub length_penalty_alpha: f64,
    pub no_repeat_ngram: usize,
    pub beta: f64,
    pub sat_tolerance: usize,
    pub lambda: f64,
    pub max_len: usize,
    pub seed: u64,
    // Sentiment thresholds.
    pub theta_neg: f64,
    pub theta_pos: f64,
    // File paths.
    pub dataset: String,
    pub concepts: String,
    pub sentiment: String,
    pub embeddings: String,
    pub lm_positive: String,
    pub lm_negative: String,
    pub out_dir: String,
    // Mode flags.
    pub mode: String,
    pub format: String,
    pub lev_unit: String,
    pub select: String,
    pub alter_concepts: bool,
    pub verify_with_scorer: bool,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = DecoderConfig::default();
        RunConfig {
            beam_size: d.beam_size,
            length_penalty_alpha: d.length_penalty_alpha,
            no_repeat_ngram: d.no_repeat_ngram,
            beta: d.beta,
            sat_tolerance: d.sat_tolerance,
            lambda: d.lambda,
            max_len: d.max_len,
            seed: d.seed,
            theta_neg: -0.1,
            theta_pos: 0.1,
            dataset: String::new(),
            concepts: String::new(),
            sentiment: String::new(),
            embeddings: String::new(),
            lm_positive: String::new(),
            lm_negative: String::new(),
            out_dir: String::new(),
            mode: "np".to_string(),
            format: "tsv".to_string(),
            lev_unit: "token".to_string(),
            select: "loose".to_string(),
            alter_concepts: false,
            verify_with_scorer: false,
            jobs: 1,
        }
    }
}

impl RunConfig {
    pub fn decoder_config(&self) -> DecoderConfig {
        DecoderConfig {
            beam_size: self.beam_size,
            length_penalty_alpha: self.length_penalty_alpha,
            no_repeat_ngram: self.no_repeat_ngram,
            beta: self.beta,
            sat_tolerance: self.sat_tolerance,
            lambda: self.lambda,
            max_len: self.max_len,
            seed: self.seed,
        }
    }

    /// All settings in file order, used by both `save` and manifest echo.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("beam_size", self.beam_size.to_string()),
            (
                "length_penalty_alpha",
                self.length_penalty_alpha.to_string(),
            ),
            ("no_repeat_ngram", self.no_repeat_ngram.to_string()),
            ("beta", self.beta.to_string()),
            ("sat_tolerance", self.sat_tolerance.to_string()),
            ("lambda", self.lambda.to_string()),
            ("max_len", self.max_len.to_string()),
            ("seed", self.seed.to_string()),
            ("theta_neg", self.theta_neg.to_string()),
            ("theta_pos", self.theta_pos.to_string()),
            ("dataset", self.dataset.clone()),
            ("concepts", self.concepts.clone()),
            ("sentiment", self.sentiment.clone()),
            ("embeddings", self.embeddings.clone()),
            ("lm_positive", self.lm_positive.clone()),
            ("lm_negative", self.lm_negative.clone()),
            ("out_dir", self.out_dir.clone()),
            ("mode", self.mode.clone()),
            ("format", self.format.clone()),
            ("lev_unit", self.lev_unit.clone()),
            ("select", self.select.clone()),
            ("alter_concepts", self.alter_concepts.to_string()),
            ("verify_with_scorer", self.verify_with_scorer.to_string()),
            ("jobs", self.jobs.to_string()),
        ]
    }

    /// Applies a single `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e: T::Err| ConfigError::BadValue {
                key: key.to_string(),
                msg: e.to_string(),
            })
        }
        match key {
            "beam_size" => self.beam_size = parse(key, value)?,
            "length_penalty_alpha" => self.length_penalty_alpha = parse(key, value)?,
            "no_repeat_ngram" => self.no_repeat_ngram = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "sat_tolerance" => self.sat_tolerance = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "max_len" => self.max_len = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "theta_neg" => self.theta_neg = parse(key, value)?,
            "theta_pos" => self.theta_pos = parse(key, value)?,
            "dataset" => self.dataset = value.to_string(),
            "concepts" => self.concepts = value.to_string(),
            "sentiment" => self.sentiment = value.to_string(),
            "embeddings" => self.embeddings = value.to_string(),
            "lm_positive" => self.lm_positive = value.to_string(),
            "lm_negative" => self.lm_negative = value.to_string(),
            "out_dir" => self.out_dir = value.to_string(),
            "mode" => self.mode = value.to_string(),
            "format" => self.format = value.to_string(),
            "lev_unit" => self.lev_unit = value.to_string(),
            "select" => self.select = value.to_string(),
            "alter_concepts" => self.alter_concepts = parse(key, value)?,
            "verify_with_scorer" => self.verify_with_scorer = parse(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Loads a flat `key=value` file over the defaults. Blank lines and
    /// `#` comment lines are ignored.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let content = std::fs::read_to_string(path)?;
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::BadLine {
                line: i + 1,
                got: line.to_string(),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let mut out = String::new();
        for (k, v) in self.pairs() {
            out.push_str(&format!("{k}={v}\n"));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_match_decoder_defaults() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.decoder_config(), DecoderConfig::default());
        assert_eq!(cfg.beam_size, 20);
        assert_eq!(cfg.length_penalty_alpha, 0.3);
        assert_eq!(cfg.no_repeat_ngram, 2);
        assert_eq!(cfg.beta, 1.25);
        assert_eq!(cfg.sat_tolerance, 2);
    }

    #[test]
    fn unknown_key_and_bad_value_error() {
        let mut cfg = RunConfig::default();
        assert!(matches!(
            cfg.set("bogus", "1"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            cfg.set("beam_size", "abc"),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn file_overrides_defaults_and_comments_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(&p, "# comment\nbeam_size=7\n\nmode=1g\n").unwrap();
        let cfg = RunConfig::load(&p).unwrap();
        assert_eq!(cfg.beam_size, 7);
        assert_eq!(cfg.mode, "1g");
        assert_eq!(cfg.max_len, 64); // untouched default
    }

    proptest! {
        #[test]
        fn save_load_round_trip(
            beam in 1usize..100,
            alpha in 0.0f64..2.0,
            seed in 0u64..1000,
            jobs in 1usize..8,
            mode in "(np|1g|no_constraints)",
            path in "[a-z/]{0,12}")
        {
            let cfg = RunConfig {
                beam_size: beam,
                length_penalty_alpha: alpha,
                seed,
                jobs,
                mode,
                dataset: path,
                alter_concepts: beam % 2 == 0,
                ..RunConfig::default()
            };
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("run.cfg");
            cfg.save(&p).unwrap();
            prop_assert_eq!(RunConfig::load(&p).unwrap(), cfg);
        }
    }
}
