//! Run configuration: one TOML document, with `SEMPOL_*` environment
//! overrides (`__` separates nested keys, e.g. `SEMPOL_EMBEDDING__DIM=64`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keywords::{default_keywords, KeywordSpec};
use crate::types::{Granularity, SourceId, SourcePair, YearWindow};

pub const ENV_PREFIX: &str = "SEMPOL_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid value for {key}: {message}")]
    Override { key: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionSource {
    pub source: SourceId,
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub captions: Vec<CaptionSource>,
    pub tweets: Vec<PathBuf>,
    /// Regex with year, month, day capture groups applied to file names.
    pub date_pattern: String,
    pub blocklist: Vec<String>,
    /// Lines repeated more often than this within a day's files are dropped.
    pub duplicate_threshold: Option<usize>,
    pub gap_ms: u64,
    pub strict_utf8: bool,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            captions: Vec::new(),
            tweets: Vec::new(),
            date_pattern: crate::ingest::corpus::DEFAULT_DATE_PATTERN.to_string(),
            blocklist: Vec::new(),
            duplicate_threshold: Some(10),
            gap_ms: crate::ingest::turns::DEFAULT_GAP_MS,
            strict_utf8: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairConfig {
    pub tv: SourcePair,
    pub twitter: SourcePair,
}

impl Default for PairConfig {
    fn default() -> Self {
        let id = |s: &str| SourceId::new(s).expect("static source id");
        PairConfig {
            tv: SourcePair::new(id("cnn"), id("foxnews")),
            twitter: SourcePair::new(id(crate::ingest::tweets::TWITTER_CNN), id(crate::ingest::tweets::TWITTER_FOX)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    /// Defaults to `<out>/embeddings.dlns`.
    pub store: Option<PathBuf>,
    pub dim: usize,
    pub window: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig { store: None, dim: 768, window: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolarizeConfig {
    pub granularities: Vec<Granularity>,
}

impl Default for PolarizeConfig {
    fn default() -> Self {
        PolarizeConfig { granularities: vec![Granularity::Yearly, Granularity::Monthly] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrangerConfig {
    pub min_lag: usize,
    pub max_lag: usize,
}

impl Default for GrangerConfig {
    fn default() -> Self {
        GrangerConfig { min_lag: 1, max_lag: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttributionConfig {
    /// Token vector dimension for the classifier.
    pub dim: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub steps: usize,
    pub k: usize,
    pub percentile: f64,
    /// Upper bound for lag-split lags.
    pub max_lag: u32,
    /// Restrict the unlagged report to these years; empty means the window.
    pub years: Vec<i32>,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        AttributionConfig {
            dim: 64,
            hidden: 16,
            learning_rate: 0.5,
            max_epochs: 2000,
            patience: 50,
            steps: 50,
            k: 10,
            percentile: 95.0,
            max_lag: crate::attribution::MAX_SPLIT_LAG,
            years: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub toy_embedder: bool,
    pub window: YearWindow,
    pub corpus: CorpusConfig,
    pub keywords: Vec<KeywordSpec>,
    pub pairs: PairConfig,
    pub embedding: EmbeddingConfig,
    pub polarize: PolarizeConfig,
    pub granger: GrangerConfig,
    pub attribution: AttributionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            toy_embedder: false,
            window: YearWindow::default(),
            corpus: CorpusConfig::default(),
            keywords: default_keywords(),
            pairs: PairConfig::default(),
            embedding: EmbeddingConfig::default(),
            polarize: PolarizeConfig::default(),
            granger: GrangerConfig::default(),
            attribution: AttributionConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Reads `path` (or defaults when `None`), then applies overrides from
    /// `vars` whose names start with [`ENV_PREFIX`]. Relative paths in the
    /// file resolve against its directory.
    pub fn load<I>(path: Option<&Path>, vars: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let (mut value, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|source| ConfigError::Read { path: p.display().to_string(), source })?;
                let v: toml::Value = toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
                (v, p.parent().map(Path::to_path_buf))
            }
            None => (toml::Value::try_from(RunConfig::default()).expect("defaults serialize"), None),
        };
        let mut overrides: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        overrides.sort();
        for (key, raw) in overrides {
            apply_override(&mut value, &key, &raw)?;
        }
        let mut cfg: RunConfig = value.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        if let Some(base) = base.filter(|b| !b.as_os_str().is_empty()) {
            cfg.resolve_paths(&base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        self.corpus.captions.iter_mut().for_each(|c| fix(&mut c.dir));
        self.corpus.tweets.iter_mut().for_each(fix);
        if let Some(s) = self.embedding.store.as_mut() {
            fix(s);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.window.start > self.window.end {
            return Err(ConfigError::Invalid(format!("window {}..{} is empty", self.window.start, self.window.end)));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.corpus.captions {
            if !seen.insert(c.source.as_str()) {
                return Err(ConfigError::Invalid(format!("caption source `{}` listed twice", c.source)));
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for k in &self.keywords {
            if !ids.insert(k.keyword_id) {
                return Err(ConfigError::Invalid(format!("keyword id {} listed twice", k.keyword_id)));
            }
            if k.surface_forms.is_empty() {
                return Err(ConfigError::Invalid(format!("keyword `{}` has no surface forms", k.name)));
            }
        }
        if self.granger.min_lag == 0 || self.granger.min_lag > self.granger.max_lag {
            return Err(ConfigError::Invalid("granger lags must satisfy 1 <= min_lag <= max_lag".into()));
        }
        if self.embedding.dim < 2 || self.attribution.dim < 2 {
            return Err(ConfigError::Invalid("embedding dimensions must be at least 2".into()));
        }
        Ok(())
    }

    pub fn store_path(&self) -> PathBuf {
        self.embedding.store.clone().unwrap_or_else(|| self.out.join("embeddings.dlns"))
    }

    pub fn turns_path(&self) -> PathBuf {
        self.out.join("turns.jsonl")
    }
}

/// Sets `SEMPOL_A__B=v` as `a.b = v`. The value is parsed as a TOML literal
/// when possible (numbers, booleans, arrays) and kept as a string otherwise.
fn apply_override(root: &mut toml::Value, key: &str, raw: &str) -> Result<(), ConfigError> {
    let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(|s| s.to_lowercase()).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override { key: key.into(), message: "empty key segment".into() });
    }
    let parsed = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = root;
    for seg in &path[..path.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| ConfigError::Override { key: key.into(), message: format!("`{seg}` is not a table") })?;
        node = table.entry(seg.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    node.as_table_mut()
        .ok_or_else(|| ConfigError::Override { key: key.into(), message: "parent is not a table".into() })?
        .insert(path[path.len() - 1].clone(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.keywords.len(), 9);
        assert_eq!(back.pairs.twitter.to_string(), "twitter@cnn|twitter@foxnews");
    }

    #[test]
    fn env_overrides() {
        let vars = vec![
            ("SEMPOL_EMBEDDING__DIM".to_string(), "32".to_string()),
            ("SEMPOL_TOY_EMBEDDER".to_string(), "true".to_string()),
            ("SEMPOL_OUT".to_string(), "/tmp/run".to_string()),
            ("OTHER".to_string(), "x".to_string()),
        ];
        let cfg = RunConfig::load(None, vars).unwrap();
        assert_eq!(cfg.embedding.dim, 32);
        assert!(cfg.toy_embedder);
        assert_eq!(cfg.out, PathBuf::from("/tmp/run"));
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = RunConfig::from_toml("seed = 5\n[granger]\nmax_lag = 6\n").unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.granger.max_lag, 6);
        assert_eq!(cfg.granger.min_lag, 1);
        assert_eq!(cfg.embedding.dim, 768);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("[granger]\nmin_lag = 0\n").is_err());
        assert!(RunConfig::from_toml("seed = \"x\"\n").is_err());
        assert!(RunConfig::from_toml("[window]\nstart = 2020\nend = 2010\n").is_err());
    }
}
