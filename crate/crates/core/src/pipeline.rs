//! The stages behind the command-line subcommands. Each stage reads its
//! inputs from the run configuration, writes its outputs under `out`, and
//! returns a summary with any warnings.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::Datelike;
use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::attribution::{
    lag_split_with_cap, token_attributions, train_classifier, turn_tokens, AttributionError, AttributionOptions,
    AttributionReport, ClassifierMetrics, LagDirection, Side, TrainOptions, TurnTokens,
};
use crate::config::{ConfigError, RunConfig};
use crate::ingest::corpus::{ingest_caption_dir, CaptionDiagnostics, CaptionIngestOptions};
use crate::ingest::{ingest_tweets, read_turns, write_turns, CommercialFilter, IngestError, SpeakerTurn, SrtOptions, TurnOptions};
use crate::keywords::{topics, KeywordMatcher, KeywordSpec};
use crate::polarity::{build_series, PolarityError, SpSeries};
use crate::report::{self, AdfRow, AttributionRow, ChartLine, GrangerRow, RangeRow, SeriesRow};
use crate::stats::{run_hypotheses, HypothesisReport, StatsError};
use crate::store::{embed_turns, write_store, EmbedDiagnostics, EmbeddingStore, StoreError, StoreMetadata, ToyEmbedder};
use crate::types::{Granularity, SourceId, SourcePair};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("unknown topic `{topic}`; valid topics: {valid}")]
    UnknownTopic { topic: String, valid: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {source}")]
    Store { path: String, source: StoreError },
    #[error("embedding store not found at {0}; run `sempol embed-toy`, pass --toy-embedder, or set embedding.store to a store written by the embedding bridge")]
    MissingStore(String),
    #[error("turn store not found at {0}; run `sempol ingest` first")]
    MissingTurns(String),
    #[error("keyword `{keyword}`: {source}")]
    Polarity { keyword: String, source: PolarityError },
    #[error("keyword `{keyword}`: {source}")]
    Stats { keyword: String, source: StatsError },
    #[error("topic `{topic}`: {source}")]
    Attribution { topic: String, source: AttributionError },
    #[error("writing {path}: {message}")]
    Output { path: String, message: String },
}

impl PipelineError {
    /// 1 for usage and configuration problems, 2 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Usage(_) | PipelineError::UnknownTopic { .. } => 1,
            _ => 2,
        }
    }
}

fn output_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Output { path: path.display().to_string(), message: e.to_string() }
}

fn write_text(path: &Path, body: &str) -> Result<(), PipelineError> {
    report::ensure_parent(path).map_err(|e| output_err(path, e))?;
    fs::write(path, body).map_err(|e| output_err(path, e))
}

fn write_rows<S: Serialize>(path: &Path, header: &[&str], rows: &[S]) -> Result<(), PipelineError> {
    report::write_csv_with_header(path, header, rows).map_err(|e| output_err(path, e))
}

fn keyword_name(cfg: &RunConfig, id: u8) -> String {
    cfg.keywords.iter().find(|k| k.keyword_id == id).map_or_else(|| id.to_string(), |k| k.name.clone())
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestSummary {
    pub turns: usize,
    pub captions: Vec<(String, CaptionDiagnostics)>,
    pub tweet_records_skipped: usize,
    pub tweets_without_keyword: usize,
    pub tweets_unknown_target: usize,
    /// (source, keyword) -> turns.
    pub per_keyword: BTreeMap<(String, String), usize>,
    /// (year, source) -> (turns, words).
    pub volume: BTreeMap<(i32, String), (usize, usize)>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct VolumeRow<'a> {
    year: i32,
    source: &'a str,
    turns: usize,
    words: usize,
}

#[derive(Serialize)]
struct KeywordCountRow<'a> {
    source: &'a str,
    keyword: &'a str,
    turns: usize,
}

pub fn ingest(cfg: &RunConfig) -> Result<IngestSummary, PipelineError> {
    let matcher = KeywordMatcher::new(&cfg.keywords);
    let date_pattern = Regex::new(&cfg.corpus.date_pattern)
        .map_err(|e| PipelineError::Usage(format!("invalid corpus.date_pattern: {e}")))?;
    let opts = CaptionIngestOptions {
        date_pattern,
        filter: CommercialFilter::new(&cfg.corpus.blocklist, cfg.corpus.duplicate_threshold),
        srt: SrtOptions { strict_utf8: cfg.corpus.strict_utf8 },
        turns: TurnOptions { gap_ms: cfg.corpus.gap_ms },
        window: cfg.window,
    };
    let mut summary = IngestSummary::default();
    let mut turns: Vec<SpeakerTurn> = Vec::new();
    for c in &cfg.corpus.captions {
        let (t, diag) = ingest_caption_dir(&c.dir, &c.source, &matcher, &opts)?;
        if diag.files_seen == 0 {
            summary.warnings.push(format!("no .srt files under {}", c.dir.display()));
        }
        if diag.files_unreadable > 0 {
            summary.warnings.push(format!("{}: skipped {} unreadable files", c.source, diag.files_unreadable));
        }
        summary.captions.push((c.source.to_string(), diag));
        turns.extend(t);
    }
    for path in &cfg.corpus.tweets {
        let f = File::open(path).map_err(|_| IngestError::MissingPath(path.display().to_string()))?;
        let t = ingest_tweets(BufReader::new(f), &matcher, cfg.window)?;
        summary.tweet_records_skipped += t.skipped;
        summary.tweets_without_keyword += t.no_keyword;
        summary.tweets_unknown_target += t.unknown_target;
        if t.skipped > 0 {
            summary.warnings.push(format!("{}: skipped {} malformed tweet records", path.display(), t.skipped));
        }
        turns.extend(t.turns);
    }
    if cfg.corpus.captions.is_empty() && cfg.corpus.tweets.is_empty() {
        summary.warnings.push("no caption directories or tweet files configured".into());
    }

    for t in &turns {
        let v = summary.volume.entry((t.date.year(), t.source.to_string())).or_default();
        v.0 += 1;
        v.1 += t.word_count;
        for k in &t.keywords {
            *summary.per_keyword.entry((t.source.to_string(), keyword_name(cfg, *k))).or_default() += 1;
        }
    }
    summary.turns = turns.len();
    if turns.is_empty() {
        summary.warnings.push("no keyword-bearing turns found".into());
    }

    let turns_path = cfg.turns_path();
    report::ensure_parent(&turns_path).map_err(|e| output_err(&turns_path, e))?;
    write_turns(&turns_path, &turns)?;
    let vol: Vec<VolumeRow> =
        summary.volume.iter().map(|((y, s), (t, w))| VolumeRow { year: *y, source: s, turns: *t, words: *w }).collect();
    write_rows(&cfg.out.join("volume.csv"), &["year", "source", "turns", "words"], &vol)?;
    let kw: Vec<KeywordCountRow> =
        summary.per_keyword.iter().map(|((s, k), n)| KeywordCountRow { source: s, keyword: k, turns: *n }).collect();
    write_rows(&cfg.out.join("keyword_counts.csv"), &["source", "keyword", "turns"], &kw)?;
    Ok(summary)
}

// ---------------------------------------------------------------- embed

#[derive(Debug, Clone, Serialize)]
pub struct EmbedSummary {
    pub path: PathBuf,
    pub records: u64,
    pub dimension: usize,
    pub diagnostics: EmbedDiagnostics,
}

pub fn load_turns(cfg: &RunConfig) -> Result<Vec<SpeakerTurn>, PipelineError> {
    let p = cfg.turns_path();
    if !p.is_file() {
        return Err(PipelineError::MissingTurns(p.display().to_string()));
    }
    Ok(read_turns(&p)?)
}

/// Embeds every keyword occurrence in the turn store with the toy embedder.
pub fn embed_toy(cfg: &RunConfig) -> Result<EmbedSummary, PipelineError> {
    let turns = load_turns(cfg)?;
    let path = cfg.store_path();
    let store_err = |source| PipelineError::Store { path: path.display().to_string(), source };
    let matcher = KeywordMatcher::new(&cfg.keywords);
    let mut toy = ToyEmbedder::new(cfg.embedding.dim, cfg.embedding.window).map_err(store_err)?;
    let (records, diag) = embed_turns(&turns, &matcher, &mut toy).map_err(store_err)?;

    let mut sources: BTreeSet<SourceId> = turns.iter().map(|t| t.source.clone()).collect();
    for p in [&cfg.pairs.tv, &cfg.pairs.twitter] {
        sources.insert(p.a.clone());
        sources.insert(p.b.clone());
    }
    let meta = StoreMetadata {
        sources: sources.into_iter().collect(),
        provider: crate::store::EmbeddingProvider::describe(&toy),
        diagnostics: serde_json::to_value(&diag).unwrap_or_default(),
    };
    report::ensure_parent(&path).map_err(|e| output_err(&path, e))?;
    let summary = write_store(&path, cfg.embedding.dim, &meta, records.iter()).map_err(store_err)?;
    Ok(EmbedSummary { path, records: summary.records, dimension: summary.dimension, diagnostics: diag })
}

/// Opens the configured store, building it with the toy embedder first when
/// it is missing and the toy toggle is on.
pub fn open_store(cfg: &RunConfig) -> Result<EmbeddingStore, PipelineError> {
    let path = cfg.store_path();
    if !path.is_file() {
        if !cfg.toy_embedder {
            return Err(PipelineError::MissingStore(path.display().to_string()));
        }
        embed_toy(cfg)?;
    }
    EmbeddingStore::open(&path).map_err(|source| PipelineError::Store { path: path.display().to_string(), source })
}

// ---------------------------------------------------------------- polarize

#[derive(Debug, Clone)]
pub struct SeriesOutput {
    pub keyword: KeywordSpec,
    pub series: SpSeries,
    pub filled: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct PolarizeSummary {
    pub series: Vec<SeriesOutput>,
    pub ranges: Vec<RangeRow>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl PolarizeSummary {
    pub fn find(&self, keyword_id: u8, pair: &SourcePair, granularity: Granularity) -> Option<&SpSeries> {
        self.series
            .iter()
            .map(|s| &s.series)
            .find(|s| s.keyword_id == keyword_id && &s.pair == pair && s.granularity == granularity)
    }
}

/// Series for every keyword, pair and granularity; keywords without data on
/// a side are skipped with a warning.
pub fn compute_series(
    cfg: &RunConfig,
    store: &EmbeddingStore,
    granularities: &[Granularity],
) -> Result<(Vec<SeriesOutput>, Vec<String>), PipelineError> {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for kw in &cfg.keywords {
        for pair in [&cfg.pairs.tv, &cfg.pairs.twitter] {
            for &g in granularities {
                match build_series(store, kw.keyword_id, pair, g, cfg.window) {
                    Ok((series, diag)) => out.push(SeriesOutput { keyword: kw.clone(), series, filled: diag.filled }),
                    Err(e @ (PolarityError::NoData { .. } | PolarityError::NoOverlap { .. })) => {
                        if g == granularities[0] {
                            warnings.push(format!("skipping keyword `{}` for {pair}: {e}", kw.name));
                        }
                    }
                    Err(source) => return Err(PipelineError::Polarity { keyword: kw.name.clone(), source }),
                }
            }
        }
    }
    Ok((out, warnings))
}

fn granularity_name(g: Granularity) -> &'static str {
    match g {
        Granularity::Yearly => "yearly",
        Granularity::Monthly => "monthly",
    }
}

pub fn polarize(cfg: &RunConfig) -> Result<PolarizeSummary, PipelineError> {
    let store = open_store(cfg)?;
    let (series, mut warnings) = compute_series(cfg, &store, &cfg.polarize.granularities)?;
    for s in &series {
        if !s.filled.is_empty() {
            warnings.push(format!(
                "keyword `{}` {} {}: {} buckets interpolated",
                s.keyword.name,
                s.series.pair,
                granularity_name(s.series.granularity),
                s.filled.len()
            ));
        }
    }
    let mut summary = PolarizeSummary { warnings, ..Default::default() };

    let header = ["keyword", "pair", "granularity", "bucket", "value", "n1", "n2", "filled"];
    for kw in &cfg.keywords {
        for &g in &cfg.polarize.granularities {
            let rows: Vec<SeriesRow> = series
                .iter()
                .filter(|s| s.keyword.keyword_id == kw.keyword_id && s.series.granularity == g)
                .flat_map(|s| {
                    s.series.points.iter().map(move |p| SeriesRow {
                        keyword: kw.name.clone(),
                        pair: s.series.pair.to_string(),
                        granularity: granularity_name(g).to_string(),
                        bucket: p.bucket.to_string(),
                        value: p.value,
                        n1: p.n1,
                        n2: p.n2,
                        filled: p.filled,
                    })
                })
                .collect();
            if rows.is_empty() {
                continue;
            }
            let path = cfg.out.join("series").join(format!("{}_{}.csv", report::slug(&kw.name), granularity_name(g)));
            write_rows(&path, &header, &rows)?;
            summary.files.push(path);
        }

        let chart_g = if cfg.polarize.granularities.contains(&Granularity::Yearly) {
            Granularity::Yearly
        } else {
            Granularity::Monthly
        };
        let lines: Vec<&SeriesOutput> =
            series.iter().filter(|s| s.keyword.keyword_id == kw.keyword_id && s.series.granularity == chart_g).collect();
        if let Some(first) = lines.first() {
            let labels: Vec<String> = first.series.points.iter().map(|p| p.bucket.to_string()).collect();
            let chart_lines: Vec<ChartLine> =
                lines.iter().map(|s| ChartLine { label: s.series.pair.to_string(), values: s.series.values() }).collect();
            let svg = report::svg_line_chart(&format!("Semantic polarization: {}", kw.name), &labels, &chart_lines);
            let path = cfg.out.join("charts").join(format!("{}.svg", report::slug(&kw.name)));
            write_text(&path, &svg)?;
            summary.files.push(path);
        }
    }

    for s in series.iter().filter(|s| s.series.granularity == Granularity::Yearly) {
        if let (Some(lo), Some(hi)) = (s.series.argmin(), s.series.argmax()) {
            summary.ranges.push(RangeRow {
                keyword: s.keyword.name.clone(),
                pair: s.series.pair.to_string(),
                min: lo.value,
                argmin: lo.bucket.to_string(),
                max: hi.value,
                argmax: hi.bucket.to_string(),
            });
        }
    }
    let path = cfg.out.join("sp_range.csv");
    write_rows(&path, &["keyword", "pair", "min", "argmin", "max", "argmax"], &summary.ranges)?;
    summary.files.push(path);
    let md_rows: Vec<Vec<String>> = summary
        .ranges
        .iter()
        .map(|r| vec![r.keyword.clone(), r.pair.clone(), format!("{:.4}", r.min), r.argmin.clone(), format!("{:.4}", r.max), r.argmax.clone()])
        .collect();
    let path = cfg.out.join("sp_range.md");
    write_text(&path, &report::markdown_table(&["keyword", "pair", "min", "argmin", "max", "argmax"], &md_rows))?;
    summary.files.push(path);
    summary.series = series;
    Ok(summary)
}

// ---------------------------------------------------------------- granger

#[derive(Debug, Clone, Default)]
pub struct GrangerSummary {
    pub reports: Vec<(KeywordSpec, HypothesisReport)>,
    pub warnings: Vec<String>,
}

pub fn granger(cfg: &RunConfig) -> Result<GrangerSummary, PipelineError> {
    let store = open_store(cfg)?;
    let (series, warnings) = compute_series(cfg, &store, &[Granularity::Monthly])?;
    let mut summary = GrangerSummary { warnings, ..Default::default() };
    let lags = cfg.granger.min_lag..=cfg.granger.max_lag;
    for kw in &cfg.keywords {
        let pick = |pair: &SourcePair| {
            series.iter().find(|s| s.keyword.keyword_id == kw.keyword_id && &s.series.pair == pair).map(|s| &s.series)
        };
        let (Some(tv), Some(tw)) = (pick(&cfg.pairs.tv), pick(&cfg.pairs.twitter)) else {
            continue;
        };
        let rep = run_hypotheses(tv, tw, lags.clone())
            .map_err(|source| PipelineError::Stats { keyword: kw.name.clone(), source })?;
        summary.reports.push((kw.clone(), rep));
    }
    if summary.reports.is_empty() {
        summary.warnings.push("no keyword has monthly series for both pairs; nothing to test".into());
    }

    let mut rows = Vec::new();
    let mut adf = Vec::new();
    let mut md = Vec::new();
    for (kw, rep) in &summary.reports {
        for r in &rep.rows {
            rows.push(GrangerRow {
                keyword: kw.name.clone(),
                direction: r.result.direction.clone(),
                lag: r.result.lag,
                f_value: r.result.f_value,
                p_value: r.result.p_value,
                significant: r.significant,
            });
        }
        for check in [&rep.tv, &rep.twitter] {
            let res = check.final_result();
            adf.push(AdfRow {
                keyword: kw.name.clone(),
                series: check.label.clone(),
                differenced: check.differenced.is_some(),
                statistic: res.statistic,
                crit_1pct: res.crit_1pct,
                crit_5pct: res.crit_5pct,
                lags_used: res.lags_used,
                n: res.n,
                conclusion: res.conclusion.to_string(),
            });
        }
        let lag_of = |l: Option<usize>| l.map_or_else(|| "-".to_string(), |l| l.to_string());
        let best = |h: &str, lag: Option<usize>| {
            lag.and_then(|l| rep.rows_for(h).find(|r| r.result.lag == l))
                .map_or_else(|| "-".to_string(), |r| format!("F = {:.3}, p = {:.4}", r.result.f_value, r.result.p_value))
        };
        md.push(vec![
            kw.name.clone(),
            lag_of(rep.min_significant_h1),
            best("H1", rep.min_significant_h1),
            lag_of(rep.min_significant_h2),
            best("H2", rep.min_significant_h2),
        ]);
    }
    write_rows(&cfg.out.join("granger.csv"), &["keyword", "direction", "lag", "f_value", "p_value", "significant"], &rows)?;
    write_rows(
        &cfg.out.join("adf.csv"),
        &["keyword", "series", "differenced", "statistic", "crit_1pct", "crit_5pct", "lags_used", "n", "conclusion"],
        &adf,
    )?;
    let mut body = String::from("# Granger causality\n\nH1: TV polarization leads Twitter polarization. H2: Twitter leads TV.\n\n");
    body.push_str(&report::markdown_table(&["keyword", "H1 min lag", "H1 test", "H2 min lag", "H2 test"], &md));
    if let Some((_, rep)) = summary.reports.first() {
        body.push_str(&format!("\nNote: {}.\n", rep.note));
    }
    write_text(&cfg.out.join("granger.md"), &body)?;
    Ok(summary)
}

// ---------------------------------------------------------------- attribute

#[derive(Debug, Clone, Serialize)]
pub struct AttributionOutput {
    /// `tv` or `twitter`.
    pub corpus: String,
    pub class_a: String,
    pub class_b: String,
    pub months: Option<(u32, u32)>,
    pub report: AttributionReport,
    pub metrics: ClassifierMetrics,
}

#[derive(Debug, Clone, Default)]
pub struct AttributeSummary {
    pub outputs: Vec<AttributionOutput>,
    pub files: Vec<PathBuf>,
}

pub fn check_topic(cfg: &RunConfig, topic: &str) -> Result<Vec<KeywordSpec>, PipelineError> {
    let kws: Vec<KeywordSpec> = cfg.keywords.iter().filter(|k| k.topic == topic).cloned().collect();
    if kws.is_empty() {
        return Err(PipelineError::UnknownTopic { topic: topic.to_string(), valid: topics(&cfg.keywords).join(", ") });
    }
    Ok(kws)
}

fn class_tokens(turns: &[&SpeakerTurn], embedder: &mut ToyEmbedder) -> Vec<TurnTokens> {
    turns.iter().filter_map(|t| turn_tokens(t, embedder)).collect()
}

fn attribute_corpus(
    cfg: &RunConfig,
    topic: &str,
    corpus: &str,
    pair: &SourcePair,
    turns: &[SpeakerTurn],
    excluded: &BTreeSet<String>,
    months: Option<(u32, u32)>,
) -> Result<AttributionOutput, PipelineError> {
    let wrap = |source| PipelineError::Attribution { topic: topic.to_string(), source };
    let mut embedder = ToyEmbedder::new(cfg.attribution.dim, 0)
        .map_err(|e| PipelineError::Usage(format!("attribution.dim: {e}")))?;
    let a: Vec<&SpeakerTurn> = turns.iter().filter(|t| t.source == pair.a).collect();
    let b: Vec<&SpeakerTurn> = turns.iter().filter(|t| t.source == pair.b).collect();
    let (ta, tb) = (class_tokens(&a, &mut embedder), class_tokens(&b, &mut embedder));
    let opts = TrainOptions {
        hidden: cfg.attribution.hidden,
        learning_rate: cfg.attribution.learning_rate,
        max_epochs: cfg.attribution.max_epochs,
        patience: cfg.attribution.patience,
        seed: cfg.seed,
        ..Default::default()
    };
    let trained = train_classifier(&ta, &tb, &opts).map_err(wrap)?;
    let aopts = AttributionOptions { k: cfg.attribution.k, percentile: cfg.attribution.percentile, steps: cfg.attribution.steps };
    let report = token_attributions(&trained.model, &ta, &tb, topic, excluded, &aopts).map_err(wrap)?;
    Ok(AttributionOutput {
        corpus: corpus.to_string(),
        class_a: pair.a.to_string(),
        class_b: pair.b.to_string(),
        months,
        report,
        metrics: trained.metrics,
    })
}

fn attribution_rows(o: &AttributionOutput, lag: Option<u32>) -> Vec<AttributionRow> {
    let row = |t: &crate::attribution::TokenScore, class: &str| AttributionRow {
        token: t.token.clone(),
        attribution: t.score,
        class: class.to_string(),
        topic: o.report.topic.clone(),
        lag,
    };
    o.report.tokens_a.iter().map(|t| row(t, &o.class_a)).chain(o.report.tokens_b.iter().map(|t| row(t, &o.class_b))).collect()
}

fn attribution_markdown(outputs: &[AttributionOutput], lag: Option<u32>, direction: Option<LagDirection>) -> String {
    let mut s = String::new();
    let topic = outputs.first().map_or("", |o| o.report.topic.as_str());
    s.push_str(&format!("# Token attribution: {topic}\n\n"));
    if let (Some(l), Some(d)) = (lag, direction) {
        let lead = match d {
            LagDirection::TvLeads => "TV leads",
            LagDirection::TwitterLeads => "Twitter leads",
        };
        s.push_str(&format!("Lag {l} months ({lead}).\n\n"));
    }
    for o in outputs {
        s.push_str(&format!("## {} corpus: {} vs {}\n\n", o.corpus, o.class_a, o.class_b));
        if let Some((lo, hi)) = o.months {
            s.push_str(&format!("Months {lo}-{hi} of each year.\n\n"));
        }
        s.push_str(&format!(
            "Classifier test accuracy {:.3}, precision {:.3}, recall {:.3}, F1 {:.3} ({} train / {} validation / {} test turns).\n\n",
            o.metrics.accuracy, o.metrics.precision, o.metrics.recall, o.metrics.f1, o.metrics.n_train, o.metrics.n_validation, o.metrics.n_test
        ));
        let k = o.report.tokens_a.len().max(o.report.tokens_b.len());
        let cell = |l: &[crate::attribution::TokenScore], i: usize| {
            l.get(i).map_or_else(|| ("".to_string(), "".to_string()), |t| (t.token.clone(), format!("{:.4}", t.score)))
        };
        let rows: Vec<Vec<String>> = (0..k)
            .map(|i| {
                let (ta, sa) = cell(&o.report.tokens_a, i);
                let (tb, sb) = cell(&o.report.tokens_b, i);
                vec![(i + 1).to_string(), ta, sa, tb, sb]
            })
            .collect();
        let ha = format!("{} token", o.class_a);
        let hb = format!("{} token", o.class_b);
        s.push_str(&report::markdown_table(&["rank", &ha, "score", &hb, "score"], &rows));
        s.push_str(&format!(
            "\nTokens occurring more than {:.2} times (percentile {}) only; topical keyword excluded; scores are {}.\n",
            o.report.frequency_threshold, o.report.frequency_floor, o.report.aggregation
        ));
        for d in &o.report.diagnostics {
            s.push_str(&format!("\nNote: {d}\n"));
        }
        s.push('\n');
    }
    s
}

/// Study-2-style report on the TV corpus, or with `lag` the lag-split TV and
/// Twitter reports.
pub fn attribute(cfg: &RunConfig, topic: &str, lag: Option<(u32, LagDirection)>) -> Result<AttributeSummary, PipelineError> {
    let kws = check_topic(cfg, topic)?;
    let ids: BTreeSet<u8> = kws.iter().map(|k| k.keyword_id).collect();
    let excluded: BTreeSet<String> = kws.iter().flat_map(|k| k.surface_tokens()).collect();
    let turns = load_turns(cfg)?;
    let on_topic = |pair: &SourcePair| -> Vec<SpeakerTurn> {
        turns
            .iter()
            .filter(|t| (t.source == pair.a || t.source == pair.b) && t.keywords.iter().any(|k| ids.contains(k)))
            .cloned()
            .collect()
    };
    let tv = on_topic(&cfg.pairs.tv);
    let mut summary = AttributeSummary::default();
    let slug = report::slug(topic);
    let wrap = |source| PipelineError::Attribution { topic: topic.to_string(), source };

    let (stem, lag_value, direction) = match lag {
        None => {
            let tv: Vec<SpeakerTurn> = if cfg.attribution.years.is_empty() {
                tv
            } else {
                tv.into_iter().filter(|t| cfg.attribution.years.contains(&(t.year_month().year))).collect()
            };
            summary.outputs.push(attribute_corpus(cfg, topic, "tv", &cfg.pairs.tv, &tv, &excluded, None)?);
            (slug, None, None)
        }
        Some((l, dir)) => {
            let tw = on_topic(&cfg.pairs.twitter);
            for (side, corpus, pair, set) in [(Side::A, "tv", &cfg.pairs.tv, &tv), (Side::B, "twitter", &cfg.pairs.twitter, &tw)] {
                let split = lag_split_with_cap(set, l, side, dir, cfg.attribution.max_lag).map_err(wrap)?;
                let months = Some((*split.months.start(), *split.months.end()));
                summary.outputs.push(attribute_corpus(cfg, topic, corpus, pair, &split.kept, &excluded, months)?);
            }
            let d = match dir {
                LagDirection::TvLeads => "tv-leads",
                LagDirection::TwitterLeads => "twitter-leads",
            };
            (format!("{slug}_lag{l}_{d}"), Some(l), Some(dir))
        }
    };

    let dir = cfg.out.join("attribution");
    let rows: Vec<AttributionRow> = summary.outputs.iter().flat_map(|o| attribution_rows(o, lag_value)).collect();
    let csv_path = dir.join(format!("{stem}.csv"));
    write_rows(&csv_path, &["token", "attribution", "class", "topic", "lag"], &rows)?;
    let md_path = dir.join(format!("{stem}.md"));
    write_text(&md_path, &attribution_markdown(&summary.outputs, lag_value, direction))?;
    let json_path = dir.join(format!("{stem}.json"));
    let json = serde_json::to_string_pretty(&summary.outputs).map_err(|e| output_err(&json_path, e))?;
    write_text(&json_path, &(json + "\n"))?;
    summary.files.extend([csv_path, md_path, json_path]);
    Ok(summary)
}

// ---------------------------------------------------------------- all

#[derive(Debug, Default)]
pub struct RunSummary {
    pub ingest: IngestSummary,
    pub polarize: PolarizeSummary,
    pub granger: GrangerSummary,
    pub attribution: Vec<AttributeSummary>,
    pub warnings: Vec<String>,
}

/// Every stage in order; attribution runs per topic with turns and then
/// lag-split for each minimal significant lag within the configured cap.
pub fn report_all(cfg: &RunConfig) -> Result<RunSummary, PipelineError> {
    let mut run = RunSummary { ingest: ingest(cfg)?, ..Default::default() };
    if cfg.toy_embedder {
        embed_toy(cfg)?;
    }
    run.polarize = polarize(cfg)?;
    run.granger = granger(cfg)?;

    let turns = load_turns(cfg)?;
    let present: BTreeSet<u8> = turns.iter().flat_map(|t| t.keywords.iter().copied()).collect();
    for topic in topics(&cfg.keywords) {
        if !cfg.keywords.iter().any(|k| k.topic == topic && present.contains(&k.keyword_id)) {
            continue;
        }
        match attribute(cfg, &topic, None) {
            Ok(s) => run.attribution.push(s),
            Err(PipelineError::Attribution { source, .. }) => {
                run.warnings.push(format!("attribution for `{topic}` skipped: {source}"));
            }
            Err(e) => return Err(e),
        }
    }
    let mut done = BTreeSet::new();
    for (kw, rep) in &run.granger.reports {
        for (lag, dir) in [(rep.min_significant_h1, LagDirection::TvLeads), (rep.min_significant_h2, LagDirection::TwitterLeads)] {
            let Some(l) = lag.map(|l| l as u32) else { continue };
            if l > cfg.attribution.max_lag || !done.insert((kw.topic.clone(), l, dir == LagDirection::TvLeads)) {
                continue;
            }
            match attribute(cfg, &kw.topic, Some((l, dir))) {
                Ok(s) => run.attribution.push(s),
                Err(PipelineError::Attribution { source, .. }) => {
                    run.warnings.push(format!("lag-{l} attribution for `{}` skipped: {source}", kw.topic));
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(run)
}

/// Writes the effective configuration and `out/manifest.json`.
pub fn finish_run(cfg: &RunConfig) -> Result<PathBuf, PipelineError> {
    fs::create_dir_all(&cfg.out).map_err(|e| output_err(&cfg.out, e))?;
    write_text(&cfg.out.join("run_config.toml"), &cfg.to_toml())?;
    report::write_manifest(&cfg.out).map_err(|e| output_err(&cfg.out, e))
}
