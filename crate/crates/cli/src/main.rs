use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sempol_core::attribution::LagDirection;
use sempol_core::config::RunConfig;
use sempol_core::pipeline::{self, AttributeSummary, PipelineError};

#[derive(Debug, Parser)]
#[command(name = "sempol", version, about = "Semantic polarization between news outlets and their audiences")]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Build the embedding store with the deterministic toy embedder when it is missing.
    #[arg(long, global = true)]
    toy_embedder: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Direction {
    TvLeads,
    TwitterLeads,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse captions and tweets into the turn store.
    Ingest,
    /// Embed keyword occurrences with the toy embedder.
    EmbedToy,
    /// Yearly and monthly SP series, charts and the range table.
    Polarize,
    /// ADF screening and the bidirectional Granger grid.
    Granger,
    /// Train the topic classifier and rank tokens by integrated gradients.
    Attribute {
        #[arg(long)]
        topic: String,
        /// Lag-split the corpora before training.
        #[arg(long)]
        lag: Option<u32>,
        #[arg(long, value_enum, default_value = "tv-leads", requires = "lag")]
        direction: Direction,
    },
    /// Every stage in order.
    ReportAll,
}

fn load_config(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), std::env::vars())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    cfg.toy_embedder |= cli.toy_embedder;
    Ok(cfg)
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn print_attribution(s: &AttributeSummary) {
    for o in &s.outputs {
        let months = o.months.map_or(String::new(), |(a, b)| format!(" months {a}..={b}"));
        println!(
            "{} [{}]{months}: accuracy {:.3}, f1 {:.3} ({} vs {})",
            o.report.topic, o.corpus, o.metrics.accuracy, o.metrics.f1, o.class_a, o.class_b
        );
        let list = |v: &[sempol_core::attribution::TokenScore]| {
            v.iter().map(|t| format!("{} {:+.4}", t.token, t.score)).collect::<Vec<_>>().join(", ")
        };
        println!("  {}: {}", o.class_a, list(&o.report.tokens_a));
        println!("  {}: {}", o.class_b, list(&o.report.tokens_b));
        warn(&o.report.diagnostics);
    }
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Ingest => {
            let s = pipeline::ingest(&cfg)?;
            println!("turns: {}", s.turns);
            for ((source, keyword), n) in &s.per_keyword {
                println!("  {source} {keyword}: {n}");
            }
            for ((year, source), (turns, words)) in &s.volume {
                println!("  {year} {source}: {turns} turns, {words} words");
            }
            warn(&s.warnings);
        }
        Command::EmbedToy => {
            let s = pipeline::embed_toy(&cfg)?;
            println!("{} records (d = {}) -> {}", s.records, s.dimension, s.path.display());
        }
        Command::Polarize => {
            let s = pipeline::polarize(&cfg)?;
            for r in &s.ranges {
                println!("{} {}: min {:.4} ({}), max {:.4} ({})", r.keyword, r.pair, r.min, r.argmin, r.max, r.argmax);
            }
            warn(&s.warnings);
        }
        Command::Granger => {
            let s = pipeline::granger(&cfg)?;
            for (kw, rep) in &s.reports {
                let show = |l: Option<usize>| l.map_or("none".to_string(), |l| l.to_string());
                println!(
                    "{}: H1 (tv->twitter) min lag {}, H2 (twitter->tv) min lag {}",
                    kw.name,
                    show(rep.min_significant_h1),
                    show(rep.min_significant_h2)
                );
            }
            warn(&s.warnings);
        }
        Command::Attribute { topic, lag, direction } => {
            let lag = lag.map(|l| {
                let d = match direction {
                    Direction::TvLeads => LagDirection::TvLeads,
                    Direction::TwitterLeads => LagDirection::TwitterLeads,
                };
                (l, d)
            });
            print_attribution(&pipeline::attribute(&cfg, topic, lag)?);
        }
        Command::ReportAll => {
            let s = pipeline::report_all(&cfg)?;
            println!("turns: {}", s.ingest.turns);
            for r in &s.polarize.ranges {
                println!("{} {}: max {:.4} ({})", r.keyword, r.pair, r.max, r.argmax);
            }
            for a in &s.attribution {
                print_attribution(a);
            }
            warn(&s.ingest.warnings);
            warn(&s.polarize.warnings);
            warn(&s.granger.warnings);
            warn(&s.warnings);
        }
    }
    let manifest = pipeline::finish_run(&cfg)?;
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
