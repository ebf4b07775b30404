use std::fs;
use std::path::Path;

use sempol_core::attribution::lagsplit::months_for;
use sempol_core::attribution::{LagDirection, Side};
use sempol_core::config::RunConfig;
use sempol_core::pipeline::{self, PipelineError};
use sempol_core::report::MANIFEST_NAME;
use sempol_core::synth::{generate, SynthOptions};
use sempol_core::YearWindow;

fn small(root: &Path) -> RunConfig {
    let opts = SynthOptions {
        window: YearWindow::new(2014, 2017).unwrap(),
        spike_year: 2015,
        turns_per_month: 10,
        ..Default::default()
    };
    let corpus = generate(root, &opts).unwrap();
    let mut cfg = RunConfig::load(Some(&corpus.config_path), Vec::<(String, String)>::new()).unwrap();
    cfg.granger.max_lag = 6;
    cfg.attribution.max_epochs = 300;
    cfg.embedding.dim = 64;
    cfg
}

fn csv_files(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = walkdir::WalkDir::new(out)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .map(|e| (e.path().strip_prefix(out).unwrap().display().to_string(), fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn report_all_outputs_are_complete_and_reproducible() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (c1, c2) = (small(d1.path()), small(d2.path()));
    let run = pipeline::report_all(&c1).unwrap();
    pipeline::finish_run(&c1).unwrap();
    pipeline::report_all(&c2).unwrap();
    pipeline::finish_run(&c2).unwrap();

    let (a, b) = (csv_files(&c1.out), csv_files(&c2.out));
    assert!(a.len() >= 8, "{:?}", a.iter().map(|x| &x.0).collect::<Vec<_>>());
    assert_eq!(a, b);

    // yearly range table puts the TV maximum in the spike year
    let tv = run.polarize.ranges.iter().find(|r| r.pair == "cnn|foxnews").unwrap();
    assert_eq!(tv.argmax, "2015");
    let monthly = fs::read_to_string(c1.out.join("series/immigration_monthly.csv")).unwrap();
    assert_eq!(monthly.lines().next().unwrap(), "keyword,pair,granularity,bucket,value,n1,n2,filled");
    assert_eq!(monthly.lines().count(), 1 + 2 * 48);

    // every SVG parses as XML
    let charts: Vec<_> = fs::read_dir(c1.out.join("charts")).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!charts.is_empty());
    for c in charts {
        let text = fs::read_to_string(&c).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
    }

    // manifest covers every file with its hash
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(c1.out.join(MANIFEST_NAME)).unwrap()).unwrap();
    let listed = manifest["files"].as_array().unwrap();
    let on_disk = walkdir::WalkDir::new(&c1.out).into_iter().filter_map(Result::ok).filter(|e| e.file_type().is_file()).count();
    assert_eq!(listed.len(), on_disk - 1);
    for f in listed {
        let p = c1.out.join(f["path"].as_str().unwrap());
        assert_eq!(f["sha256"].as_str().unwrap(), sempol_core::report::sha256_file(&p).unwrap());
    }

    let granger = fs::read_to_string(c1.out.join("granger.csv")).unwrap();
    assert_eq!(granger.lines().count(), 1 + 2 * 6);
    assert!(c1.out.join("adf.csv").is_file());
    assert!(c1.out.join("attribution/immigration.csv").is_file());
    let attr = fs::read_to_string(c1.out.join("attribution/immigration.csv")).unwrap();
    assert_eq!(attr.lines().next().unwrap(), "token,attribution,class,topic,lag");
}

#[test]
fn lagged_attribution_uses_split_windows() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small(d.path());
    pipeline::ingest(&cfg).unwrap();
    let s = pipeline::attribute(&cfg, "immigration", Some((3, LagDirection::TvLeads))).unwrap();
    assert_eq!(s.outputs.len(), 2);
    let (tv, tw) = (&s.outputs[0], &s.outputs[1]);
    assert_eq!((tv.corpus.as_str(), tv.months), ("tv", Some((1, 9))));
    assert_eq!((tw.corpus.as_str(), tw.months), ("twitter", Some((4, 12))));
    assert_eq!(months_for(3, Side::A, LagDirection::TvLeads), 1..=9);
    assert_eq!(months_for(3, Side::B, LagDirection::TvLeads), 4..=12);
    assert!(s.files.iter().any(|f| f.to_string_lossy().contains("immigration_lag3_tv-leads")));
    let csv = fs::read_to_string(s.files.iter().find(|f| f.extension().is_some_and(|x| x == "csv")).unwrap()).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",3")));
}

#[test]
fn missing_store_without_toy_is_actionable() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = small(d.path());
    cfg.toy_embedder = false;
    pipeline::ingest(&cfg).unwrap();
    let err = pipeline::polarize(&cfg).unwrap_err();
    assert!(matches!(err, PipelineError::MissingStore(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("embed-toy"));
}

#[test]
fn unknown_topic_lists_valid_ones() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small(d.path());
    let err = pipeline::attribute(&cfg, "weather", None).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let msg = err.to_string();
    for t in ["racism", "black lives matter", "police", "immigration", "climate change", "health care"] {
        assert!(msg.contains(t), "{msg}");
    }
}

#[test]
fn flat_corpus_gives_flat_range() {
    let d = tempfile::tempdir().unwrap();
    for src in ["cnn", "foxnews"] {
        let dir = d.path().join(src);
        fs::create_dir_all(&dir).unwrap();
        for month in [3, 7] {
            fs::write(
                dir.join(format!("{src}_2012-{month:02}-01.srt")),
                "1\n00:00:01,000 --> 00:00:02,000\n>> the police chief spoke\n\n",
            )
            .unwrap();
        }
    }
    let toml = "toy_embedder = true\nout = \"out\"\n[window]\nstart = 2012\nend = 2013\n[[corpus.captions]]\nsource = \"cnn\"\ndir = \"cnn\"\n[[corpus.captions]]\nsource = \"foxnews\"\ndir = \"foxnews\"\n";
    fs::write(d.path().join("c.toml"), toml).unwrap();
    let cfg = RunConfig::load(Some(&d.path().join("c.toml")), Vec::<(String, String)>::new()).unwrap();
    pipeline::ingest(&cfg).unwrap();
    let s = pipeline::polarize(&cfg).unwrap();
    let r = &s.ranges[0];
    assert_eq!((r.min, r.max), (0.0, 0.0));
    assert!(!s.warnings.is_empty(), "interpolated buckets should be reported");
}

#[test]
fn empty_caption_dir_warns_but_succeeds() {
    let d = tempfile::tempdir().unwrap();
    fs::create_dir_all(d.path().join("empty")).unwrap();
    let toml = "[[corpus.captions]]\nsource = \"cnn\"\ndir = \"empty\"\n";
    fs::write(d.path().join("c.toml"), toml).unwrap();
    let cfg = RunConfig::load(Some(&d.path().join("c.toml")), Vec::<(String, String)>::new()).unwrap();
    let s = pipeline::ingest(&cfg).unwrap();
    assert_eq!(s.turns, 0);
    assert!(s.warnings.iter().any(|w| w.contains("no .srt files")));
}

#[test]
fn missing_caption_dir_is_a_data_error() {
    let d = tempfile::tempdir().unwrap();
    let toml = "[[corpus.captions]]\nsource = \"cnn\"\ndir = \"nope\"\n";
    fs::write(d.path().join("c.toml"), toml).unwrap();
    let cfg = RunConfig::load(Some(&d.path().join("c.toml")), Vec::<(String, String)>::new()).unwrap();
    assert_eq!(pipeline::ingest(&cfg).unwrap_err().exit_code(), 2);
}
