use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use chrono::NaiveDate;
use proptest::prelude::*;
use regex::Regex;
use sempol_core::ingest::corpus::{ingest_caption_dir, CaptionIngestOptions};
use sempol_core::ingest::{
    extract_turns, ingest_tweets, parse_srt, read_turns, remove_commercials, write_srt, write_turns, CommercialFilter,
    DuplicateTally, SrtCue, SrtOptions, TurnOptions,
};
use sempol_core::keywords::{default_keywords, KeywordMatcher};
use sempol_core::{SourceId, YearWindow};

fn cue(index: u32, start: u64, text: &str) -> SrtCue {
    SrtCue { index, start, end: start + 1500, text: text.to_string() }
}

fn matcher() -> KeywordMatcher {
    KeywordMatcher::new(&default_keywords())
}

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-z]{1,9}", 1..8).prop_map(|w| w.join(" "))
}

fn cue_list(max: usize) -> impl Strategy<Value = Vec<SrtCue>> {
    prop::collection::vec((0u64..5_000, 0u64..4_000, words()), 0..max).prop_map(|parts| {
        let mut t = 0;
        parts
            .into_iter()
            .enumerate()
            .map(|(i, (gap, len, text))| {
                t += gap;
                let c = SrtCue { index: i as u32 + 1, start: t, end: t + len, text };
                t += len;
                c
            })
            .collect()
    })
}

#[test]
fn thousand_cue_round_trip() {
    let mut rng_state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        rng_state
    };
    let mut t = 0;
    let cues: Vec<SrtCue> = (0..1000)
        .map(|i| {
            t += next() % 3000;
            let len = next() % 4000;
            let n_words = 1 + next() % 12;
            let text = (0..n_words).map(|_| format!("w{}", next() % 500)).collect::<Vec<_>>().join(" ");
            let c = SrtCue { index: i + 1, start: t, end: t + len, text };
            t += len;
            c
        })
        .collect();
    let parsed = parse_srt(write_srt(&cues).as_bytes(), SrtOptions::default()).unwrap();
    assert_eq!(parsed.skipped, 0);
    assert_eq!(parsed.cues, cues);
}

#[test]
fn bom_and_crlf_round_trip() {
    let cues = vec![cue(1, 0, "first line"), cue(2, 2000, "second line")];
    let body = format!("\u{feff}{}", write_srt(&cues).replace('\n', "\r\n"));
    let parsed = parse_srt(body.as_bytes(), SrtOptions::default()).unwrap();
    assert_eq!(parsed.cues, cues);
}

#[test]
fn repeated_line_across_files_is_removed() {
    // 50 copies spread over five files of one day, threshold 10
    let files: Vec<Vec<SrtCue>> = (0..5)
        .map(|f| {
            (0..20)
                .map(|i| {
                    let text = if i % 2 == 0 { "stay tuned for more".to_string() } else { format!("story {f} {i}") };
                    cue(i + 1, i as u64 * 2000, &text)
                })
                .collect()
        })
        .collect();
    let tally = DuplicateTally::from_files(files.iter().map(Vec::as_slice));
    let filter = CommercialFilter::new(&[], Some(10));
    let mut removed = 0;
    for f in &files {
        let kept = remove_commercials(f, &filter, &tally);
        assert!(kept.iter().all(|c| c.text.starts_with("story")));
        removed += f.len() - kept.len();
    }
    assert_eq!(removed, 50);
}

#[test]
fn hand_traced_merge() {
    let cues = vec![cue(1, 0, ">> A talks about police"), cue(2, 1600, "and immigration"), cue(3, 3200, ">> B replies")];
    let date = NaiveDate::from_ymd_opt(2016, 5, 1).unwrap();
    let src = SourceId::new("cnn").unwrap();
    let turns = extract_turns(&cues, &src, date, &matcher(), "f", TurnOptions::default());
    assert_eq!(turns.len(), 1);
    assert_eq!(turns[0].keywords, BTreeSet::from([4, 5]));
    assert_eq!(turns[0].word_count, turns[0].text.split_whitespace().count());
}

#[test]
fn ten_file_fixture_counts() {
    let dir = tempfile::tempdir().unwrap();
    let kw = ["racism", "police", "immigration", "climate change", "health care"];
    let mut expected_turns = 0;
    let mut expected_per_kw: BTreeMap<u8, usize> = BTreeMap::new();
    let ids = [1u8, 4, 5, 7, 9];
    for f in 0..10usize {
        // two dated days, five files each
        let day = 1 + f / 5;
        let mut cues = Vec::new();
        let mut t = 0;
        let mut push = |text: String, cues: &mut Vec<SrtCue>| {
            cues.push(SrtCue { index: cues.len() as u32 + 1, start: t, end: t + 1000, text });
            t += 2000;
        };
        for j in 0..=f % 4 {
            let k = (f + j) % kw.len();
            push(format!(">> speaker {f} on {}", kw[k]), &mut cues);
            expected_turns += 1;
            *expected_per_kw.entry(ids[k]).or_default() += 1;
        }
        push(">> nothing topical here".into(), &mut cues);
        push(">> police reform call now for a free consultation".into(), &mut cues);
        let mut body = write_srt(&cues);
        body.push_str("oops\nnot a timestamp\ntext\n\n");
        fs::write(dir.path().join(format!("cnn_2014-02-{day:02}_{f}.srt")), body).unwrap();
    }
    fs::write(dir.path().join("undated.srt"), "1\n00:00:01,000 --> 00:00:02,000\n>> police\n\n").unwrap();
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();

    let opts = CaptionIngestOptions { filter: CommercialFilter::new(&["call now".into()], Some(10)), ..Default::default() };
    let (turns, diag) = ingest_caption_dir(dir.path(), &SourceId::new("cnn").unwrap(), &matcher(), &opts).unwrap();
    assert_eq!(diag.files_seen, 11);
    assert_eq!(diag.files_undated, 1);
    assert_eq!(diag.cues_malformed, 10);
    assert_eq!(diag.commercials_removed, 10);
    assert_eq!(turns.len(), expected_turns);
    let mut per_kw: BTreeMap<u8, usize> = BTreeMap::new();
    for t in &turns {
        for k in &t.keywords {
            *per_kw.entry(*k).or_default() += 1;
        }
    }
    assert_eq!(per_kw, expected_per_kw);
}

#[test]
fn hundred_tweet_tallies() {
    let texts = [
        ("racism is everywhere", Some(1u8)),
        ("defund the police now", Some(4)),
        ("climate change and global warming", None),
        ("new immigrants arrive", Some(6)),
        ("just a sunny day", None),
    ];
    let mut lines = String::new();
    let mut expected: BTreeMap<(String, u8), usize> = BTreeMap::new();
    let mut no_keyword = 0;
    for i in 0..100usize {
        let (text, id) = texts[i % texts.len()];
        let (target, src) = if i % 3 == 0 { ("@FoxNews", "twitter@foxnews") } else { ("@CNN", "twitter@cnn") };
        lines.push_str(&format!(
            "{{\"id\":\"{i}\",\"text\":\"{text}\",\"created_at\":\"2019-0{}-02T10:00:00Z\",\"target\":\"{target}\"}}\n",
            1 + i % 9
        ));
        match (id, text.contains("climate")) {
            (Some(k), _) => *expected.entry((src.into(), k)).or_default() += 1,
            (None, true) => {
                *expected.entry((src.into(), 7)).or_default() += 1;
                *expected.entry((src.into(), 8)).or_default() += 1;
            }
            (None, false) => no_keyword += 1,
        }
    }
    lines.push_str("{\"id\":\"x\",\"text\":\"police\"}\n");
    lines.push_str("not json\n");
    let out = ingest_tweets(lines.as_bytes(), &matcher(), YearWindow::default()).unwrap();
    assert_eq!(out.skipped, 2);
    assert_eq!(out.no_keyword, no_keyword);
    let got: BTreeMap<(String, u8), usize> =
        out.volumes.iter().map(|v| ((v.source.to_string(), v.keyword_id), v.count)).collect();
    assert_eq!(got, expected);
}

#[test]
fn turn_store_round_trip_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cues: Vec<SrtCue> = (0..30).map(|i| cue(i + 1, i as u64 * 2000, &format!(">> item {i} about Police and Racism"))).collect();
    let date = NaiveDate::from_ymd_opt(2012, 7, 4).unwrap();
    let turns = extract_turns(&cues, &SourceId::new("foxnews").unwrap(), date, &matcher(), "x", TurnOptions::default());
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    write_turns(&a, &turns).unwrap();
    let back = read_turns(&a).unwrap();
    assert_eq!(back, turns);
    write_turns(&b, &back).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serialize_parse_round_trip(cues in cue_list(40)) {
        let parsed = parse_srt(write_srt(&cues).as_bytes(), SrtOptions::default()).unwrap();
        prop_assert_eq!(parsed.skipped, 0);
        prop_assert_eq!(parsed.cues, cues);
    }

    #[test]
    fn superset_blocklist_never_keeps_more(cues in cue_list(30), a in prop::collection::vec("[a-z]{1,3}", 0..4), b in prop::collection::vec("[a-z]{1,3}", 0..4)) {
        let tally = DuplicateTally::from_files([cues.as_slice()]);
        let small = remove_commercials(&cues, &CommercialFilter::new(&a, Some(3)), &tally);
        let sup: Vec<String> = a.iter().chain(&b).cloned().collect();
        let large = remove_commercials(&cues, &CommercialFilter::new(&sup, Some(3)), &tally);
        prop_assert!(large.len() <= small.len());
    }

    #[test]
    fn emitted_turns_contain_a_surface_form(parts in prop::collection::vec((words(), prop::sample::select(vec!["police", "Racism", "health  care", "IMMIGRANTS", "black lives matter", "policeman", ""]), any::<bool>()), 1..20)) {
        let cues: Vec<SrtCue> = parts
            .iter()
            .enumerate()
            .map(|(i, (w, k, marker))| cue(i as u32 + 1, i as u64 * 2000, &format!("{}{w} {k}", if *marker { ">> " } else { "" })))
            .collect();
        let kws = default_keywords();
        let date = NaiveDate::from_ymd_opt(2013, 1, 1).unwrap();
        let turns = extract_turns(&cues, &SourceId::new("cnn").unwrap(), date, &KeywordMatcher::new(&kws), "p", TurnOptions::default());
        for t in &turns {
            prop_assert!(!t.keywords.is_empty());
            let any = kws.iter().filter(|k| t.keywords.contains(&k.keyword_id)).all(|k| {
                k.surface_forms.iter().any(|f| {
                    let pat = format!(r"(?i)\b{}\b", regex::escape(f).replace(' ', r"\s+"));
                    Regex::new(&pat).unwrap().is_match(&t.text)
                })
            });
            prop_assert!(any, "turn {:?}", t.text);
        }
    }
}
