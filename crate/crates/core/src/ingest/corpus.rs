//! Directory-level caption ingestion.
//!
//! Files parse independently (in parallel); the merged turn stream is
//! ordered by date, then file name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use regex::Regex;
use serde::Serialize;
use walkdir::WalkDir;

use super::commercials::{remove_commercials, CommercialFilter, DuplicateTally};
use super::srt::{parse_srt, SrtCue, SrtOptions};
use super::turns::{extract_turns, SpeakerTurn, TurnOptions};
use super::IngestError;
use crate::keywords::KeywordMatcher;
use crate::types::{SourceId, YearWindow};

pub const DEFAULT_DATE_PATTERN: &str = r"(\d{4})-(\d{2})-(\d{2})";

#[derive(Debug, Clone)]
pub struct CaptionIngestOptions {
    /// Applied to the file name; the first three capture groups are year, month, day.
    pub date_pattern: Regex,
    pub filter: CommercialFilter,
    pub srt: SrtOptions,
    pub turns: TurnOptions,
    pub window: YearWindow,
}

impl Default for CaptionIngestOptions {
    fn default() -> Self {
        CaptionIngestOptions {
            date_pattern: Regex::new(DEFAULT_DATE_PATTERN).expect("static pattern"),
            filter: CommercialFilter::new(&[], Some(10)),
            srt: SrtOptions::default(),
            turns: TurnOptions::default(),
            window: YearWindow::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CaptionDiagnostics {
    pub files_seen: usize,
    pub files_unreadable: usize,
    pub files_undated: usize,
    pub files_out_of_window: usize,
    pub cues: usize,
    pub cues_malformed: usize,
    pub commercials_removed: usize,
    pub turns: usize,
}

pub fn date_from_name(name: &str, pattern: &Regex) -> Option<NaiveDate> {
    let caps = pattern.captures(name)?;
    let num = |i: usize| caps.get(i).and_then(|m| m.as_str().parse::<u32>().ok());
    NaiveDate::from_ymd_opt(num(1)? as i32, num(2)?, num(3)?)
}

struct ParsedFile {
    name: String,
    date: NaiveDate,
    cues: Vec<SrtCue>,
}

/// Ingest every `.srt` file under `dir` as captions of `source`.
pub fn ingest_caption_dir(
    dir: &Path,
    source: &SourceId,
    matcher: &KeywordMatcher,
    opts: &CaptionIngestOptions,
) -> Result<(Vec<SpeakerTurn>, CaptionDiagnostics), IngestError> {
    if !dir.is_dir() {
        return Err(IngestError::MissingPath(dir.display().to_string()));
    }
    let mut diag = CaptionDiagnostics::default();
    let mut files: Vec<(String, PathBuf)> = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let Ok(entry) = entry else {
            diag.files_unreadable += 1;
            continue;
        };
        let p = entry.path();
        if entry.file_type().is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("srt")) {
            let rel = p.strip_prefix(dir).unwrap_or(p).to_string_lossy().replace('\\', "/");
            files.push((rel, p.to_path_buf()));
        }
    }
    diag.files_seen = files.len();

    let parsed: Vec<Result<Option<(ParsedFile, usize)>, ()>> = files
        .par_iter()
        .map(|(name, path)| {
            let file_name = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
            let Some(date) = date_from_name(&file_name, &opts.date_pattern) else {
                return Ok(None);
            };
            let bytes = std::fs::read(path).map_err(|_| ())?;
            let p = parse_srt(&bytes, opts.srt).map_err(|_| ())?;
            Ok(Some((ParsedFile { name: name.clone(), date, cues: p.cues }, p.skipped)))
        })
        .collect();

    let mut by_date: BTreeMap<NaiveDate, Vec<ParsedFile>> = BTreeMap::new();
    for r in parsed {
        match r {
            Err(()) => diag.files_unreadable += 1,
            Ok(None) => diag.files_undated += 1,
            Ok(Some((f, _))) if !opts.window.contains_year(f.date.year()) => diag.files_out_of_window += 1,
            Ok(Some((f, skipped))) => {
                diag.cues_malformed += skipped;
                diag.cues += f.cues.len();
                by_date.entry(f.date).or_default().push(f);
            }
        }
    }

    let mut turns = Vec::new();
    for (date, mut day) in by_date {
        day.sort_by(|a, b| a.name.cmp(&b.name));
        let tally = DuplicateTally::from_files(day.iter().map(|f| f.cues.as_slice()));
        for f in &day {
            let kept = remove_commercials(&f.cues, &opts.filter, &tally);
            diag.commercials_removed += f.cues.len() - kept.len();
            let prefix = format!("{source}/{}", f.name);
            turns.extend(extract_turns(&kept, source, date, matcher, &prefix, opts.turns));
        }
    }
    diag.turns = turns.len();
    Ok((turns, diag))
}
