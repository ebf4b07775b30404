//! SubRip (`.srt`) parsing and serialization.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrtCue {
    pub index: u32,
    /// Milliseconds from file start.
    pub start: u64,
    pub end: u64,
    /// Text lines, trimmed and joined with single spaces.
    pub text: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SrtOptions {
    /// Reject invalid UTF-8 instead of substituting U+FFFD.
    pub strict_utf8: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SrtParse {
    pub cues: Vec<SrtCue>,
    pub skipped: usize,
}

/// Parse a raw SRT byte stream.
///
/// Malformed blocks (bad index, bad timing line, `start > end`, index not
/// strictly increasing) are skipped and counted; a file never fails as a
/// whole unless `strict_utf8` is set and the bytes are not UTF-8.
pub fn parse_srt(bytes: &[u8], opts: SrtOptions) -> Result<SrtParse, IngestError> {
    let text = if opts.strict_utf8 {
        std::str::from_utf8(bytes)
            .map_err(|e| IngestError::Utf8(e.to_string()))?
            .to_string()
    } else {
        String::from_utf8_lossy(bytes).into_owned()
    };
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);

    let mut out = SrtParse::default();
    let mut block: Vec<&str> = Vec::new();
    let mut last_index: Option<u32> = None;

    let lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    for line in lines.chain(std::iter::once("")) {
        if line.trim().is_empty() {
            if !block.is_empty() {
                match parse_block(&block) {
                    Some(cue) if last_index.map_or(true, |prev| cue.index > prev) => {
                        last_index = Some(cue.index);
                        out.cues.push(cue);
                    }
                    _ => out.skipped += 1,
                }
                block.clear();
            }
        } else {
            block.push(line);
        }
    }
    Ok(out)
}

fn parse_block(lines: &[&str]) -> Option<SrtCue> {
    let index: u32 = lines.first()?.trim().parse().ok().filter(|i| *i > 0)?;
    let (start, end) = parse_timing(lines.get(1)?)?;
    if start > end {
        return None;
    }
    let text = lines[2..]
        .iter()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    Some(SrtCue { index, start, end, text })
}

fn parse_timing(line: &str) -> Option<(u64, u64)> {
    let (a, b) = line.split_once("-->")?;
    // Positioning hints (e.g. `X1:...`) may follow the end stamp.
    let b = b.split_whitespace().next()?;
    Some((parse_timestamp(a.trim())?, parse_timestamp(b)?))
}

/// `HH:MM:SS,mmm` (a `.` separator is tolerated) to milliseconds.
pub fn parse_timestamp(s: &str) -> Option<u64> {
    let (hms, ms) = s.split_once([',', '.'])?;
    let mut parts = hms.split(':');
    let h: u64 = digits(parts.next()?)?;
    let m: u64 = digits(parts.next()?)?;
    let sec: u64 = digits(parts.next()?)?;
    if parts.next().is_some() || m >= 60 || sec >= 60 || ms.len() != 3 {
        return None;
    }
    let ms: u64 = digits(ms)?;
    Some(((h * 60 + m) * 60 + sec) * 1000 + ms)
}

fn digits(s: &str) -> Option<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

pub fn format_timestamp(ms: u64) -> String {
    let (h, rem) = (ms / 3_600_000, ms % 3_600_000);
    let (m, rem) = (rem / 60_000, rem % 60_000);
    let (s, ms) = (rem / 1000, rem % 1000);
    format!("{h:02}:{m:02}:{s:02},{ms:03}")
}

/// Serialize cues back to SRT text (LF line endings).
pub fn write_srt(cues: &[SrtCue]) -> String {
    let mut out = String::new();
    for c in cues {
        let _ = write!(
            out,
            "{}\n{} --> {}\n{}\n\n",
            c.index,
            format_timestamp(c.start),
            format_timestamp(c.end),
            c.text
        );
    }
    out
}
