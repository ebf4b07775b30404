//! Turn store: one JSON object per line with keys
//! `turn_id, source, date, text, keywords, word_count`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::turns::SpeakerTurn;
use super::IngestError;

pub fn write_turns(path: &Path, turns: &[SpeakerTurn]) -> Result<(), IngestError> {
    let io = |e| IngestError::Io { path: path.display().to_string(), source: e };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for t in turns {
        serde_json::to_writer(&mut w, t).map_err(|e| IngestError::Json(e.to_string()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_turns(path: &Path) -> Result<Vec<SpeakerTurn>, IngestError> {
    let io = |e| IngestError::Io { path: path.display().to_string(), source: e };
    let r = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let t = serde_json::from_str(&line)
            .map_err(|e| IngestError::Json(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(t);
    }
    Ok(out)
}
