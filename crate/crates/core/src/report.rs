//! Output files: CSV tables, markdown tables, SVG line charts and the run
//! manifest.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRow {
    pub keyword: String,
    pub pair: String,
    pub granularity: String,
    pub bucket: String,
    pub value: f64,
    pub n1: usize,
    pub n2: usize,
    pub filled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeRow {
    pub keyword: String,
    pub pair: String,
    pub min: f64,
    pub argmin: String,
    pub max: f64,
    pub argmax: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrangerRow {
    pub keyword: String,
    pub direction: String,
    pub lag: usize,
    pub f_value: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdfRow {
    pub keyword: String,
    pub series: String,
    pub differenced: bool,
    pub statistic: f64,
    pub crit_1pct: f64,
    pub crit_5pct: f64,
    pub lags_used: usize,
    pub n: usize,
    pub conclusion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributionRow {
    pub token: String,
    pub attribution: f64,
    pub class: String,
    pub topic: String,
    /// Empty for unlagged reports.
    pub lag: Option<u32>,
}

pub fn ensure_parent(path: &Path) -> io::Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p),
        _ => Ok(()),
    }
}

pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<(), csv::Error> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes only the header when there are no rows.
pub fn write_csv_with_header<S: Serialize>(path: &Path, header: &[&str], rows: &[S]) -> Result<(), csv::Error> {
    if !rows.is_empty() {
        return write_csv(path, rows);
    }
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    w.flush()?;
    Ok(())
}

pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.to_lowercase().chars() {
        if c.is_ascii_alphanumeric() || c == '@' {
            out.push(c);
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

pub fn markdown_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n|{}|\n", header.join(" | "), header.iter().map(|_| "---").collect::<Vec<_>>().join("|"));
    for r in rows {
        let _ = writeln!(s, "| {} |", r.join(" | "));
    }
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One labelled line over shared x labels.
pub struct ChartLine {
    pub label: String,
    pub values: Vec<f64>,
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Static line chart; y axis spans the data range (flat data gets a unit band).
pub fn svg_line_chart(title: &str, x_labels: &[String], lines: &[ChartLine]) -> String {
    let (w, h) = (720.0, 360.0);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let all = lines.iter().flat_map(|l| l.values.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let n = x_labels.len().max(2);
    let x = |i: usize| left + pw * i as f64 / (n - 1) as f64;
    let y = |v: f64| top + ph * (1.0 - (v - lo) / (hi - lo));

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, w / 2.0, xml_escape(title));
    let _ = writeln!(
        s,
        r##"<path d="M{left} {top} L{left} {yb} L{xr} {yb}" stroke="#333" fill="none"/>"##,
        yb = top + ph,
        xr = left + pw
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{:.3}</text>"#,
            left - 6.0,
            y(v) + 3.0,
            v
        );
    }
    let stride = (x_labels.len() / 12).max(1);
    for (i, label) in x_labels.iter().enumerate().step_by(stride) {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            x(i),
            top + ph + 16.0,
            xml_escape(label)
        );
    }
    for (li, line) in lines.iter().enumerate() {
        let color = PALETTE[li % PALETTE.len()];
        let pts: Vec<String> = line
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, v)| format!("{:.2},{:.2}", x(i), y(*v)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#, pts.join(" "));
        let ly = top + 14.0 * li as f64 + 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            left + 8.0,
            xml_escape(&line.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let digest = Sha256::digest(fs::read(path)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Hashes every file under `out` (except the manifest itself) into
/// `out/manifest.json`, sorted by relative path.
pub fn write_manifest(out: &Path) -> io::Result<PathBuf> {
    let mut entries = Vec::new();
    for e in WalkDir::new(out).sort_by_file_name() {
        let e = e.map_err(io::Error::other)?;
        if !e.file_type().is_file() {
            continue;
        }
        let rel = e.path().strip_prefix(out).map_err(io::Error::other)?;
        let rel = rel.to_string_lossy().replace('\\', "/");
        if rel == MANIFEST_NAME || rel.ends_with(".partial") {
            continue;
        }
        entries.push(ManifestEntry { path: rel, bytes: e.metadata().map_err(io::Error::other)?.len(), sha256: sha256_file(e.path())? });
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    let path = out.join(MANIFEST_NAME);
    let body = serde_json::to_string_pretty(&serde_json::json!({ "files": entries }))?;
    fs::write(&path, body + "\n")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("climate change"), "climate-change");
        assert_eq!(slug("Black Lives Matter"), "black-lives-matter");
        assert_eq!(slug("twitter@cnn|twitter@foxnews"), "twitter@cnn-twitter@foxnews");
    }

    #[test]
    fn chart_escapes_and_handles_flat_data() {
        let svg = svg_line_chart(
            "a < b & c",
            &["2010".to_string(), "2011".to_string()],
            &[ChartLine { label: "x".into(), values: vec![0.5, 0.5] }],
        );
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(svg.starts_with("<svg"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn markdown_shape() {
        let t = markdown_table(&["a", "b"], &[vec!["1".into(), "2".into()]]);
        assert_eq!(t, "| a | b |\n|---|---|\n| 1 | 2 |\n");
    }
}
