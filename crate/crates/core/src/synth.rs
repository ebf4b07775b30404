//! Synthetic caption and tweet corpus with known structure, for end-to-end
//! runs without real data.
//!
//! Every keyword turn places the keyword between two context words on each
//! side. A context word is drawn from its source's planted vocabulary with
//! probability `q(t)` for month `t`, otherwise from a shared vocabulary, so
//! polarization between the two sources rises with `q`. The TV `q` is i.i.d.
//! per month plus a jump during the spike year; the Twitter `q` follows the
//! TV base level `coupling_lag` months later.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CaptionSource, RunConfig};
use crate::ingest::srt::{write_srt, SrtCue};
use crate::types::{SourceId, YearWindow};

pub const PLANTED_A: [&str; 5] = ["families", "children", "communities", "asylum", "refugees"];
pub const PLANTED_B: [&str; 5] = ["illegal", "border", "enforcement", "criminals", "wall"];
pub const SHARED: [&str; 5] = ["policy", "debate", "country", "people", "today"];
pub const BLOCKLIST_ENTRY: &str = "call now for a free consultation";
const AD_LINE: &str = ">> immigration lawyers are standing by call now for a free consultation";
const JINGLE: &str = ">> stay with us for more on immigration";
const JINGLE_REPEATS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub seed: u64,
    pub window: YearWindow,
    /// Keyword turns per source per month, for each of TV and Twitter.
    pub turns_per_month: usize,
    pub keyword: String,
    pub base_mean: f64,
    /// Half-width of the uniform monthly variation of `q`.
    pub base_spread: f64,
    pub spike_year: i32,
    pub spike: f64,
    pub coupling: f64,
    pub coupling_lag: usize,
    /// Half-width of the uniform noise added to the Twitter `q`.
    pub twitter_noise: f64,
    /// Keyword-free turns per caption file.
    pub distractors: usize,
    pub filler_vocab: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            seed: 7,
            window: YearWindow::default(),
            turns_per_month: 30,
            keyword: "immigration".into(),
            base_mean: 0.35,
            base_spread: 0.25,
            spike_year: 2015,
            spike: 0.35,
            coupling: 1.0,
            coupling_lag: 3,
            twitter_noise: 0.05,
            distractors: 5,
            filler_vocab: 600,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub root: PathBuf,
    pub config_path: PathBuf,
    pub caption_files: usize,
    /// Keyword turns written per TV source.
    pub tv_turns_per_source: usize,
    pub tweets_per_target: usize,
    pub q_tv: Vec<f64>,
    pub q_twitter: Vec<f64>,
}

fn filler_words(n: usize) -> Vec<String> {
    const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    let syll: Vec<String> = ONSETS.iter().flat_map(|o| VOWELS.iter().map(move |v| format!("{o}{v}"))).collect();
    (0..n).map(|i| format!("{}{}{}", syll[i % 60], syll[(i / 60) % 60], syll[(i * 7 + 3) % 60])).collect()
}

struct Writer<'a> {
    rng: ChaCha8Rng,
    filler: Vec<String>,
    keyword: &'a str,
}

impl Writer<'_> {
    fn fill(&mut self, lo: usize, hi: usize) -> Vec<String> {
        let n = self.rng.gen_range(lo..=hi);
        (0..n).map(|_| self.filler.choose(&mut self.rng).expect("filler").clone()).collect()
    }

    fn context(&mut self, planted: &[&str], q: f64) -> String {
        let pool = if self.rng.gen_bool(q.clamp(0.0, 1.0)) { planted } else { &SHARED };
        pool.choose(&mut self.rng).expect("pool").to_string()
    }

    fn keyword_text(&mut self, planted: &[&str], q: f64) -> String {
        let mut words = self.fill(2, 4);
        let ctx: Vec<String> = (0..4).map(|_| self.context(planted, q)).collect();
        words.extend_from_slice(&ctx[..2]);
        words.push(self.keyword.to_string());
        words.extend_from_slice(&ctx[2..]);
        words.extend(self.fill(2, 4));
        words.join(" ")
    }
}

fn q_series(opts: &SynthOptions, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let months = opts.window.years().count() * 12;
    let base: Vec<f64> = (0..months).map(|_| opts.base_mean + opts.base_spread * rng.gen_range(-1.0..1.0)).collect();
    let q_tv = base
        .iter()
        .enumerate()
        .map(|(t, b)| {
            let year = opts.window.start + (t / 12) as i32;
            (b + if year == opts.spike_year { opts.spike } else { 0.0 }).clamp(0.0, 1.0)
        })
        .collect();
    let q_tw = (0..months)
        .map(|t| {
            let lead = if t >= opts.coupling_lag { base[t - opts.coupling_lag] - opts.base_mean } else { 0.0 };
            let noise = opts.twitter_noise * rng.gen_range(-1.0..1.0);
            (opts.base_mean + opts.coupling * lead + noise).clamp(0.0, 1.0)
        })
        .collect();
    (q_tv, q_tw)
}

/// Writes `captions/{cnn,foxnews}/*.srt`, `tweets.jsonl` and `sempol.toml`
/// under `root`.
pub fn generate(root: &Path, opts: &SynthOptions) -> io::Result<SynthCorpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (q_tv, q_tw) = q_series(opts, &mut rng);
    let mut w = Writer { rng, filler: filler_words(opts.filler_vocab), keyword: &opts.keyword };
    let stations: [(&str, &[&str]); 2] = [("cnn", &PLANTED_A), ("foxnews", &PLANTED_B)];

    let mut files = 0;
    for (name, planted) in stations {
        let dir = root.join("captions").join(name);
        fs::create_dir_all(&dir)?;
        for (t, q) in q_tv.iter().enumerate() {
            let (year, month) = (opts.window.start + (t / 12) as i32, t % 12 + 1);
            let mut lines: Vec<String> = (0..opts.turns_per_month).map(|_| format!(">> {}", w.keyword_text(planted, *q))).collect();
            for _ in 0..opts.distractors {
                let f = w.fill(3, 6).join(" ");
                lines.push(format!(">> the weather is mild {f}"));
            }
            lines.push(AD_LINE.to_string());
            lines.extend(std::iter::repeat(JINGLE.to_string()).take(JINGLE_REPEATS));
            lines.shuffle(&mut w.rng);
            let cues: Vec<SrtCue> = lines
                .into_iter()
                .enumerate()
                .map(|(i, text)| SrtCue { index: i as u32 + 1, start: 3000 * i as u64, end: 3000 * i as u64 + 2000, text })
                .collect();
            fs::write(dir.join(format!("{name}_{year}-{month:02}-15.srt")), write_srt(&cues))?;
            files += 1;
        }
    }

    let mut tweets = io::BufWriter::new(fs::File::create(root.join("tweets.jsonl"))?);
    let mut id = 0usize;
    for (t, q) in q_tw.iter().enumerate() {
        let (year, month) = (opts.window.start + (t / 12) as i32, t % 12 + 1);
        for (target, planted) in [("@CNN", &PLANTED_A), ("@FoxNews", &PLANTED_B)] {
            for _ in 0..opts.turns_per_month {
                id += 1;
                let rec = serde_json::json!({
                    "id": format!("t{id}"),
                    "text": w.keyword_text(planted, *q),
                    "created_at": format!("{year}-{month:02}-15T12:00:00Z"),
                    "target": target,
                });
                writeln!(tweets, "{rec}")?;
            }
        }
    }
    tweets.flush()?;

    let mut cfg = RunConfig { seed: opts.seed, out: PathBuf::from("out"), toy_embedder: true, window: opts.window, ..Default::default() };
    cfg.corpus.captions = stations
        .iter()
        .map(|(name, _)| CaptionSource {
            source: SourceId::new(*name).expect("static id"),
            dir: PathBuf::from("captions").join(name),
        })
        .collect();
    cfg.corpus.tweets = vec![PathBuf::from("tweets.jsonl")];
    cfg.corpus.blocklist = vec![BLOCKLIST_ENTRY.to_string()];
    let config_path = root.join("sempol.toml");
    fs::write(&config_path, cfg.to_toml())?;

    Ok(SynthCorpus {
        root: root.to_path_buf(),
        config_path,
        caption_files: files,
        tv_turns_per_source: opts.turns_per_month * q_tv.len(),
        tweets_per_target: opts.turns_per_month * q_tw.len(),
        q_tv,
        q_twitter: q_tw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filler_is_distinct_and_keyword_free() {
        let f = filler_words(600);
        let set: std::collections::BTreeSet<&String> = f.iter().collect();
        assert_eq!(set.len(), 600);
        for w in &f {
            assert!(!PLANTED_A.contains(&w.as_str()) && !PLANTED_B.contains(&w.as_str()) && !SHARED.contains(&w.as_str()));
        }
    }

    #[test]
    fn twitter_follows_tv_base() {
        let opts = SynthOptions { twitter_noise: 0.0, ..Default::default() };
        let (tv, tw) = q_series(&opts, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(tv.len(), 132);
        // outside the spike year the TV q is the base level
        for t in 3..60 {
            assert!((tw[t] - tv[t - 3]).abs() < 1e-12);
        }
    }
}
