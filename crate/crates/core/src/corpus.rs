//! Publication records, corpus loading and time-window slicing.
//!
//! Two line-oriented input formats are accepted:
//!
//! * `jsonl`: one JSON object per line with fields `id` (string), `year`
//!   (integer), `refs` (array of strings, may be omitted) and an optional
//!   `label` (string). Unknown fields are ignored.
//! * `tsv`: `id<TAB>year<TAB>ref1;ref2;...<TAB>label`, the label column being
//!   optional and the refs column possibly empty.
//!
//! Blank lines are skipped in both formats, and so are `#` comment lines in
//! the tabular one.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Publication {
    pub id: String,
    pub year: i32,
    /// Reference ids, sorted and without duplicates.
    pub refs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Publication {
    pub fn new<I, S>(id: impl Into<String>, year: i32, refs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let refs: BTreeSet<String> = refs.into_iter().map(Into::into).collect();
        Publication {
            id: id.into(),
            year,
            refs: refs.into_iter().collect(),
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    fn normalize(&mut self) {
        self.refs.sort_unstable();
        self.refs.dedup();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    #[default]
    Jsonl,
    Tsv,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(Error::validation(format!("unknown corpus format `{other}`"))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Tsv => "tsv",
        })
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    year: i32,
    #[serde(default)]
    refs: Vec<String>,
    #[serde(default)]
    label: Option<String>,
}

/// A validated set of publications with unique ids.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    publications: Vec<Publication>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(publications: Vec<Publication>) -> Result<Self> {
        let mut corpus = Corpus::default();
        for p in publications {
            corpus.push(p)?;
        }
        Ok(corpus)
    }

    fn push(&mut self, mut p: Publication) -> Result<()> {
        if p.id.is_empty() {
            return Err(Error::validation("publication id must not be empty"));
        }
        if self.by_id.contains_key(&p.id) {
            return Err(Error::DuplicateId(p.id));
        }
        p.normalize();
        self.by_id.insert(p.id.clone(), self.publications.len());
        self.publications.push(p);
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R, format: CorpusFormat) -> Result<Self> {
        match format {
            CorpusFormat::Jsonl => Self::from_jsonl(reader),
            CorpusFormat::Tsv => Self::from_tsv(reader),
        }
    }

    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        let mut corpus = Corpus::default();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            })?;
            corpus.push_record(n + 1, raw)?;
        }
        Ok(corpus)
    }

    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut corpus = Corpus::default();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(Error::Parse {
                    line: n + 1,
                    message: format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
                });
            }
            let year = fields[1].trim().parse::<i32>().map_err(|e| Error::Parse {
                line: n + 1,
                message: format!("invalid year `{}`: {e}", fields[1]),
            })?;
            let refs = fields[2]
                .split(';')
                .map(str::trim)
                .filter(|r| !r.is_empty())
                .map(String::from)
                .collect();
            let label = fields
                .get(3)
                .map(|l| l.trim())
                .filter(|l| !l.is_empty())
                .map(String::from);
            let raw = RawRecord {
                id: fields[0].trim().to_string(),
                year,
                refs,
                label,
            };
            corpus.push_record(n + 1, raw)?;
        }
        Ok(corpus)
    }

    fn push_record(&mut self, line: usize, raw: RawRecord) -> Result<()> {
        if raw.id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty publication id".into(),
            });
        }
        self.push(Publication {
            id: raw.id,
            year: raw.year,
            refs: raw.refs,
            label: raw.label,
        })
    }

    pub fn write<W: Write>(&self, mut w: W, format: CorpusFormat) -> Result<()> {
        for p in &self.publications {
            match format {
                CorpusFormat::Jsonl => {
                    serde_json::to_writer(&mut w, p)?;
                    writeln!(w)?;
                }
                CorpusFormat::Tsv => {
                    write!(w, "{}\t{}\t{}", p.id, p.year, p.refs.join(";"))?;
                    if let Some(label) = &p.label {
                        write!(w, "\t{label}")?;
                    }
                    writeln!(w)?;
                }
            }
        }
        Ok(())
    }

    pub fn publications(&self) -> &[Publication] {
        &self.publications
    }

    pub fn len(&self) -> usize {
        self.publications.len()
    }

    pub fn is_empty(&self) -> bool {
        self.publications.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Publication> {
        self.by_id.get(id).map(|&i| &self.publications[i])
    }

    /// `(min year, max year)`, or `None` for an empty corpus.
    pub fn period(&self) -> Option<(i32, i32)> {
        let min = self.publications.iter().map(|p| p.year).min()?;
        let max = self.publications.iter().map(|p| p.year).max()?;
        Some((min, max))
    }

    /// Splits the corpus period into contiguous windows of `delta_t` years
    /// anchored at the earliest year. The last window is kept even when it
    /// extends past the final year, and is then flagged as partial.
    pub fn slice_windows(&self, delta_t: u32) -> Result<Vec<(TimeWindow, Vec<&Publication>)>> {
        if delta_t == 0 {
            return Err(Error::validation("window length must be at least one year"));
        }
        let Some((first, last)) = self.period() else {
            log::warn!("empty corpus: no time windows");
            return Ok(Vec::new());
        };
        let dt = delta_t as i64;
        let span = (last as i64 - first as i64) + 1;
        let count = ((span + dt - 1) / dt) as usize;
        let mut windows: Vec<(TimeWindow, Vec<&Publication>)> = (0..count)
            .map(|index| {
                let start = first as i64 + index as i64 * dt;
                let end = start + dt;
                let window = TimeWindow {
                    index,
                    start: start as i32,
                    end: end as i32,
                    partial: end > last as i64 + 1,
                };
                (window, Vec::new())
            })
            .collect();
        for p in &self.publications {
            let k = ((p.year as i64 - first as i64) / dt) as usize;
            windows[k].1.push(p);
        }
        Ok(windows)
    }
}

/// Half-open year interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub index: usize,
    pub start: i32,
    pub end: i32,
    /// The window runs past the last year of the corpus.
    pub partial: bool,
}

impl TimeWindow {
    pub fn contains(&self, year: i32) -> bool {
        (self.start..self.end).contains(&year)
    }
}
