//! Mood statistics: share of positive posts among polar posts, grouped by
//! topic or by calendar month.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::Datelike;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{format_timestamp, parse_timestamp, CorpusError, Label, Post};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("cannot write report {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse mood table: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: objective or polar label expected, found {label}")]
    RecordLabel { line: usize, label: Label },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("cannot read classified posts: {0}")]
    Read(#[from] std::io::Error),
}

/// One line of classifier output: the predicted label, per-stage scores and
/// the grouping attributes carried over from the input post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedRecord {
    pub id: String,
    pub label: Label,
    pub subjectivity_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl ClassifiedRecord {
    pub fn new(post: &Post, classification: &crate::pipeline::Classification) -> Self {
        ClassifiedRecord {
            id: post.id.clone(),
            label: classification.label,
            subjectivity_score: classification.subjectivity.score,
            polarity_score: classification.polarity.map(|p| p.score),
            topic: post.topic.clone(),
            timestamp: post.timestamp.map(format_timestamp),
        }
    }
}

/// Reads classifier output JSONL into `(post, predicted label)` pairs. The
/// posts carry id, topic and timestamp only.
pub fn read_classified<R: std::io::BufRead>(reader: R) -> Result<Vec<(Post, Label)>, StatsError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ClassifiedRecord =
            serde_json::from_str(&line).map_err(|source| StatsError::Record {
                line: line_no,
                source,
            })?;
        if !rec.label.is_labeled() {
            return Err(StatsError::RecordLabel {
                line: line_no,
                label: rec.label,
            });
        }
        let mut post = Post::new(rec.id, String::new(), rec.label);
        post.topic = rec.topic;
        post.timestamp = rec
            .timestamp
            .as_deref()
            .map(|raw| parse_timestamp(line_no, raw))
            .transpose()?;
        out.push((post, rec.label));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    Topic,
    /// Month of year, `01`..`12`, years merged.
    Month,
    /// `YYYY-MM`.
    YearMonth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoodRow {
    pub positive: usize,
    pub negative: usize,
    /// `positive / (positive + negative)`; `None` when both are zero.
    pub mood: Option<f64>,
}

impl MoodRow {
    fn from_counts(positive: usize, negative: usize) -> Self {
        let polar = positive + negative;
        MoodRow {
            positive,
            negative,
            mood: (polar > 0).then(|| positive as f64 / polar as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MoodTableRepr", into = "MoodTableRepr")]
pub struct MoodTable {
    pub grouping: Grouping,
    pub rows: BTreeMap<String, MoodRow>,
}

#[derive(Serialize, Deserialize)]
struct MoodTableRepr {
    grouping: Grouping,
    rows: Vec<MoodRecord>,
}

#[derive(Serialize, Deserialize)]
struct MoodRecord {
    key: String,
    positive: usize,
    negative: usize,
    mood: Option<f64>,
}

impl From<MoodTable> for MoodTableRepr {
    fn from(t: MoodTable) -> Self {
        MoodTableRepr {
            grouping: t.grouping,
            rows: t
                .sorted_rows()
                .into_iter()
                .map(|(key, r)| MoodRecord {
                    key: key.to_string(),
                    positive: r.positive,
                    negative: r.negative,
                    mood: r.mood,
                })
                .collect(),
        }
    }
}

impl TryFrom<MoodTableRepr> for MoodTable {
    type Error = String;

    fn try_from(r: MoodTableRepr) -> Result<Self, Self::Error> {
        let mut rows = BTreeMap::new();
        for rec in r.rows {
            let row = MoodRow::from_counts(rec.positive, rec.negative);
            if row.mood != rec.mood {
                return Err(format!("row {:?}: mood does not match counts", rec.key));
            }
            if rows.insert(rec.key.clone(), row).is_some() {
                return Err(format!("duplicate row {:?}", rec.key));
            }
        }
        Ok(MoodTable {
            grouping: r.grouping,
            rows,
        })
    }
}

impl MoodTable {
    /// Rows by descending mood, undefined moods last, ties broken by key.
    pub fn sorted_rows(&self) -> Vec<(&str, &MoodRow)> {
        let mut rows: Vec<(&str, &MoodRow)> =
            self.rows.iter().map(|(k, r)| (k.as_str(), r)).collect();
        rows.sort_by(|(ka, a), (kb, b)| match (a.mood, b.mood) {
            (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| ka.cmp(kb)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => ka.cmp(kb),
        });
        rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn group_key(post: &Post, grouping: Grouping) -> Option<String> {
    match grouping {
        Grouping::Topic => post.topic.clone(),
        Grouping::Month => post.timestamp.map(|t| format!("{:02}", t.month())),
        Grouping::YearMonth => post
            .timestamp
            .map(|t| format!("{:04}-{:02}", t.year(), t.month())),
    }
}

/// Groups `(post, predicted label)` pairs. Posts lacking the grouping
/// attribute are skipped; objective posts create a row but count toward
/// neither side.
pub fn mood_by(posts: &[(Post, Label)], grouping: Grouping) -> MoodTable {
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (post, label) in posts {
        let Some(key) = group_key(post, grouping) else {
            continue;
        };
        let entry = counts.entry(key).or_default();
        match label {
            Label::Positive => entry.0 += 1,
            Label::Negative => entry.1 += 1,
            _ => {}
        }
    }
    MoodTable {
        grouping,
        rows: counts
            .into_iter()
            .map(|(k, (p, n))| (k, MoodRow::from_counts(p, n)))
            .collect(),
    }
}

pub fn mood_by_topic(posts: &[(Post, Label)]) -> MoodTable {
    mood_by(posts, Grouping::Topic)
}

pub fn mood_by_month(posts: &[(Post, Label)]) -> MoodTable {
    mood_by(posts, Grouping::Month)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown format {s:?}")),
        }
    }
}

pub fn write_report<W: Write>(
    table: &MoodTable,
    format: ReportFormat,
    out: W,
) -> std::io::Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["key", "positive", "negative", "mood"])?;
            for (key, row) in table.sorted_rows() {
                w.write_record([
                    key.to_string(),
                    row.positive.to_string(),
                    row.negative.to_string(),
                    row.mood.map(|m| m.to_string()).unwrap_or_default(),
                ])?;
            }
            w.flush()
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, table)?;
            out.write_all(b"\n")
        }
    }
}

/// Writes the table to `path` atomically.
pub fn emit_report(
    table: &MoodTable,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<(), StatsError> {
    let path = path.as_ref();
    crate::io::write_atomic(path, |w| write_report(table, format, w)).map_err(|source| {
        StatsError::Io {
            path: path.display().to_string(),
            source,
        }
    })
}

pub fn parse_json_report(text: &str) -> Result<MoodTable, StatsError> {
    Ok(serde_json::from_str(text)?)
}
