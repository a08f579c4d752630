//! Validation and filtering of normalized page-creation records.
//!
//! Input is UTF-8 text with one JSON object per line:
//!
//! ```text
//! {"edition":"enwiki","wikidata_id":"Q2462783","created_at":1070560507,"creator_is_bot":false,"topics":{"STEM.STEM*":0.96}}
//! ```
//!
//! Unknown keys are ignored. Blank lines are skipped and not counted.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ids::{Edition, ItemId, UnixSeconds};

/// Topic label to relevance score in `[0, 1]`.
pub type TopicScores = BTreeMap<String, f64>;

/// Earliest creation time accepted (mid-January 2001).
pub const MIN_CREATION_TIME: UnixSeconds = 979_000_000;
/// Creation times are 32-bit Unix timestamps.
pub const MAX_CREATION_TIME: UnixSeconds = i32::MAX as UnixSeconds;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PageCreationRecord {
    pub edition: Edition,
    pub wikidata_id: ItemId,
    pub created_at: UnixSeconds,
    pub creator_is_bot: bool,
    pub topics: TopicScores,
}

impl PageCreationRecord {
    /// Serialize in the ingest line format (no trailing newline).
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RecordError {
    #[error("malformed line: {0}")]
    MalformedLine(String),
    #[error("invalid field `{field}`: {value}")]
    InvalidField { field: &'static str, value: String },
}

fn invalid(field: &'static str, value: impl ToString) -> RecordError {
    RecordError::InvalidField {
        field,
        value: value.to_string(),
    }
}

/// Parse and validate a single input line.
pub fn parse_record(line: &str) -> Result<PageCreationRecord, RecordError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| RecordError::MalformedLine(e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(RecordError::MalformedLine("expected a JSON object".into()));
    };
    let field = |name: &'static str| obj.get(name).ok_or_else(|| invalid(name, "<missing>"));

    let edition = match field("edition")? {
        Value::String(s) => Edition::new(s.as_str()).map_err(|_| invalid("edition", s))?,
        other => return Err(invalid("edition", other)),
    };
    let wikidata_id = match field("wikidata_id")? {
        Value::String(s) => s.parse::<ItemId>().map_err(|_| invalid("wikidata_id", s))?,
        other => return Err(invalid("wikidata_id", other)),
    };
    let created = field("created_at")?;
    let created_at = created
        .as_i64()
        .filter(|t| (MIN_CREATION_TIME..=MAX_CREATION_TIME).contains(t))
        .ok_or_else(|| invalid("created_at", created))?;
    let creator_is_bot = match field("creator_is_bot")? {
        Value::Bool(b) => *b,
        other => return Err(invalid("creator_is_bot", other)),
    };
    let topics = match field("topics")? {
        Value::Object(map) => {
            let mut topics = TopicScores::new();
            for (label, score) in map {
                match score.as_f64() {
                    Some(s) if (0.0..=1.0).contains(&s) => {
                        topics.insert(label.clone(), s);
                    }
                    _ => return Err(invalid("topics", format!("{label}: {score}"))),
                }
            }
            topics
        }
        other => return Err(invalid("topics", other)),
    };

    Ok(PageCreationRecord {
        edition,
        wikidata_id,
        created_at,
        creator_is_bot,
        topics,
    })
}

fn default_true() -> bool {
    true
}
fn default_suffix() -> String {
    "wiki".into()
}
fn default_threshold() -> f64 {
    0.5
}
fn default_reject_limit() -> f64 {
    0.01
}
fn default_excluded() -> BTreeSet<String> {
    // Wikimedia projects whose database names end in "wiki" but are not Wikipedias.
    [
        "commonswiki",
        "foundationwiki",
        "incubatorwiki",
        "mediawikiwiki",
        "metawiki",
        "outreachwiki",
        "sourceswiki",
        "specieswiki",
        "testwiki",
        "test2wiki",
        "wikidatawiki",
        "wikimaniawiki",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    #[serde(default = "default_true")]
    pub drop_bots: bool,
    /// Project suffix identifying a Wikipedia database name.
    #[serde(default = "default_suffix")]
    pub allowed_project_suffix: String,
    /// Codes ending in the suffix that are nevertheless not Wikipedias.
    #[serde(default = "default_excluded")]
    pub excluded_editions: BTreeSet<String>,
    /// Topics with a score at least this high are kept.
    #[serde(default = "default_threshold")]
    pub topic_threshold: f64,
    /// Inclusive lower bound on `created_at`.
    #[serde(default)]
    pub min_timestamp: Option<UnixSeconds>,
    /// Exclusive upper bound on `created_at`.
    #[serde(default)]
    pub max_timestamp: Option<UnixSeconds>,
    /// Abort a stream whose rejected-line share exceeds this fraction.
    #[serde(default = "default_reject_limit")]
    pub max_rejected_fraction: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            drop_bots: true,
            allowed_project_suffix: default_suffix(),
            excluded_editions: default_excluded(),
            topic_threshold: default_threshold(),
            min_timestamp: None,
            max_timestamp: None,
            max_rejected_fraction: default_reject_limit(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("invalid ingest configuration: {0}")]
pub struct ConfigError(pub String);

impl IngestConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.topic_threshold) {
            return Err(ConfigError(format!(
                "topic_threshold {} outside [0, 1]",
                self.topic_threshold
            )));
        }
        if let (Some(lo), Some(hi)) = (self.min_timestamp, self.max_timestamp) {
            if lo >= hi {
                return Err(ConfigError(format!(
                    "min_timestamp {lo} must be below max_timestamp {hi}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.max_rejected_fraction) {
            return Err(ConfigError(format!(
                "max_rejected_fraction {} outside [0, 1]",
                self.max_rejected_fraction
            )));
        }
        if self.allowed_project_suffix.is_empty() {
            return Err(ConfigError("allowed_project_suffix is empty".into()));
        }
        Ok(())
    }

    pub fn is_wikipedia(&self, edition: &Edition) -> bool {
        let code = edition.as_str();
        code.len() > self.allowed_project_suffix.len()
            && code.ends_with(&self.allowed_project_suffix)
            && !self.excluded_editions.contains(code)
    }
}

/// Whether a valid record survives the bot, project and time filters.
pub fn accept_record(record: &PageCreationRecord, config: &IngestConfig) -> bool {
    if config.drop_bots && record.creator_is_bot {
        return false;
    }
    if !config.is_wikipedia(&record.edition) {
        return false;
    }
    if config.min_timestamp.is_some_and(|lo| record.created_at < lo) {
        return false;
    }
    if config.max_timestamp.is_some_and(|hi| record.created_at >= hi) {
        return false;
    }
    true
}

/// Keep the topics whose score is at least `threshold`.
pub fn threshold_topics(topics: &TopicScores, threshold: f64) -> TopicScores {
    topics
        .iter()
        .filter(|(_, &score)| score >= threshold)
        .map(|(label, &score)| (label.clone(), score))
        .collect()
}

/// A rejected input line, kept for diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Rejection {
    pub line: usize,
    pub error: RecordError,
}

const KEPT_REJECTIONS: usize = 16;

/// Line counts for one input stream. Shard summaries merge with `+=`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IngestSummary {
    /// Lines that parsed into valid records.
    pub parsed: u64,
    /// Parsed records that passed every filter.
    pub accepted: u64,
    /// Parsed records removed by a filter.
    pub filtered: u64,
    /// Lines that failed to parse or validate.
    pub rejected: u64,
    #[serde(skip)]
    pub first_rejections: Vec<Rejection>,
}

impl IngestSummary {
    pub fn lines(&self) -> u64 {
        self.parsed + self.rejected
    }

    pub fn rejected_fraction(&self) -> f64 {
        match self.lines() {
            0 => 0.0,
            n => self.rejected as f64 / n as f64,
        }
    }
}

impl AddAssign for IngestSummary {
    fn add_assign(&mut self, other: Self) {
        self.parsed += other.parsed;
        self.accepted += other.accepted;
        self.filtered += other.filtered;
        self.rejected += other.rejected;
        let room = KEPT_REJECTIONS.saturating_sub(self.first_rejections.len());
        self.first_rejections
            .extend(other.first_rejections.into_iter().take(room));
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
    #[error(
        "aborted: {rejected} of {lines} lines rejected (limit {limit}); first rejection: {first}"
    )]
    TooManyRejected {
        rejected: u64,
        lines: u64,
        limit: f64,
        first: String,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Streaming reader over line-delimited records.
///
/// Yields accepted records with topics thresholded, in input order. Call
/// [`RecordStream::finish`] once drained to obtain the summary and apply the
/// rejection limit.
pub struct RecordStream<'c, R> {
    lines: std::io::Lines<R>,
    config: &'c IngestConfig,
    line_no: usize,
    summary: IngestSummary,
}

impl<'c, R: BufRead> RecordStream<'c, R> {
    pub fn new(source: R, config: &'c IngestConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self {
            lines: source.lines(),
            config,
            line_no: 0,
            summary: IngestSummary::default(),
        })
    }

    pub fn summary(&self) -> &IngestSummary {
        &self.summary
    }

    pub fn finish(self) -> Result<IngestSummary, IngestError> {
        let summary = self.summary;
        if summary.rejected_fraction() > self.config.max_rejected_fraction {
            let first = summary
                .first_rejections
                .first()
                .map(|r| format!("line {}: {}", r.line, r.error))
                .unwrap_or_default();
            return Err(IngestError::TooManyRejected {
                rejected: summary.rejected,
                lines: summary.lines(),
                limit: self.config.max_rejected_fraction,
                first,
            });
        }
        Ok(summary)
    }
}

impl<R: BufRead> Iterator for RecordStream<'_, R> {
    type Item = Result<PageCreationRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            match parse_record(&line) {
                Ok(mut record) => {
                    self.summary.parsed += 1;
                    if accept_record(&record, self.config) {
                        self.summary.accepted += 1;
                        record.topics = threshold_topics(&record.topics, self.config.topic_threshold);
                        return Some(Ok(record));
                    }
                    self.summary.filtered += 1;
                }
                Err(error) => {
                    self.summary.rejected += 1;
                    if self.summary.first_rejections.len() < KEPT_REJECTIONS {
                        self.summary.first_rejections.push(Rejection {
                            line: self.line_no,
                            error,
                        });
                    }
                }
            }
        }
    }
}

/// Read a whole stream into memory.
pub fn read_records<R: BufRead>(
    source: R,
    config: &IngestConfig,
) -> Result<(Vec<PageCreationRecord>, IngestSummary), IngestError> {
    let mut stream = RecordStream::new(source, config)?;
    let records = stream.by_ref().collect::<Result<Vec<_>, _>>()?;
    let summary = stream.finish()?;
    Ok((records, summary))
}
