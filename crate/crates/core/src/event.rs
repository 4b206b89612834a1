//! Wire and persistence format for fixation batches and document clicks.
//!
//! One event per line (JSONL). Key order is fixed: `type`, `session_id`,
//! `ts_ms`, then the payload fields. Decoding ignores unknown keys but
//! rejects anything outside the closed AOI / metadata-field sets.

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::textnorm::Stem;

/// Page region in which a fixation was recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aoi {
    ResultList,
    TermRecommender,
    Facets,
    MetadataView,
    Abstract,
    References,
    Citations,
    SimilarEntries,
}

impl Aoi {
    pub const ALL: [Aoi; 8] = [
        Aoi::ResultList,
        Aoi::TermRecommender,
        Aoi::Facets,
        Aoi::MetadataView,
        Aoi::Abstract,
        Aoi::References,
        Aoi::Citations,
        Aoi::SimilarEntries,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Aoi::ResultList => "result_list",
            Aoi::TermRecommender => "term_recommender",
            Aoi::Facets => "facets",
            Aoi::MetadataView => "metadata_view",
            Aoi::Abstract => "abstract",
            Aoi::References => "references",
            Aoi::Citations => "citations",
            Aoi::SimilarEntries => "similar_entries",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Aoi::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for Aoi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Bibliographic sub-region inside an AOI; `None` where the AOI has none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetadataField {
    Title,
    Person,
    Source,
    Snippet,
    Category,
    Keywords,
    None,
}

impl MetadataField {
    pub const ALL: [MetadataField; 7] = [
        MetadataField::Title,
        MetadataField::Person,
        MetadataField::Source,
        MetadataField::Snippet,
        MetadataField::Category,
        MetadataField::Keywords,
        MetadataField::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetadataField::Title => "title",
            MetadataField::Person => "person",
            MetadataField::Source => "source",
            MetadataField::Snippet => "snippet",
            MetadataField::Category => "category",
            MetadataField::Keywords => "keywords",
            MetadataField::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        MetadataField::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

impl fmt::Display for MetadataField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accumulated mouse-fixation state of one stem within a session.
/// Times are session-relative milliseconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermFixation {
    pub stem: Stem,
    pub total_ms: u64,
    pub first_ms: u64,
    pub last_ms: u64,
    pub first_aoi: Aoi,
    pub first_field: MetadataField,
}

/// A search submit carrying the client's cumulative fixation snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryEvent {
    pub session_id: String,
    pub ts_ms: u64,
    pub raw_terms: Vec<String>,
    pub fixations: Vec<TermFixation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentClick {
    pub session_id: String,
    pub ts_ms: u64,
    pub doc_id: String,
    pub title: String,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type")]
pub enum SessionEvent {
    #[serde(rename = "query")]
    Query(QueryEvent),
    #[serde(rename = "click")]
    Click(DocumentClick),
}

impl SessionEvent {
    pub fn session_id(&self) -> &str {
        match self {
            SessionEvent::Query(q) => &q.session_id,
            SessionEvent::Click(c) => &c.session_id,
        }
    }

    pub fn ts_ms(&self) -> u64 {
        match self {
            SessionEvent::Query(q) => q.ts_ms,
            SessionEvent::Click(c) => c.ts_ms,
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.session_id().is_empty() {
            return Err(DecodeError::violation("session_id", "must not be empty"));
        }
        match self {
            SessionEvent::Query(q) => {
                if q.raw_terms.is_empty() {
                    return Err(DecodeError::violation("raw_terms", "must not be empty"));
                }
                let mut seen = BTreeSet::new();
                for (i, f) in q.fixations.iter().enumerate() {
                    let at = |name: &str| format!("fixations[{i}].{name}");
                    if f.total_ms == 0 {
                        return Err(DecodeError::violation(&at("total_ms"), "must be positive"));
                    }
                    if f.first_ms > f.last_ms {
                        return Err(DecodeError::violation(
                            &at("last_ms"),
                            "must not precede first_ms",
                        ));
                    }
                    if f.total_ms > f.last_ms {
                        return Err(DecodeError::violation(&at("total_ms"), "exceeds last_ms"));
                    }
                    if !seen.insert(&f.stem) {
                        return Err(DecodeError::violation(&at("stem"), "duplicate stem in batch"));
                    }
                }
            }
            SessionEvent::Click(c) => {
                if c.doc_id.is_empty() {
                    return Err(DecodeError::violation("doc_id", "must not be empty"));
                }
                if c.title.is_empty() && c.keywords.is_empty() {
                    return Err(DecodeError::violation(
                        "title",
                        "may only be empty when keywords are present",
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("unknown event type {0:?}")]
    UnknownType(String),
    #[error("invalid field {field}: {reason}")]
    InvariantViolation { field: String, reason: String },
}

impl DecodeError {
    fn violation(field: &str, reason: &str) -> Self {
        DecodeError::InvariantViolation {
            field: field.to_string(),
            reason: reason.to_string(),
        }
    }

    /// Short stable name, used in ingest acknowledgements.
    pub fn name(&self) -> &'static str {
        match self {
            DecodeError::MalformedJson(_) => "MalformedJson",
            DecodeError::UnknownType(_) => "UnknownType",
            DecodeError::InvariantViolation { .. } => "InvariantViolation",
        }
    }
}

/// Single-line JSON encoding of a valid event.
pub fn encode_event(e: &SessionEvent) -> String {
    serde_json::to_string(e).expect("event types always serialize")
}

pub fn decode_event(line: &str) -> Result<SessionEvent, DecodeError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| DecodeError::MalformedJson(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| DecodeError::MalformedJson("expected a JSON object".into()))?;
    let ty = match obj.get("type") {
        Some(Value::String(t)) => t.as_str(),
        Some(_) => return Err(DecodeError::violation("type", "must be a string")),
        None => return Err(DecodeError::violation("type", "missing")),
    };
    let event = match ty {
        "query" => SessionEvent::Query(QueryEvent {
            session_id: string(obj, "session_id", "session_id")?,
            ts_ms: uint(obj, "ts_ms", "ts_ms")?,
            raw_terms: string_list(obj, "raw_terms")?,
            fixations: array(obj, "fixations", "fixations")?
                .iter()
                .enumerate()
                .map(|(i, v)| fixation(v, i))
                .collect::<Result<_, _>>()?,
        }),
        "click" => SessionEvent::Click(DocumentClick {
            session_id: string(obj, "session_id", "session_id")?,
            ts_ms: uint(obj, "ts_ms", "ts_ms")?,
            doc_id: string(obj, "doc_id", "doc_id")?,
            title: string(obj, "title", "title")?,
            keywords: string_list(obj, "keywords")?,
        }),
        other => return Err(DecodeError::UnknownType(other.to_string())),
    };
    event.validate()?;
    Ok(event)
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, DecodeError> {
    obj.get(key)
        .ok_or_else(|| DecodeError::violation(path, "missing"))
}

fn string(obj: &Map<String, Value>, key: &str, path: &str) -> Result<String, DecodeError> {
    field(obj, key, path)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| DecodeError::violation(path, "must be a string"))
}

fn uint(obj: &Map<String, Value>, key: &str, path: &str) -> Result<u64, DecodeError> {
    field(obj, key, path)?
        .as_u64()
        .ok_or_else(|| DecodeError::violation(path, "must be a non-negative integer"))
}

fn array<'a>(
    obj: &'a Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<&'a Vec<Value>, DecodeError> {
    field(obj, key, path)?
        .as_array()
        .ok_or_else(|| DecodeError::violation(path, "must be an array"))
}

fn string_list(obj: &Map<String, Value>, key: &str) -> Result<Vec<String>, DecodeError> {
    array(obj, key, key)?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| DecodeError::violation(&format!("{key}[{i}]"), "must be a string"))
        })
        .collect()
}

fn fixation(v: &Value, i: usize) -> Result<TermFixation, DecodeError> {
    let at = |name: &str| format!("fixations[{i}].{name}");
    let obj = v
        .as_object()
        .ok_or_else(|| DecodeError::violation(&format!("fixations[{i}]"), "must be an object"))?;
    let stem_raw = string(obj, "stem", &at("stem"))?;
    let stem = Stem::parse(&stem_raw)
        .map_err(|e| DecodeError::violation(&at("stem"), &e.to_string()))?;
    let aoi_raw = string(obj, "first_aoi", &at("first_aoi"))?;
    let first_aoi = Aoi::parse(&aoi_raw).ok_or_else(|| {
        DecodeError::violation(&at("first_aoi"), &format!("unknown AOI {aoi_raw:?}"))
    })?;
    let field_raw = string(obj, "first_field", &at("first_field"))?;
    let first_field = MetadataField::parse(&field_raw).ok_or_else(|| {
        DecodeError::violation(&at("first_field"), &format!("unknown field {field_raw:?}"))
    })?;
    Ok(TermFixation {
        stem,
        total_ms: uint(obj, "total_ms", &at("total_ms"))?,
        first_ms: uint(obj, "first_ms", &at("first_ms"))?,
        last_ms: uint(obj, "last_ms", &at("last_ms"))?,
        first_aoi,
        first_field,
    })
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {error}")]
    Decode { line: usize, error: DecodeError },
    #[error("read error")]
    Io(#[from] std::io::Error),
}

/// Is this log line something other than an event (blank or `#` comment)?
pub fn is_non_event_line(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// Decodes an event log, yielding `(line_number, event)` with 1-based line
/// numbers. Blank lines and `#` comment lines are skipped.
pub fn read_log<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, SessionEvent), LogError>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line_no = i + 1;
            match line {
                Err(e) => Some(Err(LogError::Io(e))),
                Ok(l) if is_non_event_line(&l) => None,
                Ok(l) => Some(
                    decode_event(l.trim_end_matches('\r'))
                        .map(|e| (line_no, e))
                        .map_err(|error| LogError::Decode { line: line_no, error }),
                ),
            }
        })
}

/// Reads a whole log, failing on the first undecodable line.
pub fn read_log_strict<R: BufRead>(reader: R) -> Result<Vec<SessionEvent>, LogError> {
    read_log(reader).map(|r| r.map(|(_, e)| e)).collect()
}
