//! Per-session analysis document: match summary, found-versus-other timing
//! and extracted interest terms. The ingest service and the command line
//! both render it through [`SessionAnalysis::to_json`].

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::extract::{extraction_result, ExtractError, ExtractionResult, ThresholdPolicy};
use crate::matching::{combined_report, match_documents, DocMatchResult, KindCounts, MatchHit, MatchKind};
use crate::session::Session;
use crate::stats::{timing_comparison, TimingComparison};
use crate::textnorm::{NormalizationConfig, Stem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionAnalysis {
    pub schema_version: u32,
    pub session_id: String,
    pub queries: usize,
    pub clicks: usize,
    pub duration_ms: u64,
    /// Blacklist-cleaned fixation count.
    pub fixations: usize,
    pub search_stems: BTreeSet<Stem>,
    pub per_kind: BTreeMap<MatchKind, KindCounts>,
    pub found: BTreeSet<Stem>,
    pub other: BTreeSet<Stem>,
    pub hits: Vec<MatchHit>,
    pub documents: Vec<DocMatchResult>,
    pub timing: TimingComparison,
    pub interest: ExtractionResult,
}

impl SessionAnalysis {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("analysis serializes");
        s.push('\n');
        s
    }
}

pub fn analyze_session(
    s: &Session,
    cfg: &NormalizationConfig,
    policy: &ThresholdPolicy,
    alpha: f64,
) -> Result<SessionAnalysis, ExtractError> {
    let report = combined_report(s, cfg);
    let timing = timing_comparison(&report, s, alpha);
    Ok(SessionAnalysis {
        schema_version: crate::stats::SCHEMA_VERSION,
        session_id: s.session_id.clone(),
        queries: s.query_events.len(),
        clicks: s.clicks.len(),
        duration_ms: s.duration_ms(),
        fixations: report.found.len() + report.other.len(),
        search_stems: s.distinct_search_stems.clone(),
        per_kind: report.per_kind,
        found: report.found,
        other: report.other,
        hits: report.hits,
        documents: match_documents(s, cfg),
        timing,
        interest: extraction_result(s, policy, cfg)?,
    })
}
