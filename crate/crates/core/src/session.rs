//! Session reconstruction from event streams.
//!
//! Events are grouped by client session id and ordered by `ts_ms` (arrival
//! order breaks ties). Fixation snapshots are cumulative, so the merge is
//! last-write-wins per stem; the first-fixation attributes are sticky and
//! keep the earliest observation.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::event::{Aoi, DocumentClick, MetadataField, QueryEvent, SessionEvent, TermFixation};
use crate::textnorm::{normalize_term, tokenize, NormalizationConfig, Stem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("corpus has no sessions or no fixations")]
    EmptyCorpus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub session_id: String,
    pub query_events: Vec<QueryEvent>,
    pub clicks: Vec<DocumentClick>,
    pub fixations: BTreeMap<Stem, TermFixation>,
    pub distinct_search_stems: BTreeSet<Stem>,
}

impl Session {
    /// Last event timestamp minus first event timestamp.
    pub fn duration_ms(&self) -> u64 {
        let ts = self
            .query_events
            .iter()
            .map(|q| q.ts_ms)
            .chain(self.clicks.iter().map(|c| c.ts_ms));
        let (lo, hi) = ts.fold((u64::MAX, 0), |(lo, hi), t| (lo.min(t), hi.max(t)));
        hi.saturating_sub(lo)
    }

    /// Fixations whose stem is not on the UI blacklist.
    pub fn cleaned_fixations<'a>(
        &'a self,
        cfg: &'a NormalizationConfig,
    ) -> impl Iterator<Item = &'a TermFixation> + 'a {
        self.fixations
            .values()
            .filter(move |f| !cfg.blacklist.contains(&f.stem))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorpusCounts {
    pub sessions: usize,
    pub searches: usize,
    pub clicks: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    /// Admitted sessions, ordered by session id.
    pub sessions: Vec<Session>,
    pub counts: CorpusCounts,
}

impl Corpus {
    pub fn session(&self, id: &str) -> Option<&Session> {
        self.sessions
            .binary_search_by(|s| s.session_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.sessions[i])
    }
}

/// Distinct normalized search stems of a set of queries (length filter on).
pub fn search_stems<'a>(
    queries: impl IntoIterator<Item = &'a QueryEvent>,
    cfg: &NormalizationConfig,
) -> BTreeSet<Stem> {
    queries
        .into_iter()
        .flat_map(|q| q.raw_terms.iter())
        .flat_map(|raw| tokenize(raw))
        .filter_map(|t| normalize_term(&t, cfg, true))
        .collect()
}

fn merge_snapshot(into: &mut BTreeMap<Stem, TermFixation>, snapshot: &[TermFixation]) {
    for f in snapshot {
        match into.get_mut(&f.stem) {
            None => {
                into.insert(f.stem.clone(), f.clone());
            }
            Some(cur) => {
                cur.total_ms = f.total_ms;
                cur.last_ms = f.last_ms;
                if f.first_ms < cur.first_ms {
                    cur.first_ms = f.first_ms;
                    cur.first_aoi = f.first_aoi;
                    cur.first_field = f.first_field;
                }
            }
        }
    }
}

/// Builds one session from its events (any order). Returns `None` when the
/// session has no query and is therefore not admitted.
pub fn build_session(
    session_id: &str,
    events: impl IntoIterator<Item = SessionEvent>,
    cfg: &NormalizationConfig,
) -> Option<Session> {
    let mut events: Vec<SessionEvent> = events.into_iter().collect();
    events.sort_by_key(SessionEvent::ts_ms);
    let mut query_events = Vec::new();
    let mut clicks = Vec::new();
    for e in events {
        match e {
            SessionEvent::Query(q) => query_events.push(q),
            SessionEvent::Click(c) => clicks.push(c),
        }
    }
    if query_events.is_empty() {
        return None;
    }
    let mut fixations = BTreeMap::new();
    for q in &query_events {
        merge_snapshot(&mut fixations, &q.fixations);
    }
    let distinct_search_stems = search_stems(&query_events, cfg);
    Some(Session {
        session_id: session_id.to_string(),
        query_events,
        clicks,
        fixations,
        distinct_search_stems,
    })
}

pub fn build_sessions(
    events: impl IntoIterator<Item = SessionEvent>,
    cfg: &NormalizationConfig,
) -> Corpus {
    let mut groups: BTreeMap<String, Vec<SessionEvent>> = BTreeMap::new();
    for e in events {
        groups.entry(e.session_id().to_string()).or_default().push(e);
    }
    let sessions: Vec<Session> = groups
        .into_iter()
        .filter_map(|(id, evs)| build_session(&id, evs, cfg))
        .collect();
    let counts = CorpusCounts {
        sessions: sessions.len(),
        searches: sessions.iter().map(|s| s.query_events.len()).sum(),
        clicks: sessions.iter().map(|s| s.clicks.len()).sum(),
    };
    Corpus { sessions, counts }
}

/// Fractions of fixations by first AOI and by first metadata field. Every
/// enum variant is present, zero-valued when unobserved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    pub n: usize,
    pub aoi: BTreeMap<Aoi, f64>,
    pub field: BTreeMap<MetadataField, f64>,
}

impl Distribution {
    /// `None` when the iterator is empty.
    pub fn from_fixations<'a>(fixations: impl IntoIterator<Item = &'a TermFixation>) -> Option<Self> {
        let mut aoi: BTreeMap<Aoi, usize> = Aoi::ALL.iter().map(|a| (*a, 0)).collect();
        let mut field: BTreeMap<MetadataField, usize> =
            MetadataField::ALL.iter().map(|f| (*f, 0)).collect();
        let mut n = 0;
        for f in fixations {
            n += 1;
            *aoi.get_mut(&f.first_aoi).expect("all variants seeded") += 1;
            *field.get_mut(&f.first_field).expect("all variants seeded") += 1;
        }
        if n == 0 {
            return None;
        }
        let frac = |c: usize| c as f64 / n as f64;
        Some(Distribution {
            n,
            aoi: aoi.into_iter().map(|(k, c)| (k, frac(c))).collect(),
            field: field.into_iter().map(|(k, c)| (k, frac(c))).collect(),
        })
    }
}

/// First-fixation AOI / field distribution over every fixation of the corpus.
pub fn first_fixation_distribution(c: &Corpus) -> Result<Distribution, SessionError> {
    Distribution::from_fixations(c.sessions.iter().flat_map(|s| s.fixations.values()))
        .ok_or(SessionError::EmptyCorpus)
}
