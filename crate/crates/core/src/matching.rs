//! Locating search terms, clicked-document title terms and keywords inside a
//! session's fixated stems.
//!
//! A needle matches a fixation stem when it occurs in it as a contiguous
//! substring (equality included); the reverse direction is never a match.
//! Fixations are blacklist-cleaned before any comparison.

use std::collections::{BTreeMap, BTreeSet};

use aho_corasick::AhoCorasick;
use serde::Serialize;
use thiserror::Error;

use crate::event::DocumentClick;
use crate::session::{Corpus, Distribution, Session};
use crate::textnorm::{normalize_term, tokenize, NormalizationConfig, Stem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("no found stems to summarize")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    SearchTerm,
    TitleTerm,
    Keyword,
}

impl MatchKind {
    pub const ALL: [MatchKind; 3] = [MatchKind::SearchTerm, MatchKind::TitleTerm, MatchKind::Keyword];
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MatchHit {
    pub kind: MatchKind,
    pub doc_id: Option<String>,
    pub needle: Stem,
    pub fixation_stem: Stem,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KindCounts {
    pub searched: usize,
    pub found: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchReport {
    pub session_id: String,
    /// Sorted by (kind, doc_id, needle, fixation_stem), no duplicates.
    pub hits: Vec<MatchHit>,
    pub found: BTreeSet<Stem>,
    pub other: BTreeSet<Stem>,
    pub per_kind: BTreeMap<MatchKind, KindCounts>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocMatchResult {
    pub doc_id: String,
    pub title_terms_total: usize,
    pub title_terms_found: usize,
    pub keywords_total: usize,
    pub keywords_found: usize,
}

/// For each needle, the fixation stems that contain it.
pub fn containment(
    needles: &BTreeSet<Stem>,
    fixations: &BTreeSet<Stem>,
) -> BTreeMap<Stem, BTreeSet<Stem>> {
    let mut out: BTreeMap<Stem, BTreeSet<Stem>> = BTreeMap::new();
    if needles.is_empty() || fixations.is_empty() {
        return out;
    }
    let patterns: Vec<&Stem> = needles.iter().collect();
    let ac = AhoCorasick::new(patterns.iter().map(|s| s.as_str()))
        .expect("stems always build an automaton");
    for fix in fixations {
        for m in ac.find_overlapping_iter(fix.as_str()) {
            out.entry(patterns[m.pattern().as_usize()].clone())
                .or_default()
                .insert(fix.clone());
        }
    }
    out
}

/// Blacklist-cleaned fixation stems of a session.
pub fn cleaned_stems(s: &Session, cfg: &NormalizationConfig) -> BTreeSet<Stem> {
    s.cleaned_fixations(cfg).map(|f| f.stem.clone()).collect()
}

/// Distinct normalized title needles of a clicked document.
pub fn title_needles(d: &DocumentClick, cfg: &NormalizationConfig) -> BTreeSet<Stem> {
    cfg.normalize_text(&d.title, cfg.doc_needle_len_filter)
        .into_iter()
        .collect()
}

/// Normalized token tuple of one keyword, duplicates removed in order. Empty
/// when every token is a stop word or filtered out.
pub fn keyword_tokens(keyword: &str, cfg: &NormalizationConfig) -> Vec<Stem> {
    let mut out: Vec<Stem> = Vec::new();
    for t in tokenize(keyword) {
        if let Some(s) = normalize_term(&t, cfg, cfg.doc_needle_len_filter) {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

/// Distinct normalized keywords of a clicked document.
pub fn doc_keywords(d: &DocumentClick, cfg: &NormalizationConfig) -> BTreeSet<Vec<Stem>> {
    d.keywords.iter().map(|k| keyword_tokens(k, cfg)).collect()
}

/// Normalized needles of one clicked document.
struct DocNeedles<'a> {
    click: &'a DocumentClick,
    title: BTreeSet<Stem>,
    keywords: BTreeSet<Vec<Stem>>,
}

impl<'a> DocNeedles<'a> {
    fn new(click: &'a DocumentClick, cfg: &NormalizationConfig) -> Self {
        DocNeedles {
            click,
            title: title_needles(click, cfg),
            keywords: doc_keywords(click, cfg),
        }
    }
}

/// Needles of every kind normalized once, with a containment index over the
/// session's cleaned fixations. Reports for any subset of kinds read from it.
struct Matcher<'a> {
    session: &'a Session,
    fixations: BTreeSet<Stem>,
    docs: Vec<DocNeedles<'a>>,
    index: BTreeMap<Stem, BTreeSet<Stem>>,
}

impl<'a> Matcher<'a> {
    fn new(session: &'a Session, cfg: &NormalizationConfig) -> Self {
        let docs: Vec<DocNeedles<'a>> = session.clicks.iter().map(|d| DocNeedles::new(d, cfg)).collect();
        Self::with_docs(session, cfg, docs)
    }

    fn with_docs(session: &'a Session, cfg: &NormalizationConfig, docs: Vec<DocNeedles<'a>>) -> Self {
        let fixations = cleaned_stems(session, cfg);
        let mut needles: BTreeSet<Stem> = session.distinct_search_stems.clone();
        for d in &docs {
            needles.extend(d.title.iter().cloned());
            needles.extend(d.keywords.iter().flatten().cloned());
        }
        let index = containment(&needles, &fixations);
        Matcher {
            session,
            fixations,
            docs,
            index,
        }
    }

    fn hits_of(&self, needle: &Stem) -> Option<&BTreeSet<Stem>> {
        self.index.get(needle)
    }

    fn push_hits(&self, out: &mut Vec<MatchHit>, kind: MatchKind, doc: Option<&str>, needle: &Stem) {
        for fix in self.hits_of(needle).into_iter().flatten() {
            out.push(MatchHit {
                kind,
                doc_id: doc.map(str::to_string),
                needle: needle.clone(),
                fixation_stem: fix.clone(),
            });
        }
    }

    fn search(&self, hits: &mut Vec<MatchHit>) -> KindCounts {
        let mut counts = KindCounts::default();
        for needle in &self.session.distinct_search_stems {
            counts.searched += 1;
            if self.hits_of(needle).is_some() {
                counts.found += 1;
                self.push_hits(hits, MatchKind::SearchTerm, None, needle);
            }
        }
        counts
    }

    fn document(&self, d: &DocNeedles<'_>, hits: &mut Vec<MatchHit>, kinds: &[MatchKind]) -> DocMatchResult {
        let doc_id = &d.click.doc_id;
        let mut r = DocMatchResult {
            doc_id: doc_id.clone(),
            title_terms_total: 0,
            title_terms_found: 0,
            keywords_total: 0,
            keywords_found: 0,
        };
        if kinds.contains(&MatchKind::TitleTerm) {
            for needle in &d.title {
                r.title_terms_total += 1;
                if self.hits_of(needle).is_some() {
                    r.title_terms_found += 1;
                    self.push_hits(hits, MatchKind::TitleTerm, Some(doc_id), needle);
                }
            }
        }
        if kinds.contains(&MatchKind::Keyword) {
            for tokens in &d.keywords {
                r.keywords_total += 1;
                let found = !tokens.is_empty() && tokens.iter().all(|t| self.hits_of(t).is_some());
                if found {
                    r.keywords_found += 1;
                    for t in tokens {
                        self.push_hits(hits, MatchKind::Keyword, Some(doc_id), t);
                    }
                }
            }
        }
        r
    }

    fn report(&self, kinds: &[MatchKind]) -> (MatchReport, Vec<DocMatchResult>) {
        let mut hits = Vec::new();
        let mut per_kind = BTreeMap::new();
        if kinds.contains(&MatchKind::SearchTerm) {
            per_kind.insert(MatchKind::SearchTerm, self.search(&mut hits));
        }
        let docs: Vec<DocMatchResult> = self.docs.iter().map(|d| self.document(d, &mut hits, kinds)).collect();
        if kinds.contains(&MatchKind::TitleTerm) {
            per_kind.insert(
                MatchKind::TitleTerm,
                KindCounts {
                    searched: docs.iter().map(|d| d.title_terms_total).sum(),
                    found: docs.iter().map(|d| d.title_terms_found).sum(),
                },
            );
        }
        if kinds.contains(&MatchKind::Keyword) {
            per_kind.insert(
                MatchKind::Keyword,
                KindCounts {
                    searched: docs.iter().map(|d| d.keywords_total).sum(),
                    found: docs.iter().map(|d| d.keywords_found).sum(),
                },
            );
        }
        hits.sort();
        hits.dedup();
        let found: BTreeSet<Stem> = hits.iter().map(|h| h.fixation_stem.clone()).collect();
        let other = self.fixations.difference(&found).cloned().collect();
        let report = MatchReport {
            session_id: self.session.session_id.clone(),
            hits,
            found,
            other,
            per_kind,
        };
        (report, docs)
    }

    fn keyword_overlap(&self) -> Vec<KeywordOverlap> {
        let mut docs: BTreeMap<&Vec<Stem>, BTreeSet<&str>> = BTreeMap::new();
        for d in &self.docs {
            for k in d.keywords.iter().filter(|k| !k.is_empty()) {
                docs.entry(k).or_default().insert(&d.click.doc_id);
            }
        }
        docs.into_iter()
            .map(|(keyword, ids)| {
                let found = keyword.iter().all(|t| self.hits_of(t).is_some());
                let fixation_stems = if found {
                    keyword
                        .iter()
                        .flat_map(|t| self.hits_of(t).into_iter().flatten().cloned())
                        .collect()
                } else {
                    BTreeSet::new()
                };
                KeywordOverlap {
                    keyword: keyword.clone(),
                    doc_count: ids.len(),
                    found,
                    fixation_stems,
                }
            })
            .collect()
    }
}

/// Report restricted to the given needle kinds.
pub fn report_for_kinds(s: &Session, cfg: &NormalizationConfig, kinds: &[MatchKind]) -> MatchReport {
    Matcher::new(s, cfg).report(kinds).0
}

pub fn match_search_terms(s: &Session, cfg: &NormalizationConfig) -> MatchReport {
    report_for_kinds(s, cfg, &[MatchKind::SearchTerm])
}

/// Title and keyword results of one document, which need not be among the
/// session's clicks.
pub fn match_document(s: &Session, d: &DocumentClick, cfg: &NormalizationConfig) -> DocMatchResult {
    let m = Matcher::with_docs(s, cfg, vec![DocNeedles::new(d, cfg)]);
    m.document(&m.docs[0], &mut Vec::new(), &[MatchKind::TitleTerm, MatchKind::Keyword])
}

/// Per-click document results for every click of the session.
pub fn match_documents(s: &Session, cfg: &NormalizationConfig) -> Vec<DocMatchResult> {
    Matcher::new(s, cfg).report(&[MatchKind::TitleTerm, MatchKind::Keyword]).1
}

/// Search terms, title terms and keywords combined.
pub fn combined_report(s: &Session, cfg: &NormalizationConfig) -> MatchReport {
    report_for_kinds(s, cfg, &MatchKind::ALL)
}

/// Every match view of one session, normalizing its needles once.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionMatches {
    /// Single-kind reports.
    pub per_kind: BTreeMap<MatchKind, MatchReport>,
    pub combined: MatchReport,
    pub documents: Vec<DocMatchResult>,
    pub keyword_overlap: Vec<KeywordOverlap>,
}

pub fn match_session(s: &Session, cfg: &NormalizationConfig) -> SessionMatches {
    let m = Matcher::new(s, cfg);
    let (combined, documents) = m.report(&MatchKind::ALL);
    SessionMatches {
        per_kind: MatchKind::ALL.iter().map(|&k| (k, m.report(&[k]).0)).collect(),
        combined,
        documents,
        keyword_overlap: m.keyword_overlap(),
    }
}

/// First-fixation AOI / field distribution over the found stems of the
/// given reports.
pub fn found_source_distribution(
    reports: &[MatchReport],
    c: &Corpus,
) -> Result<Distribution, MatchError> {
    let fixations = reports.iter().flat_map(|r| {
        let session = c.session(&r.session_id);
        r.found
            .iter()
            .filter_map(move |stem| session.and_then(|s| s.fixations.get(stem)))
    });
    Distribution::from_fixations(fixations).ok_or(MatchError::EmptyInput)
}

/// One normalized keyword of a session with its cross-document overlap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordOverlap {
    pub keyword: Vec<Stem>,
    /// Distinct clicked documents (by doc id) listing the keyword.
    pub doc_count: usize,
    /// Whether every token is contained in some fixation stem.
    pub found: bool,
    /// Fixation stems hit by the keyword's tokens; empty unless `found`.
    pub fixation_stems: BTreeSet<Stem>,
}

pub fn keyword_overlap_detail(s: &Session, cfg: &NormalizationConfig) -> Vec<KeywordOverlap> {
    Matcher::new(s, cfg).keyword_overlap()
}

/// Keyword token tuple to the number of distinct clicked documents carrying it.
pub fn keyword_overlap(s: &Session, cfg: &NormalizationConfig) -> BTreeMap<Vec<Stem>, usize> {
    keyword_overlap_detail(s, cfg)
        .into_iter()
        .map(|k| (k.keyword, k.doc_count))
        .collect()
}
