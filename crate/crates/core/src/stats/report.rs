//! Corpus-level report: counts, found rates, timing comparisons,
//! distributions and overlap timings, plus a human-readable rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use super::{overlap_timing_of, split_observations, BucketTiming, OverlapBucket, TimingComparison};
use crate::matching::{
    found_source_distribution, match_session, DocMatchResult, MatchKind, MatchReport, SessionMatches,
};
use crate::session::{first_fixation_distribution, Corpus, CorpusCounts, Distribution};
use crate::textnorm::NormalizationConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("corpus has no admitted sessions")]
    EmptyCorpus,
}

/// Found rates of one needle kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindRates {
    pub needles_searched: usize,
    pub needles_found: usize,
    /// Found needles over searched needles, pooled over the corpus.
    pub term_weighted_pct: Option<f64>,
    /// Mean per-session found percentage, over sessions with any needle.
    pub session_weighted_pct: Option<f64>,
    /// Sessions with at least one found needle, over all sessions.
    pub sessions_with_any_found_pct: f64,
}

/// Per-click title and keyword results, averaged over clicks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocRates {
    pub clicks: usize,
    pub mean_title_terms: Option<f64>,
    pub mean_title_terms_found: Option<f64>,
    /// Mean per-document found percentage over clicks with any title term.
    pub title_doc_weighted_pct: Option<f64>,
    pub mean_keywords: Option<f64>,
    pub mean_keywords_found: Option<f64>,
    /// Mean per-document found percentage over clicks with any keyword.
    pub keyword_doc_weighted_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub search_term: TimingComparison,
    pub title_term: TimingComparison,
    pub keyword: TimingComparison,
    pub combined: TimingComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub schema_version: u32,
    pub alpha: f64,
    pub counts: CorpusCounts,
    /// Last event minus first event, averaged over sessions.
    pub mean_session_duration_ms: f64,
    pub found_rates: BTreeMap<MatchKind, KindRates>,
    pub documents: DocRates,
    /// Combined metric: sessions with at least one found stem of any kind.
    pub pct_sessions_with_any_found: f64,
    /// Mean |found| over sessions with at least one found stem.
    pub mean_found_terms_per_session: Option<f64>,
    /// Mean |found| over all sessions.
    pub mean_found_terms_per_session_all: f64,
    pub timing: Timings,
    pub first_fixation: Option<Distribution>,
    /// First-fixation source of found search-term stems.
    pub found_source: Option<Distribution>,
    pub overlap_timing: Vec<OverlapBucket>,
}

impl CorpusReport {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn kind_rates(reports: &[MatchReport], kind: MatchKind) -> KindRates {
    let counts: Vec<_> = reports
        .iter()
        .map(|r| r.per_kind.get(&kind).copied().unwrap_or_default())
        .collect();
    let searched = counts.iter().map(|c| c.searched).sum();
    let found = counts.iter().map(|c| c.found).sum();
    let per_session: Vec<f64> = counts
        .iter()
        .filter_map(|c| pct(c.found, c.searched))
        .collect();
    let any = counts.iter().filter(|c| c.found > 0).count();
    KindRates {
        needles_searched: searched,
        needles_found: found,
        term_weighted_pct: pct(found, searched),
        session_weighted_pct: mean(&per_session),
        sessions_with_any_found_pct: pct(any, reports.len()).unwrap_or(0.0),
    }
}

fn pooled_timing(reports: &[MatchReport], c: &Corpus, alpha: f64) -> TimingComparison {
    let mut found = Vec::new();
    let mut other = Vec::new();
    for (r, s) in reports.iter().zip(&c.sessions) {
        let (f, o) = split_observations(r, s);
        found.extend(f);
        other.extend(o);
    }
    TimingComparison::from_observations(found, other, alpha)
}

pub fn corpus_report(
    c: &Corpus,
    cfg: &NormalizationConfig,
    alpha: f64,
) -> Result<CorpusReport, StatsError> {
    if c.sessions.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let n = c.sessions.len();
    let matches: Vec<SessionMatches> = c.sessions.iter().map(|s| match_session(s, cfg)).collect();
    let per_kind: BTreeMap<MatchKind, Vec<MatchReport>> = MatchKind::ALL
        .iter()
        .map(|&k| (k, matches.iter().map(|m| m.per_kind[&k].clone()).collect()))
        .collect();
    let combined: Vec<MatchReport> = matches.iter().map(|m| m.combined.clone()).collect();
    let docs: Vec<&DocMatchResult> = matches.iter().flat_map(|m| &m.documents).collect();

    let found_rates = MatchKind::ALL
        .iter()
        .map(|&k| (k, kind_rates(&per_kind[&k], k)))
        .collect();

    let doc_mean = |f: &dyn Fn(&DocMatchResult) -> usize| {
        mean(&docs.iter().map(|d| f(d) as f64).collect::<Vec<_>>())
    };
    let documents = DocRates {
        clicks: docs.len(),
        mean_title_terms: doc_mean(&|d| d.title_terms_total),
        mean_title_terms_found: doc_mean(&|d| d.title_terms_found),
        title_doc_weighted_pct: mean(
            &docs
                .iter()
                .filter_map(|d| pct(d.title_terms_found, d.title_terms_total))
                .collect::<Vec<_>>(),
        ),
        mean_keywords: doc_mean(&|d| d.keywords_total),
        mean_keywords_found: doc_mean(&|d| d.keywords_found),
        keyword_doc_weighted_pct: mean(
            &docs
                .iter()
                .filter_map(|d| pct(d.keywords_found, d.keywords_total))
                .collect::<Vec<_>>(),
        ),
    };

    let found_sizes: Vec<f64> = combined.iter().map(|r| r.found.len() as f64).collect();
    let with_any: Vec<f64> = found_sizes.iter().copied().filter(|&x| x > 0.0).collect();
    let durations: u128 = c.sessions.iter().map(|s| s.duration_ms() as u128).sum();

    Ok(CorpusReport {
        schema_version: SCHEMA_VERSION,
        alpha,
        counts: c.counts,
        mean_session_duration_ms: durations as f64 / n as f64,
        found_rates,
        documents,
        pct_sessions_with_any_found: pct(with_any.len(), n).unwrap_or(0.0),
        mean_found_terms_per_session: mean(&with_any),
        mean_found_terms_per_session_all: mean(&found_sizes).unwrap_or(0.0),
        timing: Timings {
            search_term: pooled_timing(&per_kind[&MatchKind::SearchTerm], c, alpha),
            title_term: pooled_timing(&per_kind[&MatchKind::TitleTerm], c, alpha),
            keyword: pooled_timing(&per_kind[&MatchKind::Keyword], c, alpha),
            combined: pooled_timing(&combined, c, alpha),
        },
        first_fixation: first_fixation_distribution(c).ok(),
        found_source: found_source_distribution(&per_kind[&MatchKind::SearchTerm], c).ok(),
        overlap_timing: overlap_timing_of(
            c.sessions.iter().zip(matches.iter().map(|m| m.keyword_overlap.as_slice())),
            cfg,
            alpha,
        ),
    })
}

fn secs(ms: Option<f64>) -> String {
    ms.map_or("-".into(), |v| format!("{:.2} s", v / 1000.0))
}

fn pct_str(p: Option<f64>) -> String {
    p.map_or("-".into(), |v| format!("{v:.2}%"))
}

fn num(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.2}"))
}

fn kind_label(k: MatchKind) -> &'static str {
    match k {
        MatchKind::SearchTerm => "search terms",
        MatchKind::TitleTerm => "title terms",
        MatchKind::Keyword => "keywords",
    }
}

fn timing_line(out: &mut String, label: &str, t: &TimingComparison) {
    let verdict = match (&t.anova, &t.anova_error) {
        (Some(a), _) => format!(
            "F({}, {}) = {:.2}, crit {:.2} at alpha {} -> {}",
            a.df_between,
            a.df_within,
            a.f_stat,
            a.f_critical,
            a.alpha,
            if a.significant { "significant" } else { "not significant" }
        ),
        (None, Some(e)) => format!("ANOVA n/a ({e})"),
        (None, None) => "ANOVA n/a".into(),
    };
    let _ = writeln!(
        out,
        "  {label:<13} found {} (n={})  other {} (n={})  {verdict}",
        secs(t.found.mean_ms),
        t.found.n,
        secs(t.other.mean_ms),
        t.other.n
    );
}

fn distribution_lines(out: &mut String, title: &str, d: &Option<Distribution>) {
    let _ = writeln!(out, "{title}");
    match d {
        None => {
            let _ = writeln!(out, "  (no observations)");
        }
        Some(d) => {
            let _ = writeln!(out, "  n = {}", d.n);
            for (a, f) in &d.aoi {
                let _ = writeln!(out, "  aoi   {:<17} {:>7.2}%", a.as_str(), 100.0 * f);
            }
            for (m, f) in &d.field {
                let _ = writeln!(out, "  field {:<17} {:>7.2}%", m.as_str(), 100.0 * f);
            }
        }
    }
}

/// Plain-text table of a report: seconds and percentages with 2 decimals.
pub fn render_table(r: &CorpusReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "sessions {}  searches {}  clicks {}  mean session duration {:.2} min",
        r.counts.sessions,
        r.counts.searches,
        r.counts.clicks,
        r.mean_session_duration_ms / 60_000.0
    );
    let _ = writeln!(out, "\nfound rates");
    for (k, rates) in &r.found_rates {
        let _ = writeln!(
            out,
            "  {:<13} {}/{} needles ({} term-weighted, {} session-weighted), sessions with any {}",
            kind_label(*k),
            rates.needles_found,
            rates.needles_searched,
            pct_str(rates.term_weighted_pct),
            pct_str(rates.session_weighted_pct),
            pct_str(Some(rates.sessions_with_any_found_pct)),
        );
    }
    let d = &r.documents;
    let _ = writeln!(
        out,
        "  per document: {} of {} title terms ({}), {} of {} keywords ({})",
        num(d.mean_title_terms_found),
        num(d.mean_title_terms),
        pct_str(d.title_doc_weighted_pct),
        num(d.mean_keywords_found),
        num(d.mean_keywords),
        pct_str(d.keyword_doc_weighted_pct),
    );
    let _ = writeln!(
        out,
        "\ncombined: {} found terms on average in {} of sessions ({} over all sessions)",
        num(r.mean_found_terms_per_session),
        pct_str(Some(r.pct_sessions_with_any_found)),
        num(Some(r.mean_found_terms_per_session_all)),
    );
    let _ = writeln!(out, "\nfixation time, found vs other");
    timing_line(&mut out, "search terms", &r.timing.search_term);
    timing_line(&mut out, "title terms", &r.timing.title_term);
    timing_line(&mut out, "keywords", &r.timing.keyword);
    timing_line(&mut out, "combined", &r.timing.combined);
    let _ = writeln!(out, "\nkeyword overlap across clicked documents");
    for b in &r.overlap_timing {
        match &b.timing {
            BucketTiming::Empty => {
                let _ = writeln!(out, "  {} docs: (empty)", b.doc_count);
            }
            BucketTiming::Measured(t) => timing_line(&mut out, &format!("{} docs", b.doc_count), t),
        }
    }
    out.push('\n');
    distribution_lines(&mut out, "first-time fixation", &r.first_fixation);
    out.push('\n');
    distribution_lines(&mut out, "source of found search terms", &r.found_source);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus_is_an_error() {
        let c = Corpus::default();
        assert_eq!(
            corpus_report(&c, &NormalizationConfig::default(), 0.01),
            Err(StatsError::EmptyCorpus)
        );
    }

    #[test]
    fn formatting_helpers() {
        assert_eq!(secs(Some(9110.0)), "9.11 s");
        assert_eq!(pct_str(Some(47.4149)), "47.41%");
        assert_eq!(pct_str(None), "-");
    }
}
