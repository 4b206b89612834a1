//! One-way ANOVA, found-versus-other timing comparisons and the keyword
//! overlap timing analysis.
//!
//! The ANOVA observation unit is the individual term fixation (`total_ms`),
//! pooled over whatever scope the caller passes in.

mod report;

pub use report::{
    corpus_report, render_table, CorpusReport, DocRates, KindRates, StatsError, Timings, SCHEMA_VERSION,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};
use thiserror::Error;

use crate::matching::{keyword_overlap_detail, KeywordOverlap, MatchReport};
use crate::session::{Corpus, Session};
use crate::textnorm::{NormalizationConfig, Stem};

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnovaError {
    #[error("need at least two groups")]
    TooFewGroups,
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("no within-group degrees of freedom (N <= k)")]
    DegenerateDf,
    #[error("zero within-group variance and equal means; F is undefined")]
    NotSignificantDegenerate,
    #[error("zero within-group variance with differing means; F is infinite")]
    InfiniteF,
    #[error("observation is not finite")]
    NonFinite,
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
}

impl AnovaError {
    pub fn name(&self) -> &'static str {
        match self {
            AnovaError::TooFewGroups => "TooFewGroups",
            AnovaError::EmptyGroup(_) => "InsufficientData",
            AnovaError::DegenerateDf => "DegenerateDf",
            AnovaError::NotSignificantDegenerate => "NotSignificantDegenerate",
            AnovaError::InfiniteF => "InfiniteF",
            AnovaError::NonFinite => "NonFinite",
            AnovaError::InvalidAlpha(_) => "InvalidAlpha",
        }
    }
}

fn round4<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64((v * 1e4).round() / 1e4)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaResult {
    pub f_stat: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub alpha: f64,
    /// Upper-alpha quantile of F(df_between, df_within). Rounded to four
    /// decimals in JSON so reports do not depend on libm last-bit behavior.
    #[serde(serialize_with = "round4")]
    pub f_critical: f64,
    pub significant: bool,
}

/// Upper-`alpha` critical value of the F distribution, by bisection on the CDF.
pub fn f_critical(df_between: usize, df_within: usize, alpha: f64) -> f64 {
    let dist = FisherSnedecor::new(df_between as f64, df_within as f64)
        .expect("degrees of freedom are positive");
    let target = 1.0 - alpha;
    let mut hi = 1.0;
    while dist.cdf(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dist.cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

pub fn anova_one_way<G: AsRef<[f64]>>(groups: &[G], alpha: f64) -> Result<AnovaResult, AnovaError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnovaError::InvalidAlpha(alpha));
    }
    let k = groups.len();
    if k < 2 {
        return Err(AnovaError::TooFewGroups);
    }
    if let Some(i) = groups.iter().position(|g| g.as_ref().is_empty()) {
        return Err(AnovaError::EmptyGroup(i));
    }
    let all = || groups.iter().flat_map(|g| g.as_ref().iter().copied());
    if all().any(|x| !x.is_finite()) {
        return Err(AnovaError::NonFinite);
    }
    let n: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    if n <= k {
        return Err(AnovaError::DegenerateDf);
    }
    let grand = all().sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let g = g.as_ref();
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    // Rounding noise of the group means on constant data.
    let max_abs = all().fold(0.0f64, |a, x| a.max(x.abs()));
    let noise = 16.0 * n as f64 * (f64::EPSILON * max_abs).powi(2);
    if ss_within <= noise {
        return Err(if ss_between <= noise {
            AnovaError::NotSignificantDegenerate
        } else {
            AnovaError::InfiniteF
        });
    }
    let df_between = k - 1;
    let df_within = n - k;
    let f_stat = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    let crit = f_critical(df_between, df_within, alpha);
    Ok(AnovaResult {
        f_stat,
        df_between,
        df_within,
        alpha,
        f_critical: crit,
        significant: f_stat > crit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupTiming {
    pub label: String,
    pub n: usize,
    /// `None` for an empty group.
    pub mean_ms: Option<f64>,
    #[serde(skip)]
    pub observations: Vec<u64>,
}

impl GroupTiming {
    pub fn new(label: impl Into<String>, observations: Vec<u64>) -> Self {
        let n = observations.len();
        let sum: u128 = observations.iter().map(|&x| x as u128).sum();
        GroupTiming {
            label: label.into(),
            n,
            mean_ms: (n > 0).then(|| sum as f64 / n as f64),
            observations,
        }
    }

    fn as_f64(&self) -> Vec<f64> {
        self.observations.iter().map(|&x| x as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingComparison {
    pub found: GroupTiming,
    pub other: GroupTiming,
    pub anova: Option<AnovaResult>,
    /// Error name when the ANOVA could not be computed.
    pub anova_error: Option<String>,
}

impl TimingComparison {
    pub fn from_groups(found: GroupTiming, other: GroupTiming, alpha: f64) -> Self {
        let (anova, anova_error) = match anova_one_way(&[found.as_f64(), other.as_f64()], alpha) {
            Ok(a) => (Some(a), None),
            Err(e) => (None, Some(e.name().to_string())),
        };
        TimingComparison {
            found,
            other,
            anova,
            anova_error,
        }
    }

    pub fn from_observations(found: Vec<u64>, other: Vec<u64>, alpha: f64) -> Self {
        Self::from_groups(GroupTiming::new("found", found), GroupTiming::new("other", other), alpha)
    }
}

/// Found-versus-other `total_ms` observations of one session's report.
pub fn split_observations(report: &MatchReport, session: &Session) -> (Vec<u64>, Vec<u64>) {
    let pick = |set: &BTreeSet<Stem>| {
        set.iter()
            .filter_map(|s| session.fixations.get(s).map(|f| f.total_ms))
            .collect()
    };
    (pick(&report.found), pick(&report.other))
}

/// Timing comparison over a single session's report.
pub fn timing_comparison(report: &MatchReport, session: &Session, alpha: f64) -> TimingComparison {
    let (found, other) = split_observations(report, session);
    TimingComparison::from_observations(found, other, alpha)
}

pub const OVERLAP_BUCKETS: std::ops::RangeInclusive<usize> = 2..=5;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BucketTiming {
    Empty,
    Measured(Box<TimingComparison>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapBucket {
    pub doc_count: usize,
    #[serde(flatten)]
    pub timing: BucketTiming,
}

/// Bucket of each fixation stem: the largest document count among the found
/// keywords that hit it. Stems hit by no found keyword are absent.
pub fn overlap_buckets(s: &Session, cfg: &NormalizationConfig) -> BTreeMap<Stem, usize> {
    buckets_of(&keyword_overlap_detail(s, cfg))
}

fn buckets_of(detail: &[KeywordOverlap]) -> BTreeMap<Stem, usize> {
    let mut out: BTreeMap<Stem, usize> = BTreeMap::new();
    for k in detail.iter().filter(|k| k.found) {
        for stem in &k.fixation_stems {
            let e = out.entry(stem.clone()).or_insert(0);
            *e = (*e).max(k.doc_count);
        }
    }
    out
}

/// For every k in 2..=5: fixation times of found keyword stems whose keyword
/// occurs in exactly k distinct clicked documents, against the remaining
/// cleaned fixations of the sessions contributing to that bucket.
pub fn overlap_timing(c: &Corpus, cfg: &NormalizationConfig, alpha: f64) -> Vec<OverlapBucket> {
    let details: Vec<Vec<KeywordOverlap>> = c.sessions.iter().map(|s| keyword_overlap_detail(s, cfg)).collect();
    overlap_timing_of(c.sessions.iter().zip(details.iter().map(Vec::as_slice)), cfg, alpha)
}

/// [`overlap_timing`] over precomputed keyword overlap of each session.
pub(crate) fn overlap_timing_of<'a>(
    sessions: impl IntoIterator<Item = (&'a Session, &'a [KeywordOverlap])>,
    cfg: &NormalizationConfig,
    alpha: f64,
) -> Vec<OverlapBucket> {
    let mut keyword: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    let mut other: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    for (s, detail) in sessions {
        let buckets = buckets_of(detail);
        for k in OVERLAP_BUCKETS {
            if !buckets.values().any(|&b| b == k) {
                continue;
            }
            for f in s.cleaned_fixations(cfg) {
                let target = if buckets.get(&f.stem) == Some(&k) {
                    &mut keyword
                } else {
                    &mut other
                };
                target.entry(k).or_default().push(f.total_ms);
            }
        }
    }
    OVERLAP_BUCKETS
        .map(|k| {
            let timing = match keyword.remove(&k) {
                None => BucketTiming::Empty,
                Some(obs) => BucketTiming::Measured(Box::new(TimingComparison::from_groups(
                    GroupTiming::new("keyword", obs),
                    GroupTiming::new("other", other.remove(&k).unwrap_or_default()),
                    alpha,
                ))),
            };
            OverlapBucket { doc_count: k, timing }
        })
        .collect()
}
