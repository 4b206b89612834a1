//! Interest-term extraction from accumulated fixation time alone, and its
//! set-based evaluation against known interest terms.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::{Corpus, Session};
use crate::textnorm::{NormalizationConfig, Stem};

pub const DEFAULT_FLOOR_MS: u64 = 5000;
pub const DEFAULT_MEDIAN_FACTOR: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("session has no fixations after blacklist cleaning")]
    NoFixations,
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdRule {
    Absolute { absolute_ms: u64 },
    MedianFactor { factor: f64 },
    TopK { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    #[serde(flatten)]
    pub rule: ThresholdRule,
    pub floor_ms: u64,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy {
            rule: ThresholdRule::MedianFactor {
                factor: DEFAULT_MEDIAN_FACTOR,
            },
            floor_ms: DEFAULT_FLOOR_MS,
        }
    }
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<(), ExtractError> {
        match self.rule {
            ThresholdRule::MedianFactor { factor } if !(factor.is_finite() && factor > 1.0) => Err(
                ExtractError::InvalidPolicy(format!("factor must be finite and > 1, got {factor}")),
            ),
            ThresholdRule::TopK { k: 0 } => {
                Err(ExtractError::InvalidPolicy("k must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterestTerm {
    pub stem: Stem,
    pub total_ms: u64,
    pub rank: usize,
    #[serde(skip)]
    pub score: f64,
}

/// Median of a nonempty slice; mean of the two middle values for even length.
pub fn median(values: &[u64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0
    }
}

pub fn extract(
    s: &Session,
    policy: &ThresholdPolicy,
    cfg: &NormalizationConfig,
) -> Result<Vec<InterestTerm>, ExtractError> {
    policy.validate()?;
    let mut candidates: Vec<_> = s.cleaned_fixations(cfg).collect();
    if candidates.is_empty() {
        return Err(ExtractError::NoFixations);
    }
    candidates.sort_by(|a, b| {
        b.total_ms
            .cmp(&a.total_ms)
            .then(a.first_ms.cmp(&b.first_ms))
            .then_with(|| a.stem.cmp(&b.stem))
    });
    let passing: Vec<_> = match policy.rule {
        ThresholdRule::Absolute { absolute_ms } => candidates
            .into_iter()
            .filter(|f| f.total_ms >= absolute_ms)
            .collect(),
        ThresholdRule::MedianFactor { factor } => {
            let totals: Vec<u64> = candidates.iter().map(|f| f.total_ms).collect();
            let cut = factor * median(&totals);
            candidates
                .into_iter()
                .filter(|f| f.total_ms as f64 >= cut)
                .collect()
        }
        ThresholdRule::TopK { k } => candidates.into_iter().take(k).collect(),
    };
    Ok(passing
        .into_iter()
        .filter(|f| f.total_ms >= policy.floor_ms)
        .enumerate()
        .map(|(i, f)| InterestTerm {
            stem: f.stem.clone(),
            total_ms: f.total_ms,
            rank: i + 1,
            score: f.total_ms as f64,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractionResult {
    pub session_id: String,
    pub policy: ThresholdPolicy,
    pub terms: Vec<InterestTerm>,
}

/// Like [`extract`], but a session without usable fixations yields an empty
/// term list instead of an error.
pub fn extraction_result(
    s: &Session,
    policy: &ThresholdPolicy,
    cfg: &NormalizationConfig,
) -> Result<ExtractionResult, ExtractError> {
    let terms = match extract(s, policy, cfg) {
        Ok(t) => t,
        Err(ExtractError::NoFixations) => Vec::new(),
        Err(e) => return Err(e),
    };
    Ok(ExtractionResult {
        session_id: s.session_id.clone(),
        policy: policy.clone(),
        terms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionScore {
    pub session_id: String,
    pub extracted: usize,
    pub truth: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Truth set was empty; recall is 1 by convention.
    pub empty_truth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub policy: ThresholdPolicy,
    pub sessions: Vec<SessionScore>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    /// Mean of per-session F1.
    pub macro_f1: f64,
}

/// Set-based precision, recall and F1 of one session.
pub fn score_sets(extracted: &BTreeSet<Stem>, truth: &BTreeSet<Stem>) -> (f64, f64, f64) {
    let hit = extracted.intersection(truth).count() as f64;
    let precision = if extracted.is_empty() {
        if truth.is_empty() { 1.0 } else { 0.0 }
    } else {
        hit / extracted.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        hit / truth.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f1)
}

/// Evaluates every session named in `truth`.
pub fn evaluate_extraction(
    c: &Corpus,
    policy: &ThresholdPolicy,
    cfg: &NormalizationConfig,
    truth: &BTreeMap<String, BTreeSet<Stem>>,
) -> Result<EvaluationReport, ExtractError> {
    policy.validate()?;
    let mut sessions = Vec::with_capacity(truth.len());
    for (id, expected) in truth {
        let s = c
            .session(id)
            .ok_or_else(|| ExtractError::UnknownSession(id.clone()))?;
        let got: BTreeSet<Stem> = extraction_result(s, policy, cfg)?
            .terms
            .into_iter()
            .map(|t| t.stem)
            .collect();
        let (precision, recall, f1) = score_sets(&got, expected);
        sessions.push(SessionScore {
            session_id: id.clone(),
            extracted: got.len(),
            truth: expected.len(),
            precision,
            recall,
            f1,
            empty_truth: expected.is_empty(),
        });
    }
    let avg = |f: fn(&SessionScore) -> f64| {
        if sessions.is_empty() {
            0.0
        } else {
            sessions.iter().map(f).sum::<f64>() / sessions.len() as f64
        }
    };
    Ok(EvaluationReport {
        policy: policy.clone(),
        macro_precision: avg(|s| s.precision),
        macro_recall: avg(|s| s.recall),
        macro_f1: avg(|s| s.f1),
        sessions,
    })
}
