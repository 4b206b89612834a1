//! Deterministic synthetic session generator with planted interest terms.
//!
//! Each session owns a set of interest stems (long fixations) and background
//! stems (short fixations). Queries, clicked-document titles and keywords
//! draw their terms from the interest stems, except for a configurable
//! fraction of slots filled with words that were never fixated. Keywords
//! shared by several clicked documents add a per-document fixation bonus.
//! Randomness comes from ChaCha8 seeded with `seed`; the log header names
//! the generator.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};
use thiserror::Error;

use crate::event::{encode_event, Aoi, DocumentClick, MetadataField, QueryEvent, SessionEvent, TermFixation};
use crate::textnorm::{normalize_term, NormalizationConfig, Stem};

pub const RNG_ID: &str = "ChaCha8";

const CONSONANTS: &[char] = &['b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v', 'z'];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];
const TITLE_FILLERS: &[&str] = &["und", "der", "die", "für", "the", "of", "and", "in"];
const MIN_SIM_STEM_LEN: usize = 5;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulator config: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("cannot read config {path}")]
    Read { path: String, source: io::Error },
    #[error("cannot parse config")]
    Parse(#[from] serde_json::Error),
    #[error("write failed")]
    Write(#[from] io::Error),
}

fn invalid(field: &str, reason: impl Into<String>) -> SimError {
    SimError::InvalidConfig {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Inclusive integer range, sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub min: u64,
    pub max: u64,
}

impl Range {
    pub const fn new(min: u64, max: u64) -> Self {
        Range { min, max }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> u64 {
        rng.random_range(self.min..=self.max)
    }

    pub fn mean(&self) -> f64 {
        (self.min + self.max) as f64 / 2.0
    }

    /// Probability generating function E[s^X].
    pub fn pgf(&self, s: f64) -> f64 {
        let n = (self.max - self.min + 1) as f64;
        (self.min..=self.max).map(|x| s.powi(x as i32)).sum::<f64>() / n
    }

    fn check(&self, field: &str, min_allowed: u64) -> Result<(), SimError> {
        if self.min > self.max {
            return Err(invalid(field, "min exceeds max"));
        }
        if self.min < min_allowed {
            return Err(invalid(field, format!("min must be at least {min_allowed}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub n_sessions: usize,
    pub vocab_size: usize,
    pub interest_terms_per_session: usize,
    pub background_terms_per_session: Range,
    /// Blacklisted interface terms fixated per session.
    pub ui_terms_per_session: Range,
    pub queries_per_session: Range,
    pub terms_per_query: Range,
    pub clicks_per_session: Range,
    /// Content words per title (stop words are added in between).
    pub title_len: Range,
    pub keywords_per_doc: Range,
    /// Probability that a query, title or keyword slot uses a never-fixated word.
    pub unfixated_rate: f64,
    /// Keywords are drawn uniformly from the first `keyword_pool` interest
    /// stems (all of them when 0).
    pub keyword_pool: usize,
    /// Probability that a session's mouse engages with its interest terms.
    pub mouse_engaged_prob: f64,
    pub interest_mean_ms: f64,
    pub interest_sd_ms: f64,
    pub background_mean_ms: f64,
    pub background_sd_ms: f64,
    pub overlap_effect_ms_per_doc: f64,
    pub session_minutes: Range,
    pub aoi_mix: BTreeMap<Aoi, f64>,
    pub field_mix: BTreeMap<MetadataField, f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            n_sessions: 1000,
            vocab_size: 2000,
            interest_terms_per_session: 10,
            background_terms_per_session: Range::new(8, 12),
            ui_terms_per_session: Range::new(0, 2),
            queries_per_session: Range::new(2, 5),
            terms_per_query: Range::new(1, 3),
            clicks_per_session: Range::new(1, 5),
            title_len: Range::new(2, 5),
            keywords_per_doc: Range::new(2, 4),
            unfixated_rate: 0.2,
            keyword_pool: 0,
            mouse_engaged_prob: 1.0,
            interest_mean_ms: 7060.0,
            interest_sd_ms: 1000.0,
            background_mean_ms: 4430.0,
            background_sd_ms: 1000.0,
            overlap_effect_ms_per_doc: 0.0,
            session_minutes: Range::new(5, 120),
            aoi_mix: [
                (Aoi::ResultList, 0.6),
                (Aoi::MetadataView, 0.2),
                (Aoi::Facets, 0.2),
            ]
            .into(),
            field_mix: [
                (MetadataField::Title, 0.4),
                (MetadataField::Keywords, 0.15),
                (MetadataField::Person, 0.1),
                (MetadataField::Snippet, 0.1),
                (MetadataField::Source, 0.05),
                (MetadataField::Category, 0.05),
                (MetadataField::None, 0.15),
            ]
            .into(),
        }
    }
}

fn check_mix<K>(field: &str, mix: &BTreeMap<K, f64>) -> Result<(), SimError> {
    if mix.is_empty() {
        return Err(invalid(field, "must not be empty"));
    }
    if mix.values().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(invalid(field, "probabilities must be finite and non-negative"));
    }
    let total: f64 = mix.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(field, format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

fn check_positive(field: &str, v: f64) -> Result<(), SimError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, "must be positive"))
    }
}

fn check_prob(field: &str, v: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(field, "must lie in [0, 1]"))
    }
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: SimConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_sessions == 0 {
            return Err(invalid("n_sessions", "must be positive"));
        }
        if self.interest_terms_per_session == 0 {
            return Err(invalid("interest_terms_per_session", "must be positive"));
        }
        self.background_terms_per_session.check("background_terms_per_session", 0)?;
        self.ui_terms_per_session.check("ui_terms_per_session", 0)?;
        self.queries_per_session.check("queries_per_session", 1)?;
        self.terms_per_query.check("terms_per_query", 1)?;
        self.clicks_per_session.check("clicks_per_session", 0)?;
        self.title_len.check("title_len", 1)?;
        self.keywords_per_doc.check("keywords_per_doc", 0)?;
        self.session_minutes.check("session_minutes", 1)?;
        let per_session = self.interest_terms_per_session as u64 + self.background_terms_per_session.max;
        if (self.vocab_size as u64) < 2 * per_session + 2 {
            return Err(invalid(
                "vocab_size",
                format!("must be at least {} for these session sizes", 2 * per_session + 2),
            ));
        }
        if self.keyword_pool > self.interest_terms_per_session {
            return Err(invalid("keyword_pool", "exceeds interest_terms_per_session"));
        }
        check_prob("unfixated_rate", self.unfixated_rate)?;
        if self.unfixated_rate >= 1.0 {
            return Err(invalid("unfixated_rate", "must be below 1"));
        }
        check_prob("mouse_engaged_prob", self.mouse_engaged_prob)?;
        check_positive("interest_mean_ms", self.interest_mean_ms)?;
        check_positive("interest_sd_ms", self.interest_sd_ms)?;
        check_positive("background_mean_ms", self.background_mean_ms)?;
        check_positive("background_sd_ms", self.background_sd_ms)?;
        if !(self.overlap_effect_ms_per_doc.is_finite() && self.overlap_effect_ms_per_doc >= 0.0) {
            return Err(invalid("overlap_effect_ms_per_doc", "must be non-negative"));
        }
        check_mix("aoi_mix", &self.aoi_mix)?;
        check_mix("field_mix", &self.field_mix)?;
        Ok(())
    }

    fn pool_size(&self) -> usize {
        if self.keyword_pool == 0 {
            self.interest_terms_per_session
        } else {
            self.keyword_pool
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTruth {
    /// Whether the session fixated its interest stems at all.
    pub engaged: bool,
    pub interest: BTreeSet<Stem>,
    /// Topical keyword stems of each clicked document.
    pub documents: BTreeMap<String, BTreeSet<Stem>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub rng: String,
    pub seed: u64,
    pub sessions: BTreeMap<String, SessionTruth>,
}

impl GroundTruth {
    /// Interest stems actually present in each session's fixations.
    pub fn fixated_interest(&self) -> BTreeMap<String, BTreeSet<Stem>> {
        self.sessions
            .iter()
            .map(|(id, t)| {
                let set = if t.engaged { t.interest.clone() } else { BTreeSet::new() };
                (id.clone(), set)
            })
            .collect()
    }
}

pub struct SimOutput {
    pub events: Vec<SessionEvent>,
    pub truth: GroundTruth,
}

/// Provenance recorded in the first line of a simulated log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogHeader {
    pub rng: String,
    pub seed: u64,
    pub sessions: usize,
}

impl LogHeader {
    /// Parses a line written by [`SimOutput::header`].
    pub fn parse(line: &str) -> Option<Self> {
        let rest = line.strip_prefix("# tmfix simulator ")?;
        let mut rng = None;
        let mut seed = None;
        let mut sessions = None;
        for kv in rest.split_whitespace() {
            match kv.split_once('=')? {
                ("rng", v) => rng = Some(v.to_string()),
                ("seed", v) => seed = v.parse().ok(),
                ("sessions", v) => sessions = v.parse().ok(),
                _ => {}
            }
        }
        Some(LogHeader {
            rng: rng?,
            seed: seed?,
            sessions: sessions?,
        })
    }
}

impl SimOutput {
    pub fn header(cfg: &SimConfig) -> String {
        format!(
            "# tmfix simulator rng={RNG_ID} seed={} sessions={}",
            cfg.seed, cfg.n_sessions
        )
    }

    /// JSONL log: header comment line, then one event per line.
    pub fn log_text(&self, cfg: &SimConfig) -> String {
        let mut out = Self::header(cfg);
        out.push('\n');
        for e in &self.events {
            out.push_str(&encode_event(e));
            out.push('\n');
        }
        out
    }

    pub fn truth_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.truth).expect("truth serializes");
        s.push('\n');
        s
    }

    /// Writes `log.jsonl` and `truth.json` into `dir`.
    pub fn write_to(&self, cfg: &SimConfig, dir: &Path) -> Result<(), SimError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("log.jsonl"), self.log_text(cfg))?;
        std::fs::write(dir.join("truth.json"), self.truth_json())?;
        Ok(())
    }
}

struct Word {
    surface: String,
    stem: Stem,
}

fn random_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(4..=5u32);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len() as u64) as usize]);
        w.push(VOWELS[rng.random_range(0..VOWELS.len() as u64) as usize]);
    }
    w
}

/// Vocabulary of invented words whose stems are long, unique, not stop or
/// blacklist words, and never substrings of one another.
fn vocabulary(cfg: &SimConfig, norm: &NormalizationConfig, rng: &mut ChaCha8Rng) -> Vec<Word> {
    let mut words: Vec<Word> = Vec::with_capacity(cfg.vocab_size);
    let mut seen: HashSet<String> = HashSet::new();
    // Every substring of every accepted stem.
    let mut covered: HashSet<String> = HashSet::new();
    while words.len() < cfg.vocab_size {
        let surface = random_word(rng);
        let Some(stem) = normalize_term(&surface, norm, true) else {
            continue;
        };
        let s = stem.as_str();
        if s.chars().count() < MIN_SIM_STEM_LEN
            || norm.blacklist.contains(&stem)
            || norm.blacklist.iter().any(|b| s.contains(b.as_str()))
            || covered.contains(s)
            || substrings(s).any(|sub| seen.contains(sub))
        {
            continue;
        }
        seen.insert(s.to_string());
        covered.extend(substrings(s).map(str::to_string));
        words.push(Word { surface, stem });
    }
    words
}

fn substrings(s: &str) -> impl Iterator<Item = &str> {
    let bounds: Vec<usize> = s.char_indices().map(|(i, _)| i).chain([s.len()]).collect();
    (0..bounds.len()).flat_map(move |i| {
        let bounds = bounds.clone();
        (i + 1..bounds.len()).map(move |j| (bounds[i], bounds[j]))
    })
    .map(move |(a, b)| &s[a..b])
}

/// `k` distinct indices from `0..n`, by partial Fisher-Yates.
fn choose_distinct(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i as u64..n as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

fn pick_weighted<K: Copy>(rng: &mut ChaCha8Rng, mix: &BTreeMap<K, f64>) -> K {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (k, p) in mix {
        acc += p;
        last = Some(*k);
        if u < acc {
            return *k;
        }
    }
    last.expect("mix is nonempty")
}

fn truncated_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> u64 {
    let dist = Normal::new(mean, sd).expect("validated parameters");
    loop {
        let x: f64 = dist.sample(rng);
        if x >= 1.0 {
            return x.round() as u64;
        }
    }
}

fn surface_form(rng: &mut ChaCha8Rng, word: &str) -> String {
    if rng.random_bool(0.5) {
        let mut c = word.chars();
        match c.next() {
            Some(f) => f.to_uppercase().chain(c).collect(),
            None => String::new(),
        }
    } else {
        word.to_string()
    }
}

struct Planned {
    first_ms: u64,
    last_ms: u64,
    total_ms: u64,
    stem: Stem,
    aoi: Aoi,
    field: MetadataField,
}

impl Planned {
    /// Cumulative state as of `ts`, if the stem had been fixated by then.
    fn snapshot(&self, ts: u64) -> Option<TermFixation> {
        if self.first_ms >= ts {
            return None;
        }
        let seen_until = self.last_ms.min(ts);
        let span = (self.last_ms - self.first_ms).max(1) as u128;
        let part = (self.total_ms as u128 * (seen_until - self.first_ms) as u128 / span) as u64;
        Some(TermFixation {
            stem: self.stem.clone(),
            total_ms: part.max(1),
            first_ms: self.first_ms,
            last_ms: seen_until,
            first_aoi: self.aoi,
            first_field: self.field,
        })
    }
}

pub fn generate(cfg: &SimConfig, norm: &NormalizationConfig) -> Result<SimOutput, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = vocabulary(cfg, norm, &mut rng);
    let ui_stems: Vec<Stem> = norm.blacklist.iter().cloned().collect();
    let mut events = Vec::new();
    let mut sessions = BTreeMap::new();
    let width = cfg.n_sessions.to_string().len();

    for si in 0..cfg.n_sessions {
        let sid = format!("s{si:0width$}");
        let engaged = rng.random_bool(cfg.mouse_engaged_prob);
        let n_bg = cfg.background_terms_per_session.sample(&mut rng) as usize;
        let n_int = cfg.interest_terms_per_session;
        let chosen = choose_distinct(&mut rng, vocab.len(), n_int + n_bg);
        let (interest, background) = chosen.split_at(n_int);
        let in_session: BTreeSet<usize> = chosen.iter().copied().collect();
        let unfixated = |rng: &mut ChaCha8Rng| loop {
            let i = rng.random_range(0..vocab.len() as u64) as usize;
            if !in_session.contains(&i) {
                return i;
            }
        };
        let pool = &interest[..cfg.pool_size()];

        let duration_ms = cfg.session_minutes.sample(&mut rng) * 60_000;
        let n_queries = cfg.queries_per_session.sample(&mut rng) as usize;
        let mut earlier: BTreeSet<u64> = BTreeSet::new();
        while earlier.len() < n_queries - 1 {
            earlier.insert(rng.random_range(0..duration_ms));
        }
        let mut query_ts: Vec<u64> = earlier.into_iter().collect();
        query_ts.push(duration_ms);

        let mut queries = Vec::with_capacity(n_queries);
        for &ts in &query_ts {
            let n_terms = cfg.terms_per_query.sample(&mut rng);
            let raw_terms = (0..n_terms)
                .map(|_| {
                    let w = if rng.random_bool(cfg.unfixated_rate) {
                        unfixated(&mut rng)
                    } else {
                        interest[rng.random_range(0..n_int as u64) as usize]
                    };
                    surface_form(&mut rng, &vocab[w].surface)
                })
                .collect();
            queries.push((ts, raw_terms));
        }

        let n_clicks = cfg.clicks_per_session.sample(&mut rng) as usize;
        let mut clicks = Vec::with_capacity(n_clicks);
        let mut doc_counts: BTreeMap<usize, usize> = BTreeMap::new();
        let mut documents = BTreeMap::new();
        for ci in 0..n_clicks {
            let doc_id = format!("{sid}-d{ci}");
            let ts = rng.random_range(query_ts[0]..=duration_ms);
            let mut title_words = Vec::new();
            for _ in 0..cfg.title_len.sample(&mut rng) {
                if !title_words.is_empty() && rng.random_bool(0.5) {
                    let f = TITLE_FILLERS[rng.random_range(0..TITLE_FILLERS.len() as u64) as usize];
                    title_words.push(f.to_string());
                }
                let w = if rng.random_bool(cfg.unfixated_rate) {
                    unfixated(&mut rng)
                } else {
                    interest[rng.random_range(0..n_int as u64) as usize]
                };
                title_words.push(surface_form(&mut rng, &vocab[w].surface));
            }
            let mut keywords: Vec<String> = Vec::new();
            let mut topical: BTreeSet<usize> = BTreeSet::new();
            for _ in 0..cfg.keywords_per_doc.sample(&mut rng) {
                if rng.random_bool(cfg.unfixated_rate) {
                    let n_tokens = rng.random_range(1..=2u64);
                    let words: Vec<String> = (0..n_tokens)
                        .map(|_| {
                            let w = unfixated(&mut rng);
                            surface_form(&mut rng, &vocab[w].surface)
                        })
                        .collect();
                    keywords.push(words.join(" "));
                } else {
                    let w = pool[rng.random_range(0..pool.len() as u64) as usize];
                    if topical.insert(w) {
                        keywords.push(surface_form(&mut rng, &vocab[w].surface));
                    }
                }
            }
            for w in &topical {
                *doc_counts.entry(*w).or_default() += 1;
            }
            documents.insert(
                doc_id.clone(),
                topical.iter().map(|w| vocab[*w].stem.clone()).collect(),
            );
            clicks.push(DocumentClick {
                session_id: sid.clone(),
                ts_ms: ts,
                doc_id,
                title: title_words.join(" "),
                keywords,
            });
        }

        let mut planned: Vec<Planned> = Vec::new();
        let mut plan = |rng: &mut ChaCha8Rng, stem: Stem, total: u64| {
            let total = total.min(duration_ms - 1);
            let first = rng.random_range(0..duration_ms - total);
            let last = rng.random_range(first + total..=duration_ms);
            planned.push(Planned {
                first_ms: first,
                last_ms: last,
                total_ms: total,
                stem,
                aoi: pick_weighted(rng, &cfg.aoi_mix),
                field: pick_weighted(rng, &cfg.field_mix),
            });
        };
        if engaged {
            for &w in interest {
                let extra_docs = doc_counts.get(&w).copied().unwrap_or(0).saturating_sub(1);
                let mean = cfg.interest_mean_ms + cfg.overlap_effect_ms_per_doc * extra_docs as f64;
                let total = truncated_normal(&mut rng, mean, cfg.interest_sd_ms);
                plan(&mut rng, vocab[w].stem.clone(), total);
            }
        }
        for &w in background {
            let total = truncated_normal(&mut rng, cfg.background_mean_ms, cfg.background_sd_ms);
            plan(&mut rng, vocab[w].stem.clone(), total);
        }
        let n_ui = (cfg.ui_terms_per_session.sample(&mut rng) as usize).min(ui_stems.len());
        for i in choose_distinct(&mut rng, ui_stems.len(), n_ui) {
            let total = truncated_normal(&mut rng, cfg.background_mean_ms, cfg.background_sd_ms);
            plan(&mut rng, ui_stems[i].clone(), total);
        }
        planned.sort_by(|a, b| a.stem.cmp(&b.stem));

        let mut session_events: Vec<SessionEvent> = queries
            .into_iter()
            .map(|(ts, raw_terms)| {
                SessionEvent::Query(QueryEvent {
                    session_id: sid.clone(),
                    ts_ms: ts,
                    raw_terms,
                    fixations: planned.iter().filter_map(|p| p.snapshot(ts)).collect(),
                })
            })
            .collect();
        session_events.extend(clicks.into_iter().map(SessionEvent::Click));
        session_events.sort_by_key(SessionEvent::ts_ms);
        events.extend(session_events);

        sessions.insert(
            sid,
            SessionTruth {
                engaged,
                interest: interest.iter().map(|w| vocab[*w].stem.clone()).collect(),
                documents,
            },
        );
    }

    Ok(SimOutput {
        events,
        truth: GroundTruth {
            rng: RNG_ID.into(),
            seed: cfg.seed,
            sessions,
        },
    })
}

/// Closed-form expectations derived from the generator's distributions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectations {
    /// P(session has at least one found search term).
    pub p_any_search_found: f64,
    /// P(session has at least one found stem of any kind).
    pub p_any_found: f64,
    /// P(a given interest stem is referenced by no needle), averaged over stems.
    pub p_interest_unreferenced: f64,
    pub found_mean_ms: f64,
    pub other_mean_ms: f64,
    /// Midpoint between the class means.
    pub midpoint_ms: f64,
    pub midpoint_error: ClassErrors,
    /// Population version of the default median-factor policy.
    pub median_policy: PolicyExpectation,
    /// Whether the overlap bonus was left out of the means above.
    pub overlap_bonus_ignored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassErrors {
    /// P(interest stem below the threshold).
    pub interest_miss: f64,
    /// P(background stem at or above the threshold).
    pub background_false_alarm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyExpectation {
    pub factor: f64,
    pub floor_ms: u64,
    pub threshold_ms: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn normal(mean: f64, sd: f64) -> NormalDist {
    NormalDist::new(mean, sd).expect("validated parameters")
}

impl SimConfig {
    /// Per-class error probabilities of a fixed extraction threshold.
    pub fn class_errors(&self, threshold_ms: f64) -> ClassErrors {
        ClassErrors {
            interest_miss: normal(self.interest_mean_ms, self.interest_sd_ms).cdf(threshold_ms),
            background_false_alarm: 1.0
                - normal(self.background_mean_ms, self.background_sd_ms).cdf(threshold_ms),
        }
    }

    /// Expected precision / recall for an engaged session at a threshold.
    pub fn threshold_quality(&self, threshold_ms: f64) -> (f64, f64, f64) {
        let e = self.class_errors(threshold_ms);
        let tp = self.interest_terms_per_session as f64 * (1.0 - e.interest_miss);
        let fp = self.background_terms_per_session.mean() * e.background_false_alarm;
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 1.0 };
        let recall = 1.0 - e.interest_miss;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        (precision, recall, f1)
    }

    /// Median of the engaged-session fixation-time mixture.
    pub fn mixture_median(&self) -> f64 {
        let wi = self.interest_terms_per_session as f64;
        let wb = self.background_terms_per_session.mean();
        let fi = normal(self.interest_mean_ms, self.interest_sd_ms);
        let fb = normal(self.background_mean_ms, self.background_sd_ms);
        let cdf = |x: f64| (wi * fi.cdf(x) + wb * fb.cdf(x)) / (wi + wb);
        let (mut lo, mut hi) = (
            self.background_mean_ms.min(self.interest_mean_ms) - 10.0 * self.background_sd_ms.max(self.interest_sd_ms),
            self.background_mean_ms.max(self.interest_mean_ms) + 10.0 * self.background_sd_ms.max(self.interest_sd_ms),
        );
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

pub fn analytic_expectations(cfg: &SimConfig) -> Result<Expectations, SimError> {
    cfg.validate()?;
    let r = cfg.unfixated_rate;
    let p_e = cfg.mouse_engaged_prob;
    let n_int = cfg.interest_terms_per_session as f64;
    let pool = cfg.pool_size() as f64;

    // No slot of any kind references an interest word.
    let no_search = cfg.queries_per_session.pgf(cfg.terms_per_query.pgf(r));
    let per_doc = cfg.title_len.pgf(r) * cfg.keywords_per_doc.pgf(r);
    let no_doc = cfg.clicks_per_session.pgf(per_doc);

    // A specific interest stem is skipped by a search/title slot with
    // probability z, and by a keyword slot with probability z_k.
    let z = 1.0 - (1.0 - r) / n_int;
    let unref = |z_k: f64| {
        cfg.queries_per_session.pgf(cfg.terms_per_query.pgf(z))
            * cfg
                .clicks_per_session
                .pgf(cfg.title_len.pgf(z) * cfg.keywords_per_doc.pgf(z_k))
    };
    let in_pool = unref(1.0 - (1.0 - r) / pool);
    let out_pool = unref(1.0);
    let p_unref = (pool * in_pool + (n_int - pool) * out_pool) / n_int;

    let bg = cfg.background_terms_per_session.mean();
    let unref_interest = p_e * n_int * p_unref;
    let other_mean = (bg * cfg.background_mean_ms + unref_interest * cfg.interest_mean_ms)
        / (bg + unref_interest);
    let midpoint = 0.5 * (cfg.interest_mean_ms + cfg.background_mean_ms);

    let factor = crate::extract::DEFAULT_MEDIAN_FACTOR;
    let floor_ms = crate::extract::DEFAULT_FLOOR_MS;
    let threshold = (factor * cfg.mixture_median()).max(floor_ms as f64);
    let (precision, recall, f1) = cfg.threshold_quality(threshold);

    Ok(Expectations {
        p_any_search_found: p_e * (1.0 - no_search),
        p_any_found: p_e * (1.0 - no_search * no_doc),
        p_interest_unreferenced: p_unref,
        found_mean_ms: cfg.interest_mean_ms,
        other_mean_ms: other_mean,
        midpoint_ms: midpoint,
        midpoint_error: cfg.class_errors(midpoint),
        median_policy: PolicyExpectation {
            factor,
            floor_ms,
            threshold_ms: threshold,
            precision,
            recall,
            f1,
        },
        overlap_bonus_ignored: cfg.overlap_effect_ms_per_doc > 0.0,
    })
}
