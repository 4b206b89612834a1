//! Text normalization shared by ingestion, matching and the simulator.
//!
//! Pipeline per token: Unicode NFC + full lowercase, stop-word removal against
//! the union of all configured profiles, optional minimum-length filter, then
//! stemming with the first profile's stemmer. Stems that collapse onto a stop
//! word are dropped as well.

mod english;
mod german;
mod snowball;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use icu_normalizer::ComposingNormalizerBorrowed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const EN_STOPWORDS: &str = include_str!("../../data/en.txt");
const DE_STOPWORDS: &str = include_str!("../../data/de.txt");
const DEFAULT_BLACKLIST: &str = include_str!("../../data/blacklist.txt");

#[derive(Debug, Error)]
pub enum TextnormError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid normalization config: {0}")]
    InvalidConfig(String),
}

/// Stemming algorithm variant attached to a language profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StemmerId {
    SnowballGerman,
    SnowballEnglish,
}

impl StemmerId {
    pub fn stem(self, folded: &str) -> String {
        match self {
            StemmerId::SnowballGerman => german::stem(folded),
            StemmerId::SnowballEnglish => english::stem(folded),
        }
    }
}

/// Case-folded, stemmed term. Serializes as a bare string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Stem(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StemError {
    #[error("stem is empty")]
    Empty,
    #[error("stem has surrounding whitespace")]
    Whitespace,
    #[error("stem is not lowercase")]
    NotLowercase,
    #[error("stem is not in composed (NFC) form")]
    NotComposed,
}

impl Stem {
    /// Validates an already-normalized term, e.g. one received over the wire.
    pub fn parse(value: &str) -> Result<Self, StemError> {
        if value.is_empty() {
            return Err(StemError::Empty);
        }
        if value.trim() != value {
            return Err(StemError::Whitespace);
        }
        if value.to_lowercase() != value {
            return Err(StemError::NotLowercase);
        }
        if !ComposingNormalizerBorrowed::new_nfc().is_normalized(value) {
            return Err(StemError::NotComposed);
        }
        Ok(Stem(value.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len_chars(&self) -> usize {
        self.0.chars().count()
    }
}

impl fmt::Display for Stem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Stem {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl<'de> Deserialize<'de> for Stem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Stem::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageProfile {
    pub id: String,
    pub stopwords: BTreeSet<String>,
    pub stemmer: StemmerId,
}

impl LanguageProfile {
    pub fn german() -> Self {
        LanguageProfile {
            id: "de".into(),
            stopwords: parse_word_list(DE_STOPWORDS).map(|w| fold(&w)).collect(),
            stemmer: StemmerId::SnowballGerman,
        }
    }

    pub fn english() -> Self {
        LanguageProfile {
            id: "en".into(),
            stopwords: parse_word_list(EN_STOPWORDS).map(|w| fold(&w)).collect(),
            stemmer: StemmerId::SnowballEnglish,
        }
    }

    pub fn from_file(
        id: impl Into<String>,
        stopwords: &Path,
        stemmer: StemmerId,
    ) -> Result<Self, TextnormError> {
        let text = read_text(stopwords)?;
        let profile = LanguageProfile {
            id: id.into(),
            stopwords: parse_word_list(&text).map(|w| fold(&w)).collect(),
            stemmer,
        };
        if profile.stopwords.is_empty() {
            return Err(TextnormError::InvalidConfig(format!(
                "stop-word list {} is empty",
                stopwords.display()
            )));
        }
        Ok(profile)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationConfig {
    /// Stop-word removal uses the union; stemming uses the first profile.
    pub profiles: Vec<LanguageProfile>,
    /// Search terms shorter than this many characters are dropped.
    pub min_search_term_len: usize,
    /// Apply the same length filter to title terms and keyword tokens.
    pub doc_needle_len_filter: bool,
    pub blacklist: BTreeSet<Stem>,
}

impl Default for NormalizationConfig {
    /// German first, English second, default interface blacklist.
    fn default() -> Self {
        let mut cfg = NormalizationConfig {
            profiles: vec![LanguageProfile::german(), LanguageProfile::english()],
            min_search_term_len: 3,
            doc_needle_len_filter: true,
            blacklist: BTreeSet::new(),
        };
        cfg.blacklist = cfg.normalize_list(parse_word_list(DEFAULT_BLACKLIST));
        cfg
    }
}

/// On-disk form of [`NormalizationConfig`]; relative paths resolve against
/// the directory holding the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationConfigFile {
    pub profiles: Vec<ProfileFile>,
    #[serde(default = "default_min_len")]
    pub min_search_term_len: usize,
    #[serde(default = "default_true")]
    pub doc_needle_len_filter: bool,
    #[serde(default)]
    pub blacklist: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub id: String,
    pub stopwords: PathBuf,
    pub stemmer: StemmerId,
}

fn default_min_len() -> usize {
    3
}

fn default_true() -> bool {
    true
}

impl NormalizationConfig {
    pub fn english_only() -> Self {
        NormalizationConfig {
            profiles: vec![LanguageProfile::english()],
            min_search_term_len: 3,
            doc_needle_len_filter: true,
            blacklist: BTreeSet::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, TextnormError> {
        let text = read_text(path)?;
        let file: NormalizationConfigFile = serde_json::from_str(&text)
            .map_err(|e| TextnormError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let profiles = file
            .profiles
            .iter()
            .map(|p| LanguageProfile::from_file(&p.id, &base.join(&p.stopwords), p.stemmer))
            .collect::<Result<Vec<_>, _>>()?;
        let mut cfg = NormalizationConfig {
            profiles,
            min_search_term_len: file.min_search_term_len,
            doc_needle_len_filter: file.doc_needle_len_filter,
            blacklist: BTreeSet::new(),
        };
        if let Some(bl) = &file.blacklist {
            let text = read_text(&base.join(bl))?;
            cfg.blacklist = cfg.normalize_list(parse_word_list(&text));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), TextnormError> {
        if self.profiles.is_empty() {
            return Err(TextnormError::InvalidConfig("no language profiles".into()));
        }
        if self.min_search_term_len < 1 {
            return Err(TextnormError::InvalidConfig(
                "min_search_term_len must be at least 1".into(),
            ));
        }
        if let Some(p) = self.profiles.iter().find(|p| p.stopwords.is_empty()) {
            return Err(TextnormError::InvalidConfig(format!(
                "profile {} has no stop words",
                p.id
            )));
        }
        Ok(())
    }

    pub fn is_stopword(&self, folded: &str) -> bool {
        self.profiles.iter().any(|p| p.stopwords.contains(folded))
    }

    /// Tokenize, then normalize every token; duplicates are kept.
    pub fn normalize_text(&self, text: &str, apply_len_filter: bool) -> Vec<Stem> {
        tokenize(text)
            .iter()
            .filter_map(|t| normalize_term(t, self, apply_len_filter))
            .collect()
    }

    /// Normalizes blacklist entries given in surface form.
    pub fn normalize_list(&self, entries: impl Iterator<Item = String>) -> BTreeSet<Stem> {
        entries
            .flat_map(|e| self.normalize_text(&e, false))
            .collect()
    }
}

/// Lines of a word-list file, trimmed, skipping blanks and `#` comments.
pub fn parse_word_list(text: &str) -> impl Iterator<Item = String> + '_ {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
}

fn read_text(path: &Path) -> Result<String, TextnormError> {
    std::fs::read_to_string(path).map_err(|source| TextnormError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Full Unicode lowercase, then NFC.
pub fn fold(token: &str) -> String {
    ComposingNormalizerBorrowed::new_nfc()
        .normalize(&token.to_lowercase())
        .into_owned()
}

/// Splits on everything that is not a letter or digit. Hyphens and
/// apostrophes separate tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let composed = ComposingNormalizerBorrowed::new_nfc().normalize(text);
    composed
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn normalize_term(
    token: &str,
    cfg: &NormalizationConfig,
    apply_len_filter: bool,
) -> Option<Stem> {
    let folded = fold(token.trim());
    if folded.is_empty() || cfg.is_stopword(&folded) {
        return None;
    }
    if apply_len_filter && folded.chars().count() < cfg.min_search_term_len {
        return None;
    }
    let stemmer = cfg.profiles.first()?.stemmer;
    let stemmed = stemmer.stem(&folded);
    if stemmed.is_empty() || cfg.is_stopword(&stemmed) {
        return None;
    }
    Some(Stem(stemmed))
}

pub fn apply_blacklist(terms: &[Stem], cfg: &NormalizationConfig) -> Vec<Stem> {
    terms
        .iter()
        .filter(|t| !cfg.blacklist.contains(*t))
        .cloned()
        .collect()
}
