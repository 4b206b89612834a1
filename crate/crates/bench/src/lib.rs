//! Shared inputs for the pipeline benchmarks.

use tmfix_core::event::SessionEvent;
use tmfix_core::session::{build_sessions, Corpus};
use tmfix_core::sim::{generate, SimConfig};
use tmfix_core::textnorm::NormalizationConfig;

/// Simulated events for `n_sessions` sessions with the default generator settings.
pub fn events(n_sessions: usize) -> Vec<SessionEvent> {
    let cfg = SimConfig {
        n_sessions,
        ..SimConfig::default()
    };
    generate(&cfg, &NormalizationConfig::default())
        .expect("default simulator config is valid")
        .events
}

pub fn corpus(n_sessions: usize) -> Corpus {
    build_sessions(events(n_sessions), &NormalizationConfig::default())
}

/// Word-list half of the English stemmer fixture.
pub fn english_words() -> Vec<&'static str> {
    include_str!("../../core/tests/fixtures/stem_en.txt")
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('\t').map(|(w, _)| w))
        .collect()
}
