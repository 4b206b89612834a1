//! Term-mouse-fixation analysis: text normalization, event model, session
//! reconstruction, matching, statistics, interest extraction and a
//! synthetic session simulator.

pub mod analysis;
pub mod event;
pub mod extract;
pub mod matching;
pub mod session;
pub mod sim;
pub mod stats;
pub mod textnorm;
