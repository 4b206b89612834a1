//! Property tests over the event codec, normalization, session building,
//! matching, the one-way ANOVA and interest extraction.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use tmfix_core::event::{decode_event, encode_event, Aoi, DocumentClick, MetadataField, QueryEvent, SessionEvent, TermFixation};
use tmfix_core::extract::{extract, ThresholdPolicy, ThresholdRule};
use tmfix_core::matching::{
    cleaned_stems, doc_keywords, keyword_overlap_detail, report_for_kinds, title_needles, MatchKind,
};
use tmfix_core::session::{build_session, build_sessions, Session};
use tmfix_core::stats::{anova_one_way, AnovaError, GroupTiming};
use tmfix_core::textnorm::{fold, normalize_term, tokenize, NormalizationConfig, Stem};

const WORDS: &[&str] = &[
    "Armut", "Bildung", "Familie", "Migration", "Wetter", "Quelle", "Tabelle", "Ungleichheit",
    "Wissenschaft", "Sozialwissenschaft", "und", "der", "ab", "Policy", "data", "Zeit", "Arm",
];

const STEMS: &[&str] = &[
    "armut", "bildung", "famili", "migration", "wett", "quell", "tabell", "ungleich", "wissenschaft",
    "sozialwissenschaft", "sozial", "arm", "bild", "zeit", "polic", "dat",
];

fn cfg() -> NormalizationConfig {
    NormalizationConfig::default()
}

fn stem_of(s: &str) -> Stem {
    Stem::parse(s).unwrap()
}

fn phrase() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..4).prop_map(|w| w.join(" "))
}

fn fixation(stem: &'static str) -> impl Strategy<Value = TermFixation> {
    (1u64..12_000, 0u64..2_000, 0u64..5_000, 0usize..Aoi::ALL.len(), 0usize..MetadataField::ALL.len())
        .prop_map(move |(total, first, extra, a, f)| TermFixation {
            stem: stem_of(stem),
            total_ms: total,
            first_ms: first,
            last_ms: first.max(total) + extra,
            first_aoi: Aoi::ALL[a],
            first_field: MetadataField::ALL[f],
        })
}

fn fixations() -> impl Strategy<Value = Vec<TermFixation>> {
    prop::sample::subsequence(STEMS, 0..=STEMS.len())
        .prop_flat_map(|stems| stems.into_iter().map(fixation).collect::<Vec<_>>())
}

fn query(sid: String) -> impl Strategy<Value = SessionEvent> {
    (prop::collection::vec(phrase(), 1..3), fixations()).prop_map(move |(raw_terms, fixations)| {
        SessionEvent::Query(QueryEvent {
            session_id: sid.clone(),
            ts_ms: 0,
            raw_terms,
            fixations,
        })
    })
}

fn click(sid: String) -> impl Strategy<Value = SessionEvent> {
    (0u8..4, phrase(), prop::collection::vec(phrase(), 0..4)).prop_map(move |(d, title, keywords)| {
        SessionEvent::Click(DocumentClick {
            session_id: sid.clone(),
            ts_ms: 0,
            doc_id: format!("d{d}"),
            title,
            keywords,
        })
    })
}

fn event() -> impl Strategy<Value = SessionEvent> {
    prop::sample::select(&["a", "b", "c", "d"][..]).prop_flat_map(|sid| {
        prop_oneof![query(sid.to_string()), click(sid.to_string())]
    })
}

/// Events with distinct, increasing timestamps in generation order.
fn events(max: usize) -> impl Strategy<Value = Vec<SessionEvent>> {
    prop::collection::vec(event(), 1..max).prop_map(|mut v| {
        for (i, e) in v.iter_mut().enumerate() {
            let ts = 1_000 + 10 * i as u64;
            match e {
                SessionEvent::Query(q) => q.ts_ms = ts,
                SessionEvent::Click(c) => c.ts_ms = ts,
            }
        }
        v
    })
}

/// A single admitted session.
fn session() -> impl Strategy<Value = Session> {
    events(12).prop_map(|v| {
        let mut v: Vec<SessionEvent> = v
            .into_iter()
            .map(|mut e| {
                match &mut e {
                    SessionEvent::Query(q) => q.session_id = "s".into(),
                    SessionEvent::Click(c) => c.session_id = "s".into(),
                }
                e
            })
            .collect();
        if !v.iter().any(|e| matches!(e, SessionEvent::Query(_))) {
            v.push(SessionEvent::Query(QueryEvent {
                session_id: "s".into(),
                ts_ms: 1,
                raw_terms: vec!["Armut".into()],
                fixations: vec![],
            }));
        }
        build_session("s", v, &cfg()).unwrap()
    })
}

/// Quadratic reference matcher: for every needle kind, scan every cleaned
/// fixation stem with `str::contains`.
fn naive_found(s: &Session, cfg: &NormalizationConfig, kind: MatchKind) -> (usize, usize, BTreeSet<Stem>) {
    let fix: Vec<Stem> = s
        .fixations
        .keys()
        .filter(|k| !cfg.blacklist.contains(*k))
        .cloned()
        .collect();
    let containing = |needle: &Stem| -> Vec<Stem> {
        fix.iter().filter(|f| f.as_str().contains(needle.as_str())).cloned().collect()
    };
    let (mut searched, mut found_n, mut found) = (0, 0, BTreeSet::new());
    match kind {
        MatchKind::SearchTerm => {
            for n in &s.distinct_search_stems {
                searched += 1;
                let c = containing(n);
                found_n += usize::from(!c.is_empty());
                found.extend(c);
            }
        }
        MatchKind::TitleTerm => {
            for d in &s.clicks {
                for n in title_needles(d, cfg) {
                    searched += 1;
                    let c = containing(&n);
                    found_n += usize::from(!c.is_empty());
                    found.extend(c);
                }
            }
        }
        MatchKind::Keyword => {
            for d in &s.clicks {
                for kw in doc_keywords(d, cfg) {
                    searched += 1;
                    let per: Vec<Vec<Stem>> = kw.iter().map(containing).collect();
                    if !kw.is_empty() && per.iter().all(|c| !c.is_empty()) {
                        found_n += 1;
                        found.extend(per.into_iter().flatten());
                    }
                }
            }
        }
    }
    (searched, found_n, found)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// Exact rational `num / den`, reduced, `den > 0`.
#[derive(Clone, Copy, Debug)]
struct Q(i128, i128);

impl Q {
    fn new(n: i128, d: i128) -> Q {
        let g = gcd(n, d).max(1);
        let s = if d < 0 { -1 } else { 1 };
        Q(s * n / g, s * d / g)
    }
    fn add(self, o: Q) -> Q {
        Q::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    fn sub(self, o: Q) -> Q {
        self.add(Q(-o.0, o.1))
    }
    fn f64(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

/// Exact between- and within-group sums of squares of integer data.
fn exact_ss(groups: &[Vec<i64>]) -> (Q, Q) {
    let n: i128 = groups.iter().map(|g| g.len() as i128).sum();
    let total: i128 = groups.iter().flatten().map(|&x| x as i128).sum();
    let sq: i128 = groups.iter().flatten().map(|&x| (x as i128).pow(2)).sum();
    let mut group_term = Q(0, 1);
    for g in groups {
        let s: i128 = g.iter().map(|&x| x as i128).sum();
        group_term = group_term.add(Q::new(s * s, g.len() as i128));
    }
    let between = group_term.sub(Q::new(total * total, n));
    let within = Q(sq, 1).sub(group_term);
    (between, within)
}

fn groups_i64() -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-500i64..500, 1..7), 2..5)
}

fn to_f64(groups: &[Vec<i64>]) -> Vec<Vec<f64>> {
    groups.iter().map(|g| g.iter().map(|&x| x as f64).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn event_round_trip(e in event(), ts in 0u64..u64::MAX / 2) {
        let mut e = e;
        match &mut e {
            SessionEvent::Query(q) => q.ts_ms = ts,
            SessionEvent::Click(c) => c.ts_ms = ts,
        }
        prop_assert!(e.validate().is_ok());
        let line = encode_event(&e);
        prop_assert!(!line.contains('\n'));
        prop_assert_eq!(decode_event(&line).unwrap(), e);
    }

    #[test]
    fn normalization_is_deterministic(text in "\\PC{0,40}") {
        let c = cfg();
        prop_assert_eq!(c.normalize_text(&text, true), c.normalize_text(&text, true));
        for s in c.normalize_text(&text, false) {
            prop_assert_eq!(Stem::parse(s.as_str()), Ok(s.clone()));
        }
    }

    #[test]
    fn tokens_have_no_separators(text in "\\PC{0,60}") {
        for t in tokenize(&text) {
            prop_assert!(!t.is_empty());
            prop_assert!(t.chars().all(char::is_alphanumeric));
        }
    }

    #[test]
    fn stopwords_vanish_in_any_casing(idx in any::<prop::sample::Index>(), mask in prop::collection::vec(any::<bool>(), 32)) {
        let c = cfg();
        let all: Vec<&String> = c.profiles.iter().flat_map(|p| p.stopwords.iter()).collect();
        let w = idx.get(&all);
        let cased: String = w
            .chars()
            .zip(mask.iter().cycle())
            .map(|(ch, up)| if *up { ch.to_uppercase().collect::<String>() } else { ch.to_string() })
            .collect();
        // Some uppercase forms do not fold back (e.g. sharp s); only test round-tripping casings.
        prop_assume!(fold(&cased) == **w);
        prop_assert_eq!(normalize_term(&cased, &c, false), None);
        prop_assert_eq!(normalize_term(&cased, &c, true), None);
    }

    #[test]
    fn admission_counts_sessions_with_a_query(evs in events(40)) {
        let corpus = build_sessions(evs.clone(), &cfg());
        let with_query: BTreeSet<&str> = evs
            .iter()
            .filter(|e| matches!(e, SessionEvent::Query(_)))
            .map(SessionEvent::session_id)
            .collect();
        prop_assert_eq!(corpus.counts.sessions, with_query.len());
        prop_assert_eq!(corpus.sessions.len(), with_query.len());
        let ids: Vec<&str> = corpus.sessions.iter().map(|s| s.session_id.as_str()).collect();
        prop_assert_eq!(ids, with_query.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn session_building_ignores_arrival_order(evs in events(30).prop_shuffle(), seed in any::<u64>()) {
        let mut shuffled = evs.clone();
        // Deterministic rotation on top of the shuffle.
        let len = shuffled.len();
        shuffled.rotate_left((seed as usize) % len);
        prop_assert_eq!(build_sessions(evs, &cfg()), build_sessions(shuffled, &cfg()));
    }

    #[test]
    fn merged_fixations_follow_the_last_snapshot(s in session()) {
        for (stem, f) in &s.fixations {
            let snaps: Vec<&TermFixation> = s
                .query_events
                .iter()
                .flat_map(|q| q.fixations.iter())
                .filter(|x| &x.stem == stem)
                .collect();
            prop_assert!(!snaps.is_empty());
            prop_assert_eq!(f.total_ms, snaps.last().unwrap().total_ms);
            prop_assert_eq!(f.last_ms, snaps.last().unwrap().last_ms);
            prop_assert_eq!(f.first_ms, snaps.iter().map(|x| x.first_ms).min().unwrap());
        }
        prop_assert!(s.query_events.windows(2).all(|w| w[0].ts_ms <= w[1].ts_ms));
    }

    #[test]
    fn search_stems_exclude_stopwords_and_short_tokens(s in session()) {
        let c = cfg();
        for st in &s.distinct_search_stems {
            prop_assert!(!c.is_stopword(st.as_str()));
        }
        let expected: BTreeSet<Stem> = s
            .query_events
            .iter()
            .flat_map(|q| q.raw_terms.iter())
            .flat_map(|r| tokenize(r))
            .filter(|t| fold(t).chars().count() >= c.min_search_term_len)
            .filter_map(|t| normalize_term(&t, &c, false))
            .collect();
        prop_assert_eq!(&s.distinct_search_stems, &expected);
    }

    #[test]
    fn found_and_other_partition_the_cleaned_fixations(s in session()) {
        let c = cfg();
        let cleaned = cleaned_stems(&s, &c);
        for kinds in [&MatchKind::ALL[..], &[MatchKind::SearchTerm], &[MatchKind::TitleTerm], &[MatchKind::Keyword]] {
            let r = report_for_kinds(&s, &c, kinds);
            prop_assert!(r.found.is_disjoint(&r.other));
            let union: BTreeSet<Stem> = r.found.union(&r.other).cloned().collect();
            prop_assert_eq!(&union, &cleaned);
            prop_assert!(union.iter().all(|x| !c.blacklist.contains(x)));
        }
    }

    #[test]
    fn matcher_agrees_with_quadratic_reference(s in session()) {
        let c = cfg();
        for kind in MatchKind::ALL {
            let r = report_for_kinds(&s, &c, &[kind]);
            let (searched, found_n, found) = naive_found(&s, &c, kind);
            prop_assert_eq!(r.per_kind[&kind].searched, searched);
            prop_assert_eq!(r.per_kind[&kind].found, found_n);
            prop_assert_eq!(&r.found, &found);
            for h in &r.hits {
                prop_assert!(h.fixation_stem.as_str().contains(h.needle.as_str()));
            }
        }
    }

    #[test]
    fn more_fixations_never_lose_matches(s in session(), extra in fixations()) {
        let c = cfg();
        let mut bigger = s.clone();
        for f in extra {
            bigger.fixations.entry(f.stem.clone()).or_insert(f);
        }
        for kind in MatchKind::ALL {
            let a = report_for_kinds(&s, &c, &[kind]);
            let b = report_for_kinds(&bigger, &c, &[kind]);
            prop_assert!(a.found.is_subset(&b.found));
            prop_assert!(a.per_kind[&kind].found <= b.per_kind[&kind].found);
        }
    }

    #[test]
    fn combined_found_covers_each_kind(s in session()) {
        let c = cfg();
        let all = report_for_kinds(&s, &c, &MatchKind::ALL);
        for kind in MatchKind::ALL {
            prop_assert!(report_for_kinds(&s, &c, &[kind]).found.is_subset(&all.found));
        }
    }

    #[test]
    fn keyword_overlap_is_bounded_by_clicked_docs(s in session()) {
        let docs: BTreeSet<&str> = s.clicks.iter().map(|d| d.doc_id.as_str()).collect();
        for k in keyword_overlap_detail(&s, &cfg()) {
            prop_assert!(k.doc_count >= 1);
            prop_assert!(k.doc_count <= docs.len());
        }
    }

    #[test]
    fn anova_matches_exact_rational_oracle(groups in groups_i64()) {
        let (between, within) = exact_ss(&groups);
        let n: usize = groups.iter().map(Vec::len).sum();
        let k = groups.len();
        let got = anova_one_way(&to_f64(&groups), 0.01);
        if n <= k {
            prop_assert_eq!(got.unwrap_err(), AnovaError::DegenerateDf);
        } else if within.0 == 0 {
            let want = if between.0 == 0 { AnovaError::NotSignificantDegenerate } else { AnovaError::InfiniteF };
            prop_assert_eq!(got.unwrap_err(), want);
        } else {
            let r = got.unwrap();
            let exact = Q::new(between.0 * within.1 * (n - k) as i128, between.1 * within.0 * (k - 1) as i128);
            prop_assert_eq!((r.df_between, r.df_within), (k - 1, n - k));
            prop_assert!((r.f_stat - exact.f64()).abs() <= 1e-9 * exact.f64().abs().max(1.0),
                "f {} vs exact {}", r.f_stat, exact.f64());
            prop_assert_eq!(r.significant, r.f_stat > r.f_critical);
        }
    }

    #[test]
    fn two_group_f_is_pooled_t_squared(a in prop::collection::vec(0.0f64..1e4, 2..20), b in prop::collection::vec(0.0f64..1e4, 2..20)) {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>();
        let dof = (a.len() + b.len() - 2) as f64;
        let sp2 = (ss(&a, ma) + ss(&b, mb)) / dof;
        prop_assume!(sp2 > 1e-6);
        let t = (ma - mb) / (sp2 * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
        let f = anova_one_way(&[a, b], 0.05).unwrap().f_stat;
        prop_assert!((f - t * t).abs() <= 1e-7 * f.max(1.0), "f {f} vs t^2 {}", t * t);
    }

    #[test]
    fn f_is_invariant_under_affine_maps(groups in groups_i64(), scale in 0.01f64..100.0, shift in -1e4f64..1e4) {
        let base = to_f64(&groups);
        let mapped: Vec<Vec<f64>> = base.iter().map(|g| g.iter().map(|x| scale * x + shift).collect()).collect();
        if let Ok(r) = anova_one_way(&base, 0.01) {
            prop_assume!(r.f_stat > 1e-6 && r.f_stat < 1e6);
            let m = anova_one_way(&mapped, 0.01).unwrap();
            prop_assert!((m.f_stat - r.f_stat).abs() <= 1e-6 * r.f_stat.max(1.0));
        }
    }

    #[test]
    fn group_means_are_arithmetic_means(obs in prop::collection::vec(1u64..1_000_000, 0..50)) {
        let g = GroupTiming::new("g", obs.clone());
        prop_assert_eq!(g.n, obs.len());
        match g.mean_ms {
            None => prop_assert!(obs.is_empty()),
            Some(m) => {
                let exact = obs.iter().sum::<u64>() as f64 / obs.len() as f64;
                prop_assert!((m - exact).abs() <= 1e-9 * exact);
            }
        }
    }

    #[test]
    fn extraction_is_ordered_and_floored(s in session(), t in 0u64..12_000, floor in 0u64..8_000, k in 1usize..10) {
        let c = cfg();
        let cleaned: BTreeMap<&Stem, u64> = s.cleaned_fixations(&c).map(|f| (&f.stem, f.total_ms)).collect();
        prop_assume!(!cleaned.is_empty());
        for rule in [
            ThresholdRule::Absolute { absolute_ms: t },
            ThresholdRule::MedianFactor { factor: 1.05 },
            ThresholdRule::TopK { k },
        ] {
            let policy = ThresholdPolicy { rule: rule.clone(), floor_ms: floor };
            let terms = extract(&s, &policy, &c).unwrap();
            for (i, term) in terms.iter().enumerate() {
                prop_assert_eq!(term.rank, i + 1);
                prop_assert!(term.total_ms >= floor);
                prop_assert_eq!(cleaned.get(&term.stem), Some(&term.total_ms));
            }
            prop_assert!(terms.windows(2).all(|w| w[0].total_ms >= w[1].total_ms));
            if let ThresholdRule::TopK { k } = rule {
                prop_assert!(terms.len() <= k);
            }
        }
    }

    #[test]
    fn raising_the_threshold_shrinks_the_result(s in session(), lo in 0u64..12_000, step in 0u64..6_000) {
        let c = cfg();
        prop_assume!(s.cleaned_fixations(&c).next().is_some());
        let at = |t: u64| -> BTreeSet<Stem> {
            let p = ThresholdPolicy { rule: ThresholdRule::Absolute { absolute_ms: t }, floor_ms: 0 };
            extract(&s, &p, &c).unwrap().into_iter().map(|x| x.stem).collect()
        };
        prop_assert!(at(lo + step).is_subset(&at(lo)));
    }
}

#[test]
fn build_session_rejects_click_only_sessions() {
    let click = SessionEvent::Click(DocumentClick {
        session_id: "x".into(),
        ts_ms: 1,
        doc_id: "d".into(),
        title: "Armut".into(),
        keywords: vec![],
    });
    assert!(build_session("x", vec![click], &cfg()).is_none());
}
