//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails. Tolerances and budgets are pinned below.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmfix_core::event::{decode_event, encode_event, read_log_strict, SessionEvent};
use tmfix_core::extract::{evaluate_extraction, ThresholdPolicy};
use tmfix_core::matching::{
    cleaned_stems, combined_report, doc_keywords, report_for_kinds, title_needles, KindCounts, MatchHit, MatchKind,
    MatchReport,
};
use tmfix_core::session::{build_sessions, Corpus, Session};
use tmfix_core::sim::{generate, SimConfig};
use tmfix_core::stats::{anova_one_way, corpus_report, f_critical, split_observations, BucketTiming, TimingComparison};
use tmfix_core::textnorm::{NormalizationConfig, Stem, StemmerId};

const ANOVA_REL_TOL: f64 = 1e-9;
const T_SQUARED_CASES: usize = 1_000;
const STEMMER_MIN_ENTRIES: usize = 1_000;
const MATCHING_SESSIONS: usize = 50;
const CALIBRATION_REL_TOL: f64 = 0.10;
const INTEREST_MEAN_MS: f64 = 7060.0;
const BACKGROUND_MEAN_MS: f64 = 4430.0;
const NULL_SEEDS: u64 = 100;
const NULL_SESSIONS: usize = 1_000;
const NULL_MIN_NOT_SIGNIFICANT: f64 = 0.95;
const EXTRACTION_MIN_F1: f64 = 0.80;
const OVERLAP_EFFECT_MS: f64 = 1_000.0;
const OVERLAP_KEYWORD_POOL: usize = 3;
const EQUIVALENCE_SESSIONS: usize = 20;
const EQUIVALENCE_CORPUS: usize = 200;
const ROUND_TRIP_EVENTS: usize = 10_000;
const ALPHA: f64 = 0.01;

type Outcome = Result<String, String>;

/// Name, check and runtime budget.
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn golden_dir() -> PathBuf {
    workspace().join("crates/core/tests/fixtures/golden")
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tmfix")
}

fn simulate(cfg: &SimConfig) -> (Corpus, tmfix_core::sim::SimOutput) {
    let norm = NormalizationConfig::default();
    let out = generate(cfg, &norm).expect("valid simulator config");
    (build_sessions(out.events.clone(), &norm), out)
}

// Exact rationals for the t-squared oracle.

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

#[derive(Clone, Copy)]
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
    fn mul(self, o: Q) -> Q {
        Q::new(self.0 * o.0, self.1 * o.1)
    }
    fn div(self, o: Q) -> Q {
        Q::new(self.0 * o.1, self.1 * o.0)
    }
    fn f64(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

/// Pooled two-sample t statistic squared, exactly.
fn exact_t_squared(a: &[i64], b: &[i64]) -> Q {
    let (na, nb) = (a.len() as i128, b.len() as i128);
    let sum = |v: &[i64]| v.iter().map(|&x| x as i128).sum::<i128>();
    let ss = |v: &[i64]| {
        let s = sum(v);
        Q(v.iter().map(|&x| (x as i128).pow(2)).sum(), 1).sub(Q::new(s * s, v.len() as i128))
    };
    let diff = Q::new(sum(a), na).sub(Q::new(sum(b), nb));
    let sp2 = ss(a).add(ss(b)).div(Q(na + nb - 2, 1));
    let scale = Q::new(1, na).add(Q::new(1, nb));
    diff.mul(diff).div(sp2.mul(scale))
}

fn anova_oracle() -> Outcome {
    let r = anova_one_way(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], ALPHA).map_err(|e| e.to_string())?;
    check(rel_close(r.f_stat, 13.5, ANOVA_REL_TOL), format!("F = {} for [1,2,3] vs [4,5,6]", r.f_stat))?;
    let z = anova_one_way(&[vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]], ALPHA).map_err(|e| e.to_string())?;
    check(z.f_stat == 0.0, format!("F = {} for identical means", z.f_stat))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    while cases < T_SQUARED_CASES {
        let a: Vec<i64> = (0..rng.random_range(2..30)).map(|_| rng.random_range(0..10_000)).collect();
        let b: Vec<i64> = (0..rng.random_range(2..30)).map(|_| rng.random_range(0..10_000)).collect();
        let t2 = exact_t_squared(&a, &b).f64();
        let to_f = |v: &[i64]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
        let f = anova_one_way(&[to_f(&a), to_f(&b)], ALPHA).map_err(|e| e.to_string())?.f_stat;
        let err = if t2 == 0.0 { f.abs() } else { (f - t2).abs() / t2 };
        worst = worst.max(err);
        cases += 1;
    }
    check(worst <= ANOVA_REL_TOL, format!("worst F vs t^2 relative error {worst:e}"))?;

    // Published upper-tail F-table entries at their printed precision.
    for (d1, d2, alpha, printed) in [(1, 4, 0.01, "21.20"), (1, 4, 0.05, "7.71"), (2, 10, 0.05, "4.10"), (3, 20, 0.01, "4.94"), (5, 30, 0.05, "2.53")] {
        let got = format!("{:.2}", f_critical(d1, d2, alpha));
        check(got == printed, format!("F-critical({d1},{d2},{alpha}) = {got}, table {printed}"))?;
    }
    Ok(format!("F=13.5, F=0, {T_SQUARED_CASES} t^2 cases (worst rel err {worst:.1e}), F-table (1,4,.01)=21.20"))
}

fn stemmer_conformance() -> Outcome {
    let text = std::fs::read_to_string(workspace().join("crates/core/tests/fixtures/stem_en.txt")).map_err(|e| e.to_string())?;
    let pairs: Vec<(&str, &str)> = text
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('\t'))
        .collect();
    check(pairs.len() >= STEMMER_MIN_ENTRIES, format!("only {} fixture entries", pairs.len()))?;
    let bad = pairs.iter().filter(|(w, s)| StemmerId::SnowballEnglish.stem(w) != *s).count();
    check(bad == 0, format!("{bad} of {} entries differ", pairs.len()))?;
    Ok(format!("{} English vocabulary entries, 100% agree", pairs.len()))
}

/// Reference matcher: every needle against every cleaned fixation stem with
/// `str::contains`, kinds evaluated independently.
fn naive_report(s: &Session, cfg: &NormalizationConfig) -> MatchReport {
    let fixations = cleaned_stems(s, cfg);
    let containing = |n: &Stem| -> Vec<Stem> {
        fixations.iter().filter(|f| f.as_str().contains(n.as_str())).cloned().collect()
    };
    let mut hits = Vec::new();
    let mut per_kind = BTreeMap::new();
    let mut search = KindCounts::default();
    for n in &s.distinct_search_stems {
        search.searched += 1;
        let c = containing(n);
        search.found += usize::from(!c.is_empty());
        for f in c {
            hits.push(MatchHit { kind: MatchKind::SearchTerm, doc_id: None, needle: n.clone(), fixation_stem: f });
        }
    }
    let (mut title, mut keyword) = (KindCounts::default(), KindCounts::default());
    for d in &s.clicks {
        for n in title_needles(d, cfg) {
            title.searched += 1;
            let c = containing(&n);
            title.found += usize::from(!c.is_empty());
            for f in c {
                hits.push(MatchHit { kind: MatchKind::TitleTerm, doc_id: Some(d.doc_id.clone()), needle: n.clone(), fixation_stem: f });
            }
        }
        for kw in doc_keywords(d, cfg) {
            keyword.searched += 1;
            if kw.is_empty() || kw.iter().any(|t| containing(t).is_empty()) {
                continue;
            }
            keyword.found += 1;
            for t in &kw {
                for f in containing(t) {
                    hits.push(MatchHit { kind: MatchKind::Keyword, doc_id: Some(d.doc_id.clone()), needle: t.clone(), fixation_stem: f });
                }
            }
        }
    }
    per_kind.insert(MatchKind::SearchTerm, search);
    per_kind.insert(MatchKind::TitleTerm, title);
    per_kind.insert(MatchKind::Keyword, keyword);
    hits.sort();
    hits.dedup();
    let found: BTreeSet<Stem> = hits.iter().map(|h| h.fixation_stem.clone()).collect();
    let other = fixations.difference(&found).cloned().collect();
    MatchReport { session_id: s.session_id.clone(), hits, found, other, per_kind }
}

fn matching_oracle() -> Outcome {
    let cfg = NormalizationConfig::default();
    let (corpus, _) = simulate(&SimConfig { seed: 11, n_sessions: 500, ..SimConfig::default() });
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sample: Vec<&Session> = corpus.sessions.choose_multiple(&mut rng, MATCHING_SESSIONS).collect();
    let mut hits = 0;
    for s in &sample {
        let engine = combined_report(s, &cfg);
        let oracle = naive_report(s, &cfg);
        check(engine == oracle, format!("session {} differs from the reference matcher", s.session_id))?;
        for kind in MatchKind::ALL {
            let single = report_for_kinds(s, &cfg, &[kind]);
            check(single.per_kind[&kind] == oracle.per_kind[&kind], format!("session {} {kind:?} counts differ", s.session_id))?;
        }
        hits += engine.hits.len();
    }
    Ok(format!("{} sessions identical to the quadratic reference ({hits} hits)", sample.len()))
}

fn calibration() -> Outcome {
    let cfg = NormalizationConfig::default();
    let (corpus, _) = simulate(&SimConfig::default());
    for s in &corpus.sessions {
        let r = combined_report(s, &cfg);
        let union: BTreeSet<Stem> = r.found.union(&r.other).cloned().collect();
        check(r.found.is_disjoint(&r.other) && union == cleaned_stems(s, &cfg), format!("session {} is not partitioned", s.session_id))?;
    }
    let report = corpus_report(&corpus, &cfg, ALPHA).map_err(|e| e.to_string())?;
    let t = &report.timing.combined;
    let (found, other) = (t.found.mean_ms.unwrap_or(f64::NAN), t.other.mean_ms.unwrap_or(f64::NAN));
    check(rel_close(found, INTEREST_MEAN_MS, CALIBRATION_REL_TOL), format!("found mean {found:.0} ms"))?;
    check(rel_close(other, BACKGROUND_MEAN_MS, CALIBRATION_REL_TOL), format!("other mean {other:.0} ms"))?;
    let anova = t.anova.as_ref().ok_or("no ANOVA for the combined split")?;
    check(anova.significant, format!("combined F = {:.2} not significant", anova.f_stat))?;
    check(report.mean_found_terms_per_session_all > 0.0, "no found terms")?;

    let norm = NormalizationConfig::default();
    let mut not_significant = 0;
    for seed in 1..=NULL_SEEDS {
        let sim = SimConfig {
            seed,
            n_sessions: NULL_SESSIONS,
            interest_mean_ms: BACKGROUND_MEAN_MS,
            ..SimConfig::default()
        };
        let (c, _) = simulate(&sim);
        let (mut f, mut o) = (Vec::new(), Vec::new());
        for s in &c.sessions {
            let (a, b) = split_observations(&combined_report(s, &norm), s);
            f.extend(a);
            o.extend(b);
        }
        let cmp = TimingComparison::from_observations(f, o, ALPHA);
        if !cmp.anova.as_ref().is_some_and(|a| a.significant) {
            not_significant += 1;
        }
    }
    let rate = not_significant as f64 / NULL_SEEDS as f64;
    check(rate >= NULL_MIN_NOT_SIGNIFICANT, format!("null not significant in only {not_significant}/{NULL_SEEDS} seeds"))?;
    Ok(format!(
        "found {:.2} s, other {:.2} s, F = {:.2} significant; null not significant in {not_significant}/{NULL_SEEDS} seeds",
        found / 1000.0,
        other / 1000.0,
        anova.f_stat
    ))
}

fn extraction_quality() -> Outcome {
    let cfg = NormalizationConfig::default();
    let (corpus, out) = simulate(&SimConfig::default());
    let policy = ThresholdPolicy::default();
    let r = evaluate_extraction(&corpus, &policy, &cfg, &out.truth.fixated_interest()).map_err(|e| e.to_string())?;
    check(r.macro_f1 >= EXTRACTION_MIN_F1, format!("macro-F1 {:.4}", r.macro_f1))?;
    Ok(format!(
        "macro P {:.4} R {:.4} F1 {:.4} over {} sessions",
        r.macro_precision,
        r.macro_recall,
        r.macro_f1,
        r.sessions.len()
    ))
}

fn overlap_effect() -> Outcome {
    let cfg = NormalizationConfig::default();
    let sim = SimConfig {
        overlap_effect_ms_per_doc: OVERLAP_EFFECT_MS,
        keyword_pool: OVERLAP_KEYWORD_POOL,
        ..SimConfig::default()
    };
    let (corpus, _) = simulate(&sim);
    let report = corpus_report(&corpus, &cfg, ALPHA).map_err(|e| e.to_string())?;
    let mut means = Vec::new();
    for b in &report.overlap_timing {
        match &b.timing {
            BucketTiming::Measured(t) => {
                means.push((b.doc_count, t.found.mean_ms.ok_or(format!("bucket {} has no keyword stems", b.doc_count))?))
            }
            BucketTiming::Empty => return Err(format!("bucket {} is empty", b.doc_count)),
        }
    }
    check(means.iter().map(|m| m.0).eq(2..=5), "buckets are not k = 2..5")?;
    check(means.windows(2).all(|w| w[0].1 < w[1].1), format!("means not increasing: {means:?}"))?;
    let shown: Vec<String> = means.iter().map(|(k, m)| format!("k={k} {:.2} s", m / 1000.0)).collect();
    Ok(shown.join(", "))
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn online_offline() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sim = SimConfig { seed: 5, n_sessions: EQUIVALENCE_CORPUS, ..SimConfig::default() };
    let (corpus, out) = simulate(&sim);
    let log = dir.path().join("sim.jsonl");
    std::fs::write(&log, out.log_text(&sim)).map_err(|e| e.to_string())?;

    let port = free_port();
    let base = format!("http://127.0.0.1:{port}");
    let _server = Server(
        Command::new(bin())
            .args(["serve", "--listen", &format!("127.0.0.1:{port}"), "--log"])
            .arg(dir.path().join("service.jsonl"))
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())?,
    );
    let deadline = Instant::now() + Duration::from_secs(10);
    loop {
        match ureq::get(&format!("{base}/v1/sessions/none/report")).call() {
            Err(ureq::Error::StatusCode(404)) => break,
            _ if Instant::now() > deadline => return Err("service did not come up".into()),
            _ => std::thread::sleep(Duration::from_millis(50)),
        }
    }

    // Post the log in batches well under the default size limit.
    let text = out.log_text(&sim);
    let mut batch = String::new();
    let mut accepted = 0;
    let mut flush = |batch: &mut String| -> Result<(), String> {
        if batch.is_empty() {
            return Ok(());
        }
        let mut resp = ureq::post(&format!("{base}/v1/events"))
            .header("content-type", "application/x-ndjson")
            .send(batch.as_str())
            .map_err(|e| e.to_string())?;
        let ack: serde_json::Value = serde_json::from_str(&resp.body_mut().read_to_string().map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        check(ack["rejected"] == 0, format!("rejections: {ack}"))?;
        accepted += ack["accepted"].as_u64().unwrap_or(0) as usize;
        batch.clear();
        Ok(())
    };
    for line in text.lines() {
        if batch.len() + line.len() + 1 > 256 * 1024 {
            flush(&mut batch)?;
        }
        batch.push_str(line);
        batch.push('\n');
    }
    flush(&mut batch)?;
    check(accepted == out.events.len(), format!("accepted {accepted} of {}", out.events.len()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ids: Vec<&str> = corpus
        .sessions
        .choose_multiple(&mut rng, EQUIVALENCE_SESSIONS)
        .map(|s| s.session_id.as_str())
        .collect();
    for id in &ids {
        let mut online = String::new();
        ureq::get(&format!("{base}/v1/sessions/{id}/report"))
            .call()
            .map_err(|e| format!("GET {id}: {e}"))?
            .body_mut()
            .as_reader()
            .read_to_string(&mut online)
            .map_err(|e| e.to_string())?;
        let offline = Command::new(bin())
            .args(["analyze", "--input"])
            .arg(&log)
            .args(["--session", id])
            .output()
            .map_err(|e| e.to_string())?;
        check(offline.status.success(), format!("analyze --session {id} failed"))?;
        check(offline.stdout == online.as_bytes(), format!("session {id}: online and offline JSON differ"))?;
    }
    Ok(format!("{} sessions byte-identical after ingesting {accepted} events", ids.len()))
}

fn round_trip_and_golden() -> Outcome {
    let sim = SimConfig { seed: 3, n_sessions: 2_000, ..SimConfig::default() };
    let (_, out) = simulate(&sim);
    check(out.events.len() >= ROUND_TRIP_EVENTS, format!("only {} events generated", out.events.len()))?;
    for e in out.events.iter().take(ROUND_TRIP_EVENTS) {
        let back: SessionEvent = decode_event(&encode_event(e)).map_err(|x| x.to_string())?;
        check(&back == e, format!("round trip changed an event of {}", e.session_id()))?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let expected = std::fs::read(golden_dir().join("report.json")).map_err(|e| e.to_string())?;
    for run in 0..2 {
        let out_path = dir.path().join(format!("report{run}.json"));
        let status = Command::new(bin())
            .args(["analyze", "--input"])
            .arg(golden_dir().join("session.jsonl"))
            .arg("--out")
            .arg(&out_path)
            .stdout(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        check(status.success(), "analyze of the golden fixture failed")?;
        let got = std::fs::read(&out_path).map_err(|e| e.to_string())?;
        check(got == expected, "golden report differs from the committed report.json")?;
    }
    let events = read_log_strict(std::fs::File::open(golden_dir().join("session.jsonl")).map(std::io::BufReader::new).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    Ok(format!("{ROUND_TRIP_EVENTS} events round-trip; golden report byte-identical over 2 runs ({} fixture events)", events.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("ANOVA oracle", anova_oracle, Duration::from_secs(1)),
        ("Stemmer conformance", stemmer_conformance, Duration::from_secs(5)),
        ("Matching oracle", matching_oracle, Duration::from_secs(10)),
        ("Calibration reproduction", calibration, Duration::from_secs(120)),
        ("Extraction quality", extraction_quality, Duration::from_secs(60)),
        ("Overlap effect", overlap_effect, Duration::from_secs(60)),
        ("Online/offline equivalence", online_offline, Duration::from_secs(30)),
        ("Round-trip and golden", round_trip_and_golden, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > budget => Err(format!("{detail}; took {took:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{took:.2?}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
