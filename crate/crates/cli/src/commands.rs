//! Subcommand implementations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, Context};
use tmfix_core::analysis::analyze_session;
use tmfix_core::event::{read_log_strict, LogError};
use tmfix_core::extract::{evaluate_extraction, extraction_result, EvaluationReport, ExtractError};
use tmfix_core::session::{build_sessions, Corpus};
use tmfix_core::sim::{analytic_expectations, generate, GroundTruth, LogHeader, SimConfig};
use tmfix_core::stats::{corpus_report, render_table, StatsError};
use tmfix_core::textnorm::{NormalizationConfig, Stem};
use tmfix_service::ServiceConfig;

use crate::{AnalyzeArgs, EvaluateArgs, ExtractArgs, Failure, NormArgs, ServeArgs, SimulateArgs};

impl NormArgs {
    fn load(&self) -> Result<NormalizationConfig, Failure> {
        match &self.norm_config {
            None => Ok(NormalizationConfig::default()),
            Some(p) => NormalizationConfig::load(p).map_err(Failure::input),
        }
    }
}

struct Log {
    header: Option<LogHeader>,
    corpus: Corpus,
}

fn load_log(path: &Path, norm: &NormalizationConfig) -> Result<Log, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::input)?;
    let header = text.lines().next().and_then(LogHeader::parse);
    let events = read_log_strict(text.as_bytes()).map_err(|e| match e {
        LogError::Decode { line, error } => {
            Failure::input(anyhow!("{}: line {line}: {} ({error})", path.display(), error.name()))
        }
        other => Failure::input(other),
    })?;
    Ok(Log {
        header,
        corpus: build_sessions(events, norm),
    })
}

fn write_out(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::input)
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn extract_failure(e: ExtractError) -> Failure {
    match e {
        ExtractError::UnknownSession(_) => Failure::not_found(e),
        ExtractError::InvalidPolicy(_) => Failure::input(e),
        ExtractError::NoFixations => Failure::empty(e),
    }
}

pub fn serve(a: ServeArgs) -> Result<(), Failure> {
    let mut cfg = ServiceConfig::new(a.listen, a.log);
    cfg.max_batch_bytes = a.max_batch_bytes;
    cfg.cors_allowlist = a.cors_origins;
    cfg.token = a.token;
    cfg.norm = a.norm.load()?;
    cfg.policy = a.policy.resolve()?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Failure::input(anyhow!("--alpha must lie in (0, 1)")));
    }
    cfg.alpha = a.alpha;
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let rt = tokio::runtime::Runtime::new().map_err(Failure::runtime)?;
    rt.block_on(tmfix_service::serve(cfg)).map_err(|e| match e {
        tmfix_service::ServiceError::InvalidOrigin(_) => Failure::input(e),
        e => Failure::runtime(e),
    })
}

pub fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let mut cfg = match &a.config {
        None => SimConfig::default(),
        Some(p) => SimConfig::load(p).map_err(Failure::input)?,
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let norm = a.norm.load()?;
    let out = generate(&cfg, &norm).map_err(Failure::input)?;
    out.write_to(&cfg, &a.out_dir).map_err(Failure::input)?;
    let x = analytic_expectations(&cfg).map_err(Failure::input)?;
    let mut s = String::new();
    let _ = writeln!(s, "wrote {} events for {} sessions to {}", out.events.len(), cfg.n_sessions, a.out_dir.display());
    let _ = writeln!(s, "expected sessions with any found stem   {:.2}%", 100.0 * x.p_any_found);
    let _ = writeln!(s, "expected found / other mean             {:.2} s / {:.2} s", x.found_mean_ms / 1000.0, x.other_mean_ms / 1000.0);
    let _ = writeln!(
        s,
        "midpoint {:.2} s error                  interest {:.4} / background {:.4}",
        x.midpoint_ms / 1000.0,
        x.midpoint_error.interest_miss,
        x.midpoint_error.background_false_alarm
    );
    let p = &x.median_policy;
    let _ = writeln!(
        s,
        "median x {:.2} policy (threshold {:.2} s)  P {:.4}  R {:.4}  F1 {:.4}",
        p.factor,
        p.threshold_ms / 1000.0,
        p.precision,
        p.recall,
        p.f1
    );
    print!("{s}");
    Ok(())
}

pub fn analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    let norm = a.norm.load()?;
    let log = load_log(&a.input, &norm)?;
    if let Some(id) = &a.session {
        let policy = a.policy.resolve()?;
        let session = log
            .corpus
            .session(id)
            .ok_or_else(|| Failure::not_found(anyhow!("no admitted session {id:?}")))?;
        let json = analyze_session(session, &norm, &policy, a.alpha)
            .map_err(extract_failure)?
            .to_json();
        return match &a.out {
            Some(p) => write_out(p, &json),
            None => {
                print!("{json}");
                Ok(())
            }
        };
    }
    let report = corpus_report(&log.corpus, &norm, a.alpha).map_err(|e| match e {
        StatsError::EmptyCorpus => Failure::empty(e),
    })?;
    if let Some(p) = &a.out {
        write_out(p, &report.to_json())?;
    }
    print!("{}", render_table(&report));
    Ok(())
}

pub fn extract(a: ExtractArgs) -> Result<(), Failure> {
    let norm = a.norm.load()?;
    let policy = a.policy.resolve()?;
    let log = load_log(&a.input, &norm)?;
    let session = log
        .corpus
        .session(&a.session)
        .ok_or_else(|| Failure::not_found(anyhow!("no admitted session {:?}", a.session)))?;
    let result = extraction_result(session, &policy, &norm).map_err(extract_failure)?;
    print!("{}", pretty(&result));
    Ok(())
}

/// Checks that the truth file describes the same corpus as the log.
fn check_truth(log: &Log, truth: &GroundTruth) -> Result<(), Failure> {
    if let Some(h) = &log.header {
        if h.seed != truth.seed || h.rng != truth.rng {
            return Err(Failure::input(anyhow!(
                "truth was generated with {} seed {}, log with {} seed {}",
                truth.rng,
                truth.seed,
                h.rng,
                h.seed
            )));
        }
    }
    let logged: BTreeSet<&str> = log.corpus.sessions.iter().map(|s| s.session_id.as_str()).collect();
    let truthful: BTreeSet<&str> = truth.sessions.keys().map(String::as_str).collect();
    if logged != truthful {
        let missing = truthful.symmetric_difference(&logged).next().expect("sets differ");
        return Err(Failure::input(anyhow!(
            "truth and log disagree on session ids ({} in truth, {} in log; e.g. {missing:?})",
            truthful.len(),
            logged.len()
        )));
    }
    Ok(())
}

fn render_evaluation(r: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "sessions         {}", r.sessions.len());
    let _ = writeln!(s, "macro precision  {:.4}", r.macro_precision);
    let _ = writeln!(s, "macro recall     {:.4}", r.macro_recall);
    let _ = writeln!(s, "macro F1         {:.4}", r.macro_f1);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<16} {:>9} {:>6} {:>9} {:>9} {:>9}", "session", "extracted", "truth", "precision", "recall", "f1");
    for x in &r.sessions {
        let _ = writeln!(
            s,
            "{:<16} {:>9} {:>6} {:>9.4} {:>9.4} {:>9.4}",
            x.session_id, x.extracted, x.truth, x.precision, x.recall, x.f1
        );
    }
    s
}

pub fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let norm = a.norm.load()?;
    let policy = a.policy.resolve()?;
    let log = load_log(&a.input, &norm)?;
    let text = std::fs::read_to_string(&a.truth)
        .with_context(|| format!("cannot read {}", a.truth.display()))
        .map_err(Failure::input)?;
    let truth: GroundTruth = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a ground-truth file", a.truth.display()))
        .map_err(Failure::input)?;
    check_truth(&log, &truth)?;
    let sets: BTreeMap<String, BTreeSet<Stem>> = truth.fixated_interest();
    let report = evaluate_extraction(&log.corpus, &policy, &norm, &sets).map_err(|e| match e {
        ExtractError::UnknownSession(_) => Failure::input(e),
        e => extract_failure(e),
    })?;
    if let Some(p) = &a.out {
        write_out(p, &pretty(&report))?;
    }
    print!("{}", render_evaluation(&report));
    Ok(())
}
