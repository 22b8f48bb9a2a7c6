use std::fmt::Write as _;

use serde::Serialize;

use super::report::{pct, read_input, source_name, InputDigest, Rendered, Report};
use super::*;
use crate::error::Result;
use crate::ledger::{AttemptRecord, CombineReport, KnowledgeScope, LedgerFile, UncertaintyReport};
use crate::mc::{Comparison, McEstimate, ReplicateRng};
use crate::occam::{self, HypothesisComparison};
use crate::prob::{self, BinomialQuery};
use crate::sequence::{self, EventAssessment, SystemTrace};
use crate::strategy::{self, ControlRow, Mode, PriceSeries, StPetersburgReport, TradeRecord};

pub fn dispatch(command: &Command) -> Result<Rendered> {
    match command {
        Command::Eval(a) => eval(a),
        Command::Monitor(a) => monitor(a),
        Command::Stpetersburg(a) => stpetersburg(a),
        Command::EquitySim(a) => equity_sim(a),
        Command::Ledger(LedgerCommand::Register(a)) => ledger_register(a),
        Command::Ledger(LedgerCommand::Uncertainty(a)) => ledger_uncertainty(a),
        Command::Ledger(LedgerCommand::Combine(a)) => ledger_combine(a),
        Command::Sequence(a) => sequence(a),
        Command::Occam(a) => occam(a),
        Command::Binom(a) => binom(a),
    }
}

fn comparison_name(c: Comparison) -> &'static str {
    match c {
        Comparison::AtLeast => "equal_or_better",
        Comparison::Exceeds => "better",
    }
}

#[derive(Debug, Serialize)]
struct BaselineInfo {
    p0: Probability,
    /// `given` or `prices`.
    source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    direction: Option<Direction>,
}

fn resolve_baseline(args: &BaselineArgs, digest: &mut InputDigest) -> Result<BaselineInfo> {
    match (args.baseline, &args.prices, args.direction) {
        (Some(p0), _, _) => {
            digest.param("baseline", p0);
            Ok(BaselineInfo {
                p0,
                source: "given",
                direction: None,
            })
        }
        (None, Some(path), Some(direction)) => {
            let bytes = read_input(path)?;
            digest.bytes("prices", &bytes);
            let direction = Direction::from(direction);
            digest.param("direction", direction);
            let prices = PriceSeries::from_csv(bytes.as_slice(), &source_name(path))?;
            Ok(BaselineInfo {
                p0: strategy::baseline_win_prob(&prices, direction),
                source: "prices",
                direction: Some(direction),
            })
        }
        _ => unreachable!("clap enforces --baseline or --prices with --direction"),
    }
}

fn load_trades(path: &std::path::Path, digest: &mut InputDigest) -> Result<Vec<TradeRecord>> {
    let bytes = read_input(path)?;
    digest.bytes("trades", &bytes);
    strategy::ingest_trades(bytes.as_slice(), &source_name(path))
}

#[derive(Debug, Serialize)]
struct EvalResult {
    wins: u64,
    trades: u64,
    baseline: BaselineInfo,
    attempts: u64,
    comparison: &'static str,
    uncertainty: Probability,
    risk: Probability,
    significant: bool,
    verdict: &'static str,
}

fn eval(a: &EvalArgs) -> Result<Rendered> {
    let mut digest = InputDigest::new("eval");
    let trades = load_trades(&a.trades, &mut digest)?;
    let baseline = resolve_baseline(&a.baseline, &mut digest)?;
    let comparison = Comparison::from(a.compare);
    digest
        .param("attempts", a.attempts)
        .param("risk", a.risk)
        .param("compare", comparison_name(comparison));

    let (wins, n) = strategy::win_count(&trades);
    let uncertainty = strategy::track_record_uncertainty(&trades, baseline.p0, a.attempts, comparison)?;
    let significant = uncertainty.value() < a.risk.value();
    let verdict = if significant { "significant" } else { "not significant" };

    let mut warnings = Vec::new();
    let sized = trades.iter().filter(|t| t.size.is_some()).count();
    if sized > 0 {
        warnings.push(format!("{sized} trades carry a size; sizes are not used as weights"));
    }

    let relation = if comparison == Comparison::Exceeds { ">" } else { ">=" };
    let mut text = String::new();
    let _ = writeln!(text, "wins          {wins}");
    let _ = writeln!(text, "trades        {n}");
    let _ = writeln!(text, "p0            {} ({})", baseline.p0, baseline.source);
    let _ = writeln!(text, "attempts      {}", a.attempts);
    let _ = writeln!(text, "uncertainty   {}  P[random wins {relation} {wins}]", pct(uncertainty.value()));
    let _ = writeln!(text, "verdict       {verdict} at risk {}", a.risk);

    let report = Report {
        command: "eval",
        inputs_digest: digest.finish(),
        result: EvalResult {
            wins,
            trades: n,
            baseline,
            attempts: a.attempts,
            comparison: comparison_name(comparison),
            uncertainty,
            risk: a.risk,
            significant,
            verdict,
        },
        warnings,
    };
    Rendered::new(&report, text)
}

#[derive(Debug, Serialize)]
struct MonitorResult {
    window: u64,
    threshold: Probability,
    baseline: BaselineInfo,
    rows: Vec<ControlRow>,
    final_mode: Option<Mode>,
    transitions: u64,
}

fn monitor(a: &MonitorArgs) -> Result<Rendered> {
    let mut digest = InputDigest::new("monitor");
    let trades = load_trades(&a.trades, &mut digest)?;
    let baseline = resolve_baseline(&a.baseline, &mut digest)?;
    digest.param("window", a.window).param("threshold", a.threshold);

    let rows = strategy::replay_control(
        a.window as usize,
        a.threshold,
        baseline.p0,
        trades.iter().map(|t| t.outcome),
    )?;
    let mut transitions = 0;
    let mut previous = Mode::Live;
    let mut text = String::from("index,outcome,wins,window,p,mode\n");
    for row in &rows {
        if row.mode != previous {
            transitions += 1;
            previous = row.mode;
        }
        let _ = writeln!(
            text,
            "{},{},{},{},{:.6},{}",
            row.index,
            row.outcome,
            row.wins,
            row.window_len,
            row.prob.value(),
            row.mode
        );
    }

    let report = Report {
        command: "monitor",
        inputs_digest: digest.finish(),
        result: MonitorResult {
            window: a.window,
            threshold: a.threshold,
            baseline,
            final_mode: rows.last().map(|r| r.mode),
            rows,
            transitions,
        },
        warnings: Vec::new(),
    };
    Rendered::new(&report, text)
}

#[derive(Debug, Serialize)]
struct StPetersburgResult {
    rows: Vec<StPetersburgReport>,
}

fn stpetersburg(a: &StPetersburgArgs) -> Result<Rendered> {
    let mut digest = InputDigest::new("stpetersburg");
    digest.param("max", a.max_tosses).param("start", a.start).param("step", a.step);
    let rows = (a.start..=a.max_tosses)
        .step_by(a.step as usize)
        .map(strategy::st_petersburg)
        .collect::<Result<Vec<_>>>()?;

    let mut text = String::from("L,ev,ab,beat_prob\n");
    let mut warnings = Vec::new();
    for r in &rows {
        let _ = writeln!(text, "{},{},{},{}", r.tosses, r.ev, r.ab, r.beat_prob);
        if r.boundary {
            warnings.push(format!(
                "L = {}: the random strategy is the doubling strategy's first bet, so it wins with probability {}",
                r.tosses, r.beat_prob
            ));
        }
    }
    let report = Report {
        command: "stpetersburg",
        inputs_digest: digest.finish(),
        result: StPetersburgResult { rows },
        warnings,
    };
    Rendered::new(&report, text)
}

#[derive(Debug, Serialize)]
struct EquitySimResult {
    seed: u64,
    days: usize,
    final_equity: f64,
    /// `random`, `oracle` or `value`.
    target: &'static str,
    target_equity: f64,
    estimate: McEstimate,
    times: Vec<String>,
    equity: Vec<f64>,
}

fn equity_sim(a: &EquitySimArgs) -> Result<Rendered> {
    let mut digest = InputDigest::new("equity-sim");
    let bytes = read_input(&a.prices)?;
    digest.bytes("prices", &bytes);
    let prices = PriceSeries::from_csv(bytes.as_slice(), &source_name(&a.prices))?;
    let equity = strategy::equity_path(&prices, &mut ReplicateRng::from_seed(a.seed));
    let final_equity = *equity.last().expect("a price series has at least two points");
    let (target, target_equity) = match a.target {
        EquityTarget::Random => ("random", final_equity),
        EquityTarget::Oracle => ("oracle", strategy::oracle_final_equity(&prices)),
        EquityTarget::Value(v) => ("value", v),
    };
    digest
        .param("seed", a.seed)
        .param("replicates", a.replicates)
        .param("target", target_equity)
        .param("confidence", a.confidence);
    let estimate = strategy::equity_uncertainty(target_equity, &prices, a.replicates, a.seed, a.confidence.value())?;

    let mut text = String::new();
    let _ = writeln!(text, "# seed {}  replicates {}", a.seed, a.replicates);
    let _ = writeln!(text, "# final equity {final_equity}");
    let _ = writeln!(text, "# target {target} {target_equity}");
    let _ = writeln!(
        text,
        "# P[random >= target] {}  {}% interval [{}, {}]",
        pct(estimate.point.value()),
        a.confidence.value() * 100.0,
        estimate.interval.lower,
        estimate.interval.upper
    );
    text.push_str("time,equity\n");
    for (t, e) in prices.times().iter().zip(&equity) {
        let _ = writeln!(text, "{t},{e}");
    }

    let report = Report {
        command: "equity-sim",
        inputs_digest: digest.finish(),
        result: EquitySimResult {
            seed: a.seed,
            days: prices.len(),
            final_equity,
            target,
            target_equity,
            estimate,
            times: prices.times().to_vec(),
            equity,
        },
        warnings: Vec::new(),
    };
    Rendered::new(&report, text)
}

fn ledger_bytes(path: &std::path::Path) -> Result<Vec<u8>> {
    match std::fs::read(path) {
        Ok(b) => Ok(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(crate::error::Error::io(path, e)),
    }
}

#[derive(Debug, Serialize)]
struct RegisterResult {
    record: AttemptRecord,
    records: usize,
}

fn ledger_register(a: &RegisterArgs) -> Result<Rendered> {
    let mut digest = InputDigest::new("ledger register");
    digest.bytes("ledger", &ledger_bytes(&a.ledger)?);
    let record = AttemptRecord::new(&a.id, &a.agent, a.ts, a.n, a.k, a.p0.value()).with_note(&a.note);
    digest
        .param("id", &a.id)
        .param("agent", &a.agent)
        .param("ts", a.ts)
        .param("n", a.n)
        .param("k", a.k)
        .param("p0", a.p0)
        .param("note", &a.note);
    let mut file = LedgerFile::open(&a.ledger)?;
    file.register(record.clone())?;
    let text = format!(
        "registered {} ({} of {} at p0 = {}, agent {}); ledger holds {} attempts\n",
        record.id,
        record.n_successes,
        record.n_predictions,
        record.p0,
        record.agent,
        file.ledger().len()
    );
    let report = Report {
        command: "ledger register",
        inputs_digest: digest.finish(),
        result: RegisterResult {
            record,
            records: file.ledger().len(),
        },
        warnings: Vec::new(),
    };
    Rendered::new(&report, text)
}

#[derive(Debug, Serialize)]
struct UncertaintyResult {
    result_id: String,
    /// `all` or the sorted agent list.
    scope: Vec<String>,
    attempts: u64,
    single_attempt: Probability,
    uncertainty: Probability,
}

fn ledger_uncertainty(a: &UncertaintyArgs) -> Result<Rendered> {
    let mut digest = InputDigest::new("ledger uncertainty");
    let bytes = ledger_bytes(&a.ledger)?;
    digest.bytes("ledger", &bytes).param("id", &a.id);
    let ledger = crate::ledger::Ledger::from_reader(bytes.as_slice(), &source_name(&a.ledger))?;
    let (scope, scope_names) = if a.scope.all {
        digest.param("scope", "all");
        (KnowledgeScope::All, vec!["all".to_string()])
    } else {
        let scope = KnowledgeScope::agents(a.scope.agents.iter().cloned())?;
        let names: Vec<String> = match &scope {
            KnowledgeScope::Agents(set) => set.iter().cloned().collect(),
            KnowledgeScope::All => unreachable!(),
        };
        digest.param("scope", names.join(","));
        (scope, names)
    };
    let UncertaintyReport {
        result_id,
        attempts,
        single_attempt,
        uncertainty,
        warnings,
    } = ledger.assess(&a.id, &scope)?;

    let mut text = String::new();
    let _ = writeln!(text, "result        {result_id}");
    let _ = writeln!(text, "scope         {}", scope_names.join(","));
    let _ = writeln!(text, "attempts      {attempts}");
    let _ = writeln!(text, "single        {}", pct(single_attempt.value()));
    let _ = writeln!(text, "uncertainty   {}", pct(uncertainty.value()));
    let report = Report {
        command: "ledger uncertainty",
        inputs_digest: digest.finish(),
        result: UncertaintyResult {
            result_id,
            scope: scope_names,
            attempts,
            single_attempt,
            uncertainty,
        },
        warnings,
    };
    Rendered::new(&report, text)
}

#[derive(Debug, Serialize)]
struct CombinePart {
    result_id: String,
    attempts: u64,
    single_attempt: Probability,
    uncertainty: Probability,
}

#[derive(Debug, Serialize)]
struct CombineResult {
    parts: Vec<CombinePart>,
    cutoff: Probability,
    combined: Probability,
}

fn ledger_combine(a: &CombineArgs) -> Result<Rendered> {
    let mut digest = InputDigest::new("ledger combine");
    let bytes = ledger_bytes(&a.ledger)?;
    digest
        .bytes("ledger", &bytes)
        .param("ids", a.ids.join(","))
        .param("cutoff", a.cutoff);
    let ledger = crate::ledger::Ledger::from_reader(bytes.as_slice(), &source_name(&a.ledger))?;
    let ids: Vec<&str> = a.ids.iter().map(String::as_str).collect();
    let CombineReport {
        parts,
        cutoff,
        combined,
        warnings,
    } = ledger.reviewer_combine(&ids, a.cutoff)?;

    let mut text = String::new();
    for p in &parts {
        let _ = writeln!(text, "{:<12}  attempts {:<4}  {}", p.result_id, p.attempts, pct(p.uncertainty.value()));
    }
    let _ = writeln!(text, "combined      {}", pct(combined.value()));
    let report = Report {
        command: "ledger combine",
        inputs_digest: digest.finish(),
        result: CombineResult {
            parts: parts
                .into_iter()
                .map(|p| CombinePart {
                    result_id: p.result_id,
                    attempts: p.attempts,
                    single_attempt: p.single_attempt,
                    uncertainty: p.uncertainty,
                })
                .collect(),
            cutoff,
            combined,
        },
        warnings,
    };
    Rendered::new(&report, text)
}

#[derive(Debug, Serialize)]
struct SequenceResult {
    change_points: Vec<i64>,
    events: Vec<EventAssessment>,
    compound: Probability,
}

fn sequence(a: &SequenceArgs) -> Result<Rendered> {
    let mut digest = InputDigest::new("sequence");
    let trace_bytes = read_input(&a.trace)?;
    let event_bytes = read_input(&a.events)?;
    digest.bytes("trace", &trace_bytes).bytes("events", &event_bytes);
    let utf8 = |b: &[u8], p: &std::path::Path| {
        String::from_utf8(b.to_vec()).map_err(|_| crate::error::Error::parse(source_name(p), 1, "not UTF-8"))
    };
    let trace = SystemTrace::parse(&utf8(&trace_bytes, &a.trace)?, &source_name(&a.trace))?;
    let events = sequence::parse_events(&utf8(&event_bytes, &a.events)?, &source_name(&a.events))?;
    let r = sequence::assess_events(&trace, &events)?;

    let mut text = String::new();
    let cps: Vec<String> = r.change_points.iter().map(|t| t.to_string()).collect();
    let _ = writeln!(text, "change points {}", cps.join(" "));
    for (i, e) in r.events.iter().enumerate() {
        let class = match e.dependence {
            sequence::Dependence::Dependent => "dependent",
            sequence::Dependence::Independent => "independent",
        };
        let _ = writeln!(
            text,
            "event {} [{}, {}] -> {}  p = {}/{} = {:.6}  {class}",
            i + 1,
            e.event.start,
            e.event.end,
            e.event.value,
            e.favourable,
            e.window_len,
            e.probability.value()
        );
    }
    let _ = writeln!(text, "compound      {}", pct(r.compound.value()));
    let report = Report {
        command: "sequence",
        inputs_digest: digest.finish(),
        result: SequenceResult {
            change_points: r.change_points,
            events: r.events,
            compound: r.compound,
        },
        warnings: r.warnings,
    };
    Rendered::new(&report, text)
}

#[derive(Debug, Serialize)]
struct HistorySummary {
    hypotheses: usize,
    nph_latest: u64,
    ntph: u64,
    random_predict_prob: Probability,
    prob_true: Probability,
}

#[derive(Debug, Serialize)]
struct OccamResult {
    cardinality: u32,
    length: u32,
    space_size: u64,
    history: HistorySummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    against: Option<HistorySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<HypothesisComparison>,
}

fn summarize(
    space: &occam::SequenceSpace,
    history: &occam::HypothesisHistory,
) -> Result<HistorySummary> {
    let latest = history.latest().expect("loaded histories are non-empty");
    Ok(HistorySummary {
        hypotheses: history.len(),
        nph_latest: occam::nph(latest, space)?,
        ntph: occam::ntph(history, space)?,
        random_predict_prob: occam::random_predict_prob(history, space)?,
        prob_true: occam::prob_true(history, space)?,
    })
}

fn occam(a: &OccamArgs) -> Result<Rendered> {
    let mut digest = InputDigest::new("occam");
    for p in &a.history {
        digest.bytes("history", &read_input(p)?);
    }
    for p in &a.against {
        digest.bytes("against", &read_input(p)?);
    }
    digest.param("budget", a.budget);

    let (space, history) = occam::load_history(&a.history)?;
    let space = space.with_budget(a.budget);
    let space_size = space.size()?;
    let summary = summarize(&space, &history)?;
    let (against, comparison) = if a.against.is_empty() {
        (None, None)
    } else {
        let (other_space, other) = occam::load_history(&a.against)?;
        if other_space.cardinality() != space.cardinality() || other_space.length() != space.length() {
            return Err(crate::error::Error::domain("--against describes a different sequence space"));
        }
        (Some(summarize(&space, &other)?), Some(occam::compare(&history, &other, &space)?))
    };

    let mut text = String::new();
    let _ = writeln!(text, "space         C={} N={} ({} sequences)", space.cardinality(), space.length(), space_size);
    let mut show = |label: &str, s: &HistorySummary| {
        let _ = writeln!(
            text,
            "{label:<13} hypotheses {}  NPH {}  NTPH {}  random {:.6}  true {:.6}",
            s.hypotheses,
            s.nph_latest,
            s.ntph,
            s.random_predict_prob.value(),
            s.prob_true.value()
        );
    };
    show("history", &summary);
    if let Some(s) = &against {
        show("against", s);
    }
    if let Some(c) = &comparison {
        let preferred = match c.preferred {
            occam::Preference::First => "history",
            occam::Preference::Second => "against",
            occam::Preference::Tie => "tie",
        };
        let case = c.case.map_or("tied".to_string(), |n| n.to_string());
        let _ = writeln!(text, "case          {case}");
        let _ = writeln!(text, "preferred     {preferred}");
    }
    let report = Report {
        command: "occam",
        inputs_digest: digest.finish(),
        result: OccamResult {
            cardinality: space.cardinality(),
            length: space.length(),
            space_size,
            history: summary,
            against,
            comparison,
        },
        warnings: Vec::new(),
    };
    Rendered::new(&report, text)
}

#[derive(Debug, Serialize)]
struct BinomResult {
    k: u64,
    n: u64,
    p: Probability,
    attempts: u64,
    pmf: Probability,
    sf: Probability,
    sf_strict: Probability,
    cdf: Probability,
    best_of_m: Probability,
}

fn binom(a: &BinomArgs) -> Result<Rendered> {
    let mut digest = InputDigest::new("binom");
    digest.param("k", a.k).param("n", a.n).param("p", a.p).param("attempts", a.attempts);
    let q = BinomialQuery::new(a.k, a.n, a.p.value())?;
    let r = BinomResult {
        k: a.k,
        n: a.n,
        p: a.p,
        attempts: a.attempts,
        pmf: prob::binom_pmf(&q),
        sf: prob::binom_sf(&q),
        sf_strict: prob::binom_sf_strict(&q),
        cdf: prob::binom_cdf(&q),
        best_of_m: prob::best_of_m(&q, a.attempts)?,
    };
    let mut text = String::new();
    let _ = writeln!(text, "P[X = {}]     {}", a.k, pct(r.pmf.value()));
    let _ = writeln!(text, "P[X >= {}]    {}", a.k, pct(r.sf.value()));
    let _ = writeln!(text, "P[X > {}]     {}", a.k, pct(r.sf_strict.value()));
    let _ = writeln!(text, "P[X <= {}]    {}", a.k, pct(r.cdf.value()));
    if a.attempts > 1 {
        let _ = writeln!(text, "best of {}     {}", a.attempts, pct(r.best_of_m.value()));
    }
    let report = Report {
        command: "binom",
        inputs_digest: digest.finish(),
        result: r,
        warnings: Vec::new(),
    };
    Rendered::new(&report, text)
}
