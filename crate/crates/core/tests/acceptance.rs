//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::HashSet;
use std::process::Command;
use std::time::Instant;

use chancecheck::ledger::KnowledgeScope;
use chancecheck::mc::{run_replicates, Comparison, ReplicateModel, ReplicateRng};
use chancecheck::occam::{self, Hypothesis, HypothesisHistory, SequenceSpace};
use chancecheck::prob::{best_of_m, binom_pmf, binom_sf, binom_sf_strict, wilson_interval, DEFAULT_INFORMATIVE_CUTOFF};
use chancecheck::sequence::{self, PredictionEvent, SystemTrace};
use chancecheck::strategy::{self, Mode, Outcome, PriceSeries};
use chancecheck::{AttemptRecord, BinomialQuery, Ledger, Probability};
use num_rational::BigRational;

type Criterion = (&'static str, fn() -> Check);

struct Check {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Check {
    Check {
        ok,
        detail: detail.into(),
    }
}

fn q(k: u64, n: u64, p: f64) -> BinomialQuery {
    BinomialQuery::new(k, n, p).unwrap()
}

fn prob(v: f64) -> Probability {
    Probability::new(v).unwrap()
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    lo <= x && x <= hi
}

fn c1() -> Check {
    let v = binom_sf(&q(8, 10, 0.5)).value();
    let exact = BigRational::new(56.into(), 1024.into());
    let ok = BigRational::from_float(v) == Some(exact) && v == 0.0546875;
    let shown = format!("{:.1}%", v * 100.0);
    check(ok && shown == "5.5%", format!("binom_sf(8,10,0.5) = {v} = 56/1024, shown as {shown}"))
}

fn c2() -> Check {
    let v = binom_sf(&q(600, 1000, 0.5)).value();
    check(within(v, 1.33e-10, 1.47e-10), format!("binom_sf(600,1000,0.5) = {v:.6e}"))
}

fn c3() -> Check {
    let v = best_of_m(&q(8, 10, 0.5), 2).unwrap().value();
    check(within(v, 0.106, 0.107), format!("best_of_m(8,10,0.5,2) = {v}"))
}

fn c4() -> Check {
    let v = binom_sf(&q(65, 100, 0.5)).value();
    check(within(v, 0.0017, 0.0019), format!("binom_sf(65,100,0.5) = {v:.6e}"))
}

fn c5() -> Check {
    let a = binom_pmf(&q(50, 1_000_000, 5e-5)).value();
    let b = binom_sf_strict(&q(50, 1_000_000, 5e-5)).value();
    let c = binom_pmf(&q(5, 10, 5e-5)).value();
    check(
        within(a, 0.0560, 0.0568) && within(b, 0.45, 0.47) && within(c, 7.8e-20, 8.0e-20),
        format!("pmf(50;1e6,5e-5) = {a:.5}, P[X>50] = {b:.5}, pmf(5;10,5e-5) = {c:.4e}"),
    )
}

fn c6() -> Check {
    let a = binom_sf(&q(301, 500, 0.6)).value();
    let b = binom_sf(&q(251, 500, 0.4)).value();
    let losing: Vec<f64> = [10, 50, 100]
        .iter()
        .map(|&n| strategy::losing_prob(n, prob(0.6)).unwrap().value())
        .collect();
    let expected = [0.166, 0.057, 0.017];
    let lose_ok = losing.iter().zip(expected).all(|(v, e)| (v - e).abs() <= 0.001);
    check(
        within(a, 0.481, 0.485) && within(b, 2.3e-6, 2.7e-6) && lose_ok,
        format!("sf(301,500,0.6) = {a:.5}, sf(251,500,0.4) = {b:.4e}, losing = {losing:.4?}"),
    )
}

fn c7() -> Check {
    let cutoff = prob(DEFAULT_INFORMATIVE_CUTOFF);
    let both = common::two_one_percent_results().reviewer_combine(&["a", "b"], cutoff).unwrap().combined.value();
    let mut l = Ledger::new();
    l.register(AttemptRecord::new("good", "x", 1, 1, 1, 0.01)).unwrap();
    l.register(AttemptRecord::new("null", "y", 2, 1, 0, 0.01)).unwrap();
    let mixed = l.reviewer_combine(&["good", "null"], cutoff).unwrap().combined.value();
    check(
        both == 0.01 * 0.01 && within(mixed, 0.0198, 0.0200),
        format!("[1%, 1%] -> {both:e}, [1%, 100%] -> {mixed}"),
    )
}

fn c8() -> Check {
    let exact = strategy::st_petersburg_ev(10) == 5.0
        && strategy::st_petersburg_ab(10).unwrap() == 3.25
        && strategy::st_petersburg_ab(200).unwrap() == 50.75;
    let curve: Vec<f64> = (10..=200)
        .step_by(10)
        .map(|l| strategy::st_petersburg_beat_prob(l).unwrap().value())
        .collect();
    let monotone = curve.windows(2).all(|w| w[0] <= w[1]);
    let below = curve.iter().all(|&v| v < 0.5);
    let last = *curve.last().unwrap();
    check(
        exact && monotone && below && within(last, 0.46, 0.5) && last < 0.5,
        format!("ev/ab exact = {exact}, monotone = {monotone}, L=10 {:.4}, L=200 {last:.4}", curve[0]),
    )
}

fn c9() -> Check {
    let trace = SystemTrace::with_unit_clock(common::REFERENCE_STATES.to_vec()).unwrap();
    let cps = sequence::change_points(&trace);
    let e1 = PredictionEvent::new(1, 8, 2);
    let p1 = sequence::event_random_prob(&trace, &e1).unwrap().value();
    let with_dep = sequence::compound_prob(&trace, &[e1, PredictionEvent::new(9, 12, 2)]).unwrap().value();
    let (t, ev) = sequence::coin_game(&[2], &[0, 0]).unwrap();
    let dependent = sequence::compound_prob(&t, &ev).unwrap().value();
    let (t, ev) = sequence::coin_game(&[2, 1], &[0, 1]).unwrap();
    let independent = sequence::compound_prob(&t, &ev).unwrap().value();
    check(
        cps == [8, 13, 20] && p1 == 0.125 && with_dep == 0.125 && dependent == 0.5 && independent == 0.25,
        format!(
            "change points {cps:?}, P(E1) = {p1}, with dependent E2 {with_dep}, coin game {dependent} / {independent}"
        ),
    )
}

/// Deterministic pseudo-random predicate over binary sequences.
fn hashed_accept(seq: &[u32], salt: u64, density: f64) -> bool {
    let mut h = salt;
    for &s in seq {
        h = h.wrapping_mul(0x100_0000_01B3).wrapping_add(s as u64 + 1);
        h ^= h >> 29;
    }
    let mut rng = ReplicateRng::from_seed(h);
    rng.uniform() < density
}

fn c10() -> Check {
    let mut rng = ReplicateRng::from_seed(2024);
    let mut failures = 0;
    for _ in 0..200 {
        let n = 1 + rng.below(12) as usize;
        let (s1, s2) = (rng.next_u64(), rng.next_u64());
        let (d1, d2) = (rng.uniform(), rng.uniform());
        let space = SequenceSpace::new(2, n as u32).unwrap();
        let history = HypothesisHistory::from_hypotheses([
            Hypothesis::from_rule(1, move |s| hashed_accept(s, s1, d1)),
            Hypothesis::from_rule(2, move |s| hashed_accept(s, s2, d2)),
        ])
        .unwrap();

        let mut union = HashSet::new();
        for code in 0..1u32 << n {
            let seq: Vec<u32> = (0..n).map(|j| (code >> j) & 1).collect();
            if hashed_accept(&seq, s1, d1) || hashed_accept(&seq, s2, d2) {
                union.insert(seq);
            }
        }
        let ntph = occam::ntph(&history, &space).unwrap();
        let rpp = occam::random_predict_prob(&history, &space).unwrap().value();
        let pt = occam::prob_true(&history, &space).unwrap().value();
        if ntph != union.len() as u64 || pt != 1.0 - rpp {
            failures += 1;
        }
    }
    check(failures == 0, format!("{} of 200 predicate pairs agree with the set-union oracle", 200 - failures))
}

fn c11() -> Check {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let eight = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
    let mut gen = ReplicateRng::from_seed(11);
    let mut inside = 0;
    let mut identical = true;
    for i in 0..100u64 {
        let n = 1 + gen.below(30);
        let k = gen.below(n + 1);
        let p = gen.uniform();
        let model = ReplicateModel::new(n, prob(p), k, Comparison::AtLeast).unwrap();
        let hits8 = eight.install(|| run_replicates(&model, 100_000, i));
        let hits1 = one.install(|| run_replicates(&model, 100_000, i));
        identical &= hits1 == hits8;
        let band = wilson_interval(hits8, 100_000, 0.999).unwrap();
        if band.contains(model.exact().value()) {
            inside += 1;
        }
    }
    check(
        inside >= 99 && identical,
        format!("{inside}/100 exact values inside the 99.9% Wilson band; 1 vs 8 threads identical = {identical}"),
    )
}

fn c12() -> Check {
    let prices =
        PriceSeries::from_csv(std::fs::File::open(common::bundled_prices()).unwrap(), "synthetic_400.csv").unwrap();
    let estimates: Vec<f64> = (0..100u64)
        .map(|seed| {
            let target = *strategy::random_equity_line(&prices, seed).last().unwrap();
            strategy::equity_uncertainty(target, &prices, 10_000, seed, 0.95).unwrap().point.value()
        })
        .collect();
    let in_band = estimates.iter().filter(|&&e| within(e, 0.45, 0.55)).count();
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let oracle = strategy::equity_uncertainty(strategy::oracle_final_equity(&prices), &prices, 10_000, 1, 0.95)
        .unwrap()
        .point
        .value();
    check(
        in_band >= 99 && oracle < 0.01,
        format!(
            "{in_band}/100 seeds in [0.45, 0.55] (need 99); mean over seeds {mean:.3}; oracle strategy {oracle}. \
             A fixed random line's estimate is its percentile among random lines, uniform on [0, 1] across seeds"
        ),
    )
}

fn c13() -> Check {
    let l = common::ten_attempt_ledger();
    let r = l.assess("result", &KnowledgeScope::All).unwrap();
    let single = binom_sf(&q(65, 100, 0.5)).value();
    let formula = 1.0 - (1.0 - single).powi(10);
    let ledger_ok = (r.uncertainty.value() - formula).abs() <= 1e-12 && r.warnings.iter().any(|w| w.contains("16%"));

    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let events = dir.path().join("events.txt");
    std::fs::write(&trace, common::reference_trace_text()).unwrap();
    std::fs::write(&events, "1 8 2\n9 20 2\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_chancecheck"))
        .args(["sequence", "--trace", trace.to_str().unwrap(), "--events", events.to_str().unwrap(), "--json"])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let e2 = &v["result"]["events"][1];
    let seq_ok = out.status.success()
        && e2["favourable"] == 5
        && e2["window_len"] == 12
        && e2["probability"].as_f64() == Some(5.0 / 12.0)
        && v["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("5/7"));
    check(
        ledger_ok && seq_ok,
        format!(
            "ledger {} vs formula {formula} with 16% warning = {ledger_ok}; sequence command 5/12 with 5/7 warning = {seq_ok}",
            r.uncertainty
        ),
    )
}

fn c14() -> Check {
    use Mode::{Live as L, Virtual as V};
    let mut eight_two = vec![Outcome::Win; 8];
    eight_two.extend([Outcome::Loss; 2]);
    let five_five = [Outcome::Win, Outcome::Loss].repeat(5);

    let modes = |stream: Vec<Outcome>| -> (Vec<Mode>, f64) {
        let rows = strategy::replay_control(10, prob(0.1), prob(0.5), stream).unwrap();
        (rows.iter().map(|r| r.mode).collect(), rows.last().unwrap().prob.value())
    };
    let (a, pa) = modes(eight_two);
    let (b, pb) = modes(five_five);
    let want_a = vec![V, V, V, L, L, L, L, L, L, L];
    let want_b = vec![V; 10];
    check(
        a == want_a && b == want_b && pa == 56.0 / 1024.0 && pb == 638.0 / 1024.0,
        format!("8/2 ends LIVE at p = {pa}, 5/5 ends VIRTUAL at p = {pb}"),
    )
}

fn main() {
    let criteria: [Criterion; 14] = [
        ("exact tail of 8 of 10 fair trials", c1),
        ("600 of 1000 fair trials", c2),
        ("best of two attempts", c3),
        ("65 of 100 fair trials", c4),
        ("rare-event binomial", c5),
        ("trading track records and rigged coin", c6),
        ("reviewer combination", c7),
        ("doubling strategy curve", c8),
        ("non-stationary sequence", c9),
        ("hypothesis union oracle", c10),
        ("Monte Carlo against exact values", c11),
        ("random equity experiment", c12),
        ("quoted-figure discrepancies", c13),
        ("control automaton replay", c14),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let c = f();
        if !c.ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.2}s]",
            if c.ok { "PASS" } else { "FAIL" },
            i + 1,
            c.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
