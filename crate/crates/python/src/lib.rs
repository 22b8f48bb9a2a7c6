//! Python bindings for `chancecheck`.

use chancecheck::ledger::KnowledgeScope;
use chancecheck::mc::{self, Comparison, ReplicateModel};
use chancecheck::occam;
use chancecheck::prob::{self, BinomialQuery, Probability};
use chancecheck::sequence::{self, PredictionEvent, SystemTrace};
use chancecheck::strategy::{self, Mode, Outcome, PriceSeries};
use chancecheck::{AttemptRecord, Error};
use pyo3::exceptions::{PyIOError, PyKeyError, PyMemoryError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotFound(_) => PyKeyError::new_err(e.to_string()),
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Resource(_) => PyMemoryError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for chancecheck::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn query(k: u64, n: u64, p: f64) -> PyResult<BinomialQuery> {
    BinomialQuery::new(k, n, p).py()
}

fn probability(p: f64) -> PyResult<Probability> {
    Probability::new(p).py()
}

fn comparison(strict: bool) -> Comparison {
    if strict {
        Comparison::Exceeds
    } else {
        Comparison::AtLeast
    }
}

/// P[X = k] for X ~ Binomial(n, p).
#[pyfunction]
fn binom_pmf(k: u64, n: u64, p: f64) -> PyResult<f64> {
    Ok(prob::binom_pmf(&query(k, n, p)?).value())
}

/// P[X >= k].
#[pyfunction]
fn binom_sf(k: u64, n: u64, p: f64) -> PyResult<f64> {
    Ok(prob::binom_sf(&query(k, n, p)?).value())
}

/// P[X > k].
#[pyfunction]
fn binom_sf_strict(k: u64, n: u64, p: f64) -> PyResult<f64> {
    Ok(prob::binom_sf_strict(&query(k, n, p)?).value())
}

/// P[X <= k].
#[pyfunction]
fn binom_cdf(k: u64, n: u64, p: f64) -> PyResult<f64> {
    Ok(prob::binom_cdf(&query(k, n, p)?).value())
}

/// 1 - (1 - P[X >= k])^m.
#[pyfunction]
fn best_of_m(k: u64, n: u64, p: f64, m: u64) -> PyResult<f64> {
    Ok(prob::best_of_m(&query(k, n, p)?, m).py()?.value())
}

#[pyfunction]
#[pyo3(signature = (probabilities, cutoff = prob::DEFAULT_INFORMATIVE_CUTOFF))]
fn combine_results(probabilities: Vec<f64>, cutoff: f64) -> PyResult<f64> {
    let ps = probabilities.into_iter().map(probability).collect::<PyResult<Vec<_>>>()?;
    Ok(prob::combine_results(&ps, probability(cutoff)?).py()?.value())
}

/// `(lower, upper)` Wilson score interval.
#[pyfunction]
#[pyo3(signature = (successes, trials, confidence = 0.95))]
fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> PyResult<(f64, f64)> {
    let i = prob::wilson_interval(successes, trials, confidence).py()?;
    Ok((i.lower.value(), i.upper.value()))
}

/// Monte Carlo estimate of P[random wins >= k] (or > k with `strict`).
/// Returns `(point, lower, upper, hits)`.
#[pyfunction]
#[pyo3(signature = (k, n, p, replicates, seed, strict = false, confidence = 0.95))]
#[allow(clippy::too_many_arguments)]
fn estimate_equal_or_better(
    py: Python<'_>,
    k: u64,
    n: u64,
    p: f64,
    replicates: u64,
    seed: u64,
    strict: bool,
    confidence: f64,
) -> PyResult<(f64, f64, f64, u64)> {
    let model = ReplicateModel::new(n, probability(p)?, k, comparison(strict)).py()?;
    let e = py
        .detach(|| mc::estimate_equal_or_better(&model, replicates, seed, confidence))
        .py()?;
    Ok((e.point.value(), e.interval.lower.value(), e.interval.upper.value(), e.hits))
}

/// Uncertainty of a track record of `wins` out of `n` trades.
#[pyfunction]
#[pyo3(signature = (wins, n, p0, attempts = 1, strict = true))]
fn track_record_uncertainty(wins: u64, n: u64, p0: f64, attempts: u64, strict: bool) -> PyResult<f64> {
    Ok(strategy::uncertainty_from_counts(wins, n, probability(p0)?, attempts, comparison(strict))
        .py()?
        .value())
}

/// Probability of ending with more losses than wins over `n` trades.
#[pyfunction]
fn losing_prob(n: u64, p: f64) -> PyResult<f64> {
    Ok(strategy::losing_prob(n, probability(p)?).py()?.value())
}

/// `(ev, ab, beat_prob, boundary)` for the doubling strategy over `tosses`.
#[pyfunction]
fn st_petersburg(tosses: u64) -> PyResult<(f64, f64, f64, bool)> {
    let r = strategy::st_petersburg(tosses).py()?;
    Ok((r.ev, r.ab, r.beat_prob.value(), r.boundary))
}

fn trace(states: Vec<u32>, times: Option<Vec<i64>>) -> PyResult<SystemTrace> {
    match times {
        Some(t) => SystemTrace::new(states, t).py(),
        None => SystemTrace::with_unit_clock(states).py(),
    }
}

#[pyfunction]
#[pyo3(signature = (states, times = None))]
fn change_points(states: Vec<u32>, times: Option<Vec<i64>>) -> PyResult<Vec<i64>> {
    Ok(sequence::change_points(&trace(states, times)?))
}

/// Compound probability of winning predictions `(start, end, value)`.
#[pyfunction]
#[pyo3(signature = (states, events, times = None))]
fn compound_prob(states: Vec<u32>, events: Vec<(usize, usize, u32)>, times: Option<Vec<i64>>) -> PyResult<f64> {
    let t = trace(states, times)?;
    let ev: Vec<PredictionEvent> = events.into_iter().map(|(a, b, v)| PredictionEvent::new(a, b, v)).collect();
    Ok(sequence::compound_prob(&t, &ev).py()?.value())
}

/// Compound probability of bets on coin `flips`; `bets[j]` is the flip bet `j` falls in.
#[pyfunction]
fn coin_game(flips: Vec<u32>, bets: Vec<usize>) -> PyResult<f64> {
    let (t, ev) = sequence::coin_game(&flips, &bets).py()?;
    Ok(sequence::compound_prob(&t, &ev).py()?.value())
}

#[pyfunction]
#[pyo3(signature = (closes, direction = "long"))]
fn baseline_win_prob(closes: Vec<f64>, direction: &str) -> PyResult<f64> {
    let prices = PriceSeries::from_closes(closes).py()?;
    Ok(strategy::baseline_win_prob(&prices, direction.parse().py()?).value())
}

#[pyfunction]
fn random_equity_line(closes: Vec<f64>, seed: u64) -> PyResult<Vec<f64>> {
    Ok(strategy::random_equity_line(&PriceSeries::from_closes(closes).py()?, seed))
}

/// `(point, lower, upper)` estimate of P[random equity >= final_equity].
#[pyfunction]
#[pyo3(signature = (closes, final_equity, replicates = 10_000, seed = 0, confidence = 0.95))]
fn equity_uncertainty(
    py: Python<'_>,
    closes: Vec<f64>,
    final_equity: f64,
    replicates: u64,
    seed: u64,
    confidence: f64,
) -> PyResult<(f64, f64, f64)> {
    let prices = PriceSeries::from_closes(closes).py()?;
    let e = py
        .detach(|| strategy::equity_uncertainty(final_equity, &prices, replicates, seed, confidence))
        .py()?;
    Ok((e.point.value(), e.interval.lower.value(), e.interval.upper.value()))
}

/// `(space_size, nph_latest, ntph, random_predict_prob, prob_true)` for a
/// history of rule-table files, oldest first.
#[pyfunction]
fn occam_summary(paths: Vec<String>) -> PyResult<(u64, u64, u64, f64, f64)> {
    let (space, history) = occam::load_history(&paths).py()?;
    let latest = history.latest().expect("loaded histories are non-empty");
    Ok((
        space.size().py()?,
        occam::nph(latest, &space).py()?,
        occam::ntph(&history, &space).py()?,
        occam::random_predict_prob(&history, &space).py()?.value(),
        occam::prob_true(&history, &space).py()?.value(),
    ))
}

/// Registry of tested hypotheses.
#[pyclass(name = "Ledger")]
#[derive(Default)]
struct PyLedger(chancecheck::Ledger);

#[pymethods]
impl PyLedger {
    #[new]
    fn new() -> Self {
        PyLedger::default()
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyLedger(chancecheck::Ledger::load(path).py()?))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.0.save(path).py()
    }

    #[pyo3(signature = (id, agent, ts, n, k, p0, note = ""))]
    #[allow(clippy::too_many_arguments)]
    fn register(&mut self, id: &str, agent: &str, ts: i64, n: u64, k: u64, p0: f64, note: &str) -> PyResult<String> {
        self.0.register(AttemptRecord::new(id, agent, ts, n, k, p0).with_note(note)).py()
    }

    /// Uncertainty of `id`; `agents=None` counts every agent's attempts.
    /// Returns `(uncertainty, attempts, warnings)`.
    #[pyo3(signature = (id, agents = None))]
    fn uncertainty(&self, id: &str, agents: Option<Vec<String>>) -> PyResult<(f64, u64, Vec<String>)> {
        let scope = match agents {
            None => KnowledgeScope::All,
            Some(a) => KnowledgeScope::agents(a).py()?,
        };
        let r = self.0.assess(id, &scope).py()?;
        Ok((r.uncertainty.value(), r.attempts, r.warnings))
    }

    #[pyo3(signature = (ids, cutoff = prob::DEFAULT_INFORMATIVE_CUTOFF))]
    fn combine(&self, ids: Vec<String>, cutoff: f64) -> PyResult<f64> {
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        Ok(self.0.reviewer_combine(&refs, probability(cutoff)?).py()?.combined.value())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Rolling live/virtual gate.
#[pyclass(name = "ControlState")]
struct PyControlState(strategy::ControlState);

#[pymethods]
impl PyControlState {
    #[new]
    fn new(window: usize, threshold: f64, baseline: f64) -> PyResult<Self> {
        Ok(PyControlState(
            strategy::ControlState::new(window, probability(threshold)?, probability(baseline)?).py()?,
        ))
    }

    /// Record a trade outcome; returns the window probability.
    fn record(&mut self, win: bool) -> f64 {
        self.0.record(if win { Outcome::Win } else { Outcome::Loss }).value()
    }

    /// `"LIVE"` or `"VIRTUAL"`.
    #[getter]
    fn mode(&self) -> &'static str {
        match self.0.mode() {
            Mode::Live => "LIVE",
            Mode::Virtual => "VIRTUAL",
        }
    }

    /// `(wins, outcomes)` currently in the window.
    fn window_counts(&self) -> (u64, u64) {
        self.0.window_counts()
    }
}

#[pymodule(name = "chancecheck")]
fn chancecheck_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(binom_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(binom_sf, m)?)?;
    m.add_function(wrap_pyfunction!(binom_sf_strict, m)?)?;
    m.add_function(wrap_pyfunction!(binom_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(best_of_m, m)?)?;
    m.add_function(wrap_pyfunction!(combine_results, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_interval, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_equal_or_better, m)?)?;
    m.add_function(wrap_pyfunction!(track_record_uncertainty, m)?)?;
    m.add_function(wrap_pyfunction!(losing_prob, m)?)?;
    m.add_function(wrap_pyfunction!(st_petersburg, m)?)?;
    m.add_function(wrap_pyfunction!(change_points, m)?)?;
    m.add_function(wrap_pyfunction!(compound_prob, m)?)?;
    m.add_function(wrap_pyfunction!(coin_game, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_win_prob, m)?)?;
    m.add_function(wrap_pyfunction!(random_equity_line, m)?)?;
    m.add_function(wrap_pyfunction!(equity_uncertainty, m)?)?;
    m.add_function(wrap_pyfunction!(occam_summary, m)?)?;
    m.add_class::<PyLedger>()?;
    m.add_class::<PyControlState>()?;
    Ok(())
}
