//! Trading-facing evaluation: trade logs, market baselines, track-record
//! uncertainty, the live/virtual control gate, the St. Petersburg doubling
//! strategy and random equity lines.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{estimate_fraction, Comparison, McEstimate, ReplicateRng};
use crate::prob::{any_of, binom_cdf, binom_sf, binom_sf_strict, BinomialQuery, Probability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Long,
    Short,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Loss,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "long" => Ok(Direction::Long),
            "short" => Ok(Direction::Short),
            other => Err(Error::domain(format!("direction must be `long` or `short`, got {other:?}"))),
        }
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "win" => Ok(Outcome::Win),
            "loss" => Ok(Outcome::Loss),
            other => Err(Error::domain(format!("outcome must be `win` or `loss`, got {other:?}"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Long => "long",
            Direction::Short => "short",
        })
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Win => "win",
            Outcome::Loss => "loss",
        })
    }
}

/// One closed trade. Indices refer to positions in the price series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub open_index: u64,
    pub close_index: u64,
    pub direction: Direction,
    pub outcome: Outcome,
    /// Parsed and reported, never used as a weight.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<f64>,
}

impl TradeRecord {
    pub fn new(open_index: u64, close_index: u64, direction: Direction, outcome: Outcome) -> Result<Self> {
        if open_index >= close_index {
            return Err(Error::domain(format!(
                "trade opens at {open_index} but closes at {close_index}"
            )));
        }
        Ok(TradeRecord {
            open_index,
            close_index,
            direction,
            outcome,
            size: None,
        })
    }

    pub fn with_size(mut self, size: f64) -> Self {
        self.size = Some(size);
        self
    }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader)
}

fn check_header(found: &csv::StringRecord, expected: &[&str], optional: &[&str], source_name: &str) -> Result<()> {
    let cols: Vec<String> = found.iter().map(|c| c.to_ascii_lowercase()).collect();
    let required_ok = cols.len() >= expected.len() && cols.iter().zip(expected).all(|(c, e)| c == e);
    let rest_ok = cols.len() <= expected.len() + optional.len()
        && cols[expected.len().min(cols.len())..]
            .iter()
            .zip(optional)
            .all(|(c, e)| c == e);
    if required_ok && rest_ok {
        Ok(())
    } else {
        let mut want = expected.join(",");
        for o in optional {
            want.push_str(&format!("[,{o}]"));
        }
        Err(Error::parse(source_name, 1, format!("expected header `{want}`, found `{}`", cols.join(","))))
    }
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

fn csv_error(source_name: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(source_name, line, e.to_string())
}

/// Read a trades CSV with header `open,close,direction,outcome[,size]`.
/// Errors name the 1-based line of the offending row.
pub fn ingest_trades<R: Read>(reader: R, source_name: &str) -> Result<Vec<TradeRecord>> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(source_name, e))?.clone();
    check_header(&header, &["open", "close", "direction", "outcome"], &["size"], source_name)?;
    let has_size = header.len() == 5;

    let mut trades = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(source_name, e))?;
        let line = record_line(&row);
        if row.iter().all(str::is_empty) {
            continue;
        }
        if row.len() != header.len() {
            return Err(Error::parse(
                source_name,
                line,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let at = |msg: String| Error::parse(source_name, line, msg);
        let index = |i: usize, name: &str| {
            row[i]
                .parse::<u64>()
                .map_err(|_| at(format!("{name} must be a non-negative integer, got {:?}", &row[i])))
        };
        let open = index(0, "open")?;
        let close = index(1, "close")?;
        let direction = row[2].parse::<Direction>().map_err(|e| at(e.to_string()))?;
        let outcome = row[3].parse::<Outcome>().map_err(|e| at(e.to_string()))?;
        let mut trade = TradeRecord::new(open, close, direction, outcome)
            .map_err(|_| Error::domain(format!("{source_name}:{line}: trade opens at {open} but closes at {close}")))?;
        if has_size {
            let size = row[4]
                .parse::<f64>()
                .ok()
                .filter(|s| s.is_finite())
                .ok_or_else(|| at(format!("size must be a number, got {:?}", &row[4])))?;
            trade = trade.with_size(size);
        }
        trades.push(trade);
    }
    Ok(trades)
}

/// Wins and total trades.
pub fn win_count(trades: &[TradeRecord]) -> (u64, u64) {
    let wins = trades.iter().filter(|t| t.outcome == Outcome::Win).count() as u64;
    (wins, trades.len() as u64)
}

/// Close prices with ordered time labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceSeries {
    times: Vec<String>,
    closes: Vec<f64>,
}

fn label_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.partial_cmp(&y).unwrap_or(Ordering::Equal),
        _ => a.cmp(b),
    }
}

impl PriceSeries {
    /// Time labels compare numerically when both parse as numbers and
    /// lexically otherwise (ISO dates order correctly).
    pub fn new(times: Vec<String>, closes: Vec<f64>) -> Result<Self> {
        if times.len() != closes.len() {
            return Err(Error::domain("price series needs one time label per close"));
        }
        if closes.len() < 2 {
            return Err(Error::domain(format!(
                "price series needs at least 2 points, got {}",
                closes.len()
            )));
        }
        if let Some(bad) = closes.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::domain(format!("close price {bad} is not positive")));
        }
        if let Some(w) = times.windows(2).find(|w| label_order(&w[0], &w[1]) != Ordering::Less) {
            return Err(Error::domain(format!(
                "times must strictly increase ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(PriceSeries { times, closes })
    }

    /// Closes labelled `0, 1, 2, ...`.
    pub fn from_closes(closes: Vec<f64>) -> Result<Self> {
        let times = (0..closes.len()).map(|i| i.to_string()).collect();
        Self::new(times, closes)
    }

    /// Read a CSV with header `time,close`.
    pub fn from_csv<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let mut rdr = csv_reader(reader);
        let header = rdr.headers().map_err(|e| csv_error(source_name, e))?.clone();
        check_header(&header, &["time", "close"], &[], source_name)?;
        let mut times = Vec::new();
        let mut closes = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| csv_error(source_name, e))?;
            let line = record_line(&row);
            if row.iter().all(str::is_empty) {
                continue;
            }
            if row.len() != 2 {
                return Err(Error::parse(source_name, line, format!("expected 2 fields, found {}", row.len())));
            }
            let close = row[1]
                .parse::<f64>()
                .map_err(|_| Error::parse(source_name, line, format!("close must be a number, got {:?}", &row[1])))?;
            times.push(row[0].to_string());
            closes.push(close);
        }
        Self::new(times, closes).map_err(|e| match e {
            Error::Domain(msg) => Error::Domain(format!("{source_name}: {msg}")),
            other => other,
        })
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    pub fn times(&self) -> &[String] {
        &self.times
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    /// Day-over-day price changes.
    pub fn moves(&self) -> impl Iterator<Item = f64> + '_ {
        self.closes.windows(2).map(|w| w[1] - w[0])
    }
}

/// Fraction of consecutive intervals that move in the favourable direction.
/// Flat intervals are unfavourable for both directions.
pub fn baseline_win_prob(prices: &PriceSeries, direction: Direction) -> Probability {
    let favourable = prices
        .moves()
        .filter(|&d| match direction {
            Direction::Long => d > 0.0,
            Direction::Short => d < 0.0,
        })
        .count();
    Probability::clamped(favourable as f64 / (prices.len() - 1) as f64)
}

/// Probability that one of `attempts` random strategies trading with win
/// probability `p0` does as well as the track record. `comparison` picks
/// equal-or-better (`AtLeast`) or strictly better (`Exceeds`).
pub fn track_record_uncertainty(
    trades: &[TradeRecord],
    p0: Probability,
    attempts: u64,
    comparison: Comparison,
) -> Result<Probability> {
    let (wins, n) = win_count(trades);
    uncertainty_from_counts(wins, n, p0, attempts, comparison)
}

/// [`track_record_uncertainty`] on raw counts.
pub fn uncertainty_from_counts(
    wins: u64,
    n: u64,
    p0: Probability,
    attempts: u64,
    comparison: Comparison,
) -> Result<Probability> {
    if n == 0 {
        return Err(Error::domain("a track record needs at least one trade"));
    }
    if attempts == 0 {
        return Err(Error::domain("attempt count must be at least 1"));
    }
    let q = BinomialQuery::new(wins, n, p0.value())?;
    let single = match comparison {
        Comparison::AtLeast => binom_sf(&q),
        Comparison::Exceeds => binom_sf_strict(&q),
    };
    Ok(any_of(single, attempts))
}

/// Probability that a strategy winning each of `n` trades with probability
/// `p` ends with more losses than wins.
pub fn losing_prob(n: u64, p: Probability) -> Result<Probability> {
    if n == 0 {
        return Err(Error::domain("need at least one trade"));
    }
    Ok(binom_cdf(&BinomialQuery::new((n - 1) / 2, n, p.value())?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Virtual,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Live => "LIVE",
            Mode::Virtual => "VIRTUAL",
        })
    }
}

/// Rolling-window gate. After every outcome the equal-or-better probability
/// of the last `window` outcomes is compared with `threshold`; above it the
/// strategy trades virtually, otherwise live. Virtual outcomes stay in the
/// window. The gate starts live and evaluates partial windows as they are.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlState {
    window: usize,
    threshold: Probability,
    baseline: Probability,
    recent: VecDeque<Outcome>,
    mode: Mode,
    last_prob: Option<Probability>,
}

impl ControlState {
    pub fn new(window: usize, threshold: Probability, baseline: Probability) -> Result<Self> {
        if window == 0 {
            return Err(Error::domain("control window must hold at least one outcome"));
        }
        if threshold.value() <= 0.0 || threshold.value() >= 1.0 {
            return Err(Error::domain(format!(
                "threshold {} must lie strictly inside (0, 1)",
                threshold.value()
            )));
        }
        Ok(ControlState {
            window,
            threshold,
            baseline,
            recent: VecDeque::with_capacity(window),
            mode: Mode::Live,
            last_prob: None,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn threshold(&self) -> Probability {
        self.threshold
    }

    pub fn baseline(&self) -> Probability {
        self.baseline
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn recent(&self) -> impl Iterator<Item = Outcome> + '_ {
        self.recent.iter().copied()
    }

    /// Probability computed at the last step, `None` before any outcome.
    pub fn last_prob(&self) -> Option<Probability> {
        self.last_prob
    }

    /// Wins and outcomes currently in the window.
    pub fn window_counts(&self) -> (u64, u64) {
        let wins = self.recent.iter().filter(|&&o| o == Outcome::Win).count() as u64;
        (wins, self.recent.len() as u64)
    }

    /// Record `outcome` and re-evaluate the mode.
    pub fn record(&mut self, outcome: Outcome) -> Probability {
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(outcome);
        let (wins, n) = self.window_counts();
        let q = BinomialQuery::new(wins, n, self.baseline.value()).expect("window counts are consistent");
        let p = binom_sf(&q);
        self.mode = if p.value() > self.threshold.value() {
            Mode::Virtual
        } else {
            Mode::Live
        };
        self.last_prob = Some(p);
        p
    }
}

/// Pure form of [`ControlState::record`].
pub fn control_step(state: &ControlState, outcome: Outcome) -> ControlState {
    let mut next = state.clone();
    next.record(outcome);
    next
}

/// One row of a control replay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlRow {
    pub index: usize,
    pub outcome: Outcome,
    pub wins: u64,
    pub window_len: u64,
    pub prob: Probability,
    pub mode: Mode,
}

/// Feed `outcomes` through a fresh gate and collect every step.
pub fn replay_control(
    window: usize,
    threshold: Probability,
    baseline: Probability,
    outcomes: impl IntoIterator<Item = Outcome>,
) -> Result<Vec<ControlRow>> {
    let mut state = ControlState::new(window, threshold, baseline)?;
    Ok(outcomes
        .into_iter()
        .enumerate()
        .map(|(i, outcome)| {
            let prob = state.record(outcome);
            let (wins, window_len) = state.window_counts();
            ControlRow {
                index: i + 1,
                outcome,
                wins,
                window_len,
                prob,
                mode: state.mode(),
            }
        })
        .collect())
}

/// Expected value of the doubling strategy over `tosses` fair tosses.
pub fn st_petersburg_ev(tosses: u64) -> f64 {
    tosses as f64 / 2.0
}

/// Average stake of the doubling strategy over `tosses` tosses.
pub fn st_petersburg_ab(tosses: u64) -> Result<f64> {
    if tosses == 0 {
        return Err(Error::domain("the average bet needs at least one toss"));
    }
    Ok((tosses - 1) as f64 / 4.0 + 1.0)
}

/// Probability that a random strategy staking the average bet on each of
/// `tosses` fair tosses ends strictly above the doubling strategy's expected
/// value.
pub fn st_petersburg_beat_prob(tosses: u64) -> Result<Probability> {
    Ok(st_petersburg(tosses)?.beat_prob)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StPetersburgReport {
    pub tosses: u64,
    pub ev: f64,
    pub ab: f64,
    /// Fewest wins for which the random strategy beats `ev`.
    pub min_wins: u64,
    pub beat_prob: Probability,
    /// With a single toss the random strategy is the doubling strategy's
    /// first bet and wins half the time.
    pub boundary: bool,
}

pub fn st_petersburg(tosses: u64) -> Result<StPetersburgReport> {
    let ab = st_petersburg_ab(tosses)?;
    let ev = st_petersburg_ev(tosses);
    // Profit (2k - L) * (L + 3) / 4 beats L / 2 iff (2k - L)(L + 3) > 2L.
    let l = tosses as i128;
    let min_wins = (0..=tosses)
        .find(|&k| (2 * k as i128 - l) * (l + 3) > 2 * l)
        .expect("k = L always beats the expected value");
    let beat_prob = binom_sf(&BinomialQuery::new(min_wins, tosses, 0.5)?);
    Ok(StPetersburgReport {
        tosses,
        ev,
        ab,
        min_wins,
        beat_prob,
        boundary: tosses == 1,
    })
}

/// Equity of a long-only coin-flipping trader, one unit per position.
///
/// Before each day's move a coin is tossed: with no position open, heads
/// opens one; with a position open, heads closes it. `equity[0] = 0` and
/// `equity[i]` adds `close[i] - close[i-1]` whenever a position is held
/// through day `i`.
pub fn random_equity_line(prices: &PriceSeries, seed: u64) -> Vec<f64> {
    equity_path(prices, &mut ReplicateRng::from_seed(seed))
}

pub fn equity_path(prices: &PriceSeries, rng: &mut ReplicateRng) -> Vec<f64> {
    let mut equity = Vec::with_capacity(prices.len());
    equity.push(0.0);
    walk_equity(prices, rng, |e| equity.push(e));
    equity
}

fn walk_equity(prices: &PriceSeries, rng: &mut ReplicateRng, mut visit: impl FnMut(f64)) -> f64 {
    let mut open = false;
    let mut equity = 0.0;
    for w in prices.closes.windows(2) {
        if rng.coin() {
            open = !open;
        }
        if open {
            equity += w[1] - w[0];
        }
        visit(equity);
    }
    equity
}

/// Final equity of the coin-flipping trader.
pub fn random_final_equity(prices: &PriceSeries, rng: &mut ReplicateRng) -> f64 {
    walk_equity(prices, rng, |_| {})
}

/// Equity of a trader who holds exactly through every rising day.
pub fn oracle_final_equity(prices: &PriceSeries) -> f64 {
    prices.moves().filter(|&d| d > 0.0).sum()
}

/// Fraction of random equity lines ending at or above `final_equity`.
pub fn equity_uncertainty(
    final_equity: f64,
    prices: &PriceSeries,
    replicates: u64,
    master: u64,
    confidence: f64,
) -> Result<McEstimate> {
    if final_equity.is_nan() {
        return Err(Error::domain("final equity is not a number"));
    }
    estimate_fraction(replicates, master, confidence, |rng| {
        random_final_equity(prices, rng) >= final_equity
    })
}
