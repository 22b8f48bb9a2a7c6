//! Forecasts on a non-stationary system described by a state sequence.
//!
//! The system is a trace of states `F[1..=len]` in `1..=C` on an integer
//! clock `T`. A prediction bets that the state inside a window equals some
//! value. A random bettor placing one bet uniformly inside the window wins
//! with probability `#matching / window length`. When that probability is 1
//! the bet carries no information beyond the bets before it (nothing
//! changed), so it is dependent and contributes a factor of 1 to the
//! compound probability of a run of winning predictions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::Probability;
use crate::quoted;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SystemTrace {
    states: Vec<u32>,
    times: Vec<i64>,
    cardinality: u32,
}

impl SystemTrace {
    /// The state cardinality is the largest state seen (at least 2).
    pub fn new(states: Vec<u32>, times: Vec<i64>) -> Result<Self> {
        let cardinality = states.iter().copied().max().unwrap_or(0).max(2);
        Self::with_cardinality(states, times, cardinality)
    }

    pub fn with_cardinality(states: Vec<u32>, times: Vec<i64>, cardinality: u32) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::domain("a trace needs at least one state"));
        }
        if states.len() != times.len() {
            return Err(Error::domain(format!(
                "trace has {} states but {} times",
                states.len(),
                times.len()
            )));
        }
        if let Some(bad) = states.iter().find(|&&s| s < 1 || s > cardinality) {
            return Err(Error::domain(format!("state {bad} is outside 1..={cardinality}")));
        }
        if times[0] < 1 {
            return Err(Error::domain("times must be positive integers"));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::domain(format!("times must strictly increase ({} then {})", w[0], w[1])));
        }
        Ok(SystemTrace {
            states,
            times,
            cardinality,
        })
    }

    /// A trace on the clock `1, 2, ..., len`.
    pub fn with_unit_clock(states: Vec<u32>) -> Result<Self> {
        let times = (1..=states.len() as i64).collect();
        Self::new(states, times)
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    pub fn cardinality(&self) -> u32 {
        self.cardinality
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Parse the two-line form `F: v1 v2 ...` / `T: t1 t2 ...`.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut states = None;
        let mut times = None;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (tag, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(source_name, idx + 1, "expected `F:` or `T:`"))?;
            let bad = |tok: &str| Error::parse(source_name, idx + 1, format!("bad value {tok:?}"));
            match tag.trim() {
                "F" => {
                    states = Some(
                        rest.split_whitespace()
                            .map(|t| t.parse::<u32>().map_err(|_| bad(t)))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "T" => {
                    times = Some(
                        rest.split_whitespace()
                            .map(|t| t.parse::<i64>().map_err(|_| bad(t)))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                other => return Err(Error::parse(source_name, idx + 1, format!("unknown line tag {other:?}"))),
            }
        }
        match (states, times) {
            (Some(f), Some(t)) => SystemTrace::new(f, t),
            _ => Err(Error::parse(source_name, 1, "trace needs both an `F:` and a `T:` line")),
        }
    }
}

/// A bet that the state inside `[start, end]` (1-based, inclusive) equals
/// `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PredictionEvent {
    pub start: usize,
    pub end: usize,
    pub value: u32,
}

impl PredictionEvent {
    pub fn new(start: usize, end: usize, value: u32) -> Self {
        PredictionEvent { start, end, value }
    }

    fn check(&self, trace: &SystemTrace) -> Result<()> {
        if self.start < 1 || self.start > self.end || self.end > trace.len() {
            return Err(Error::domain(format!(
                "window [{}, {}] is not inside 1..={}",
                self.start,
                self.end,
                trace.len()
            )));
        }
        if self.value < 1 || self.value > trace.cardinality() {
            return Err(Error::domain(format!(
                "predicted value {} is outside 1..={}",
                self.value,
                trace.cardinality()
            )));
        }
        Ok(())
    }

    fn window<'a>(&self, trace: &'a SystemTrace) -> &'a [u32] {
        &trace.states[self.start - 1..self.end]
    }

    fn overlaps(&self, other: &PredictionEvent) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// Parse events, one `start end value` triple per line.
pub fn parse_events(text: &str, source_name: &str) -> Result<Vec<PredictionEvent>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, line)| {
            let nums: Vec<&str> = line.split_whitespace().collect();
            let err = || Error::parse(source_name, idx + 1, "expected `start end value`");
            if nums.len() != 3 {
                return Err(err());
            }
            let start = nums[0].parse().map_err(|_| err())?;
            let end = nums[1].parse().map_err(|_| err())?;
            let value = nums[2].parse().map_err(|_| err())?;
            Ok(PredictionEvent::new(start, end, value))
        })
        .collect()
}

/// Clock times at which the state differs from the previous one.
pub fn change_points(trace: &SystemTrace) -> Vec<i64> {
    trace
        .states
        .windows(2)
        .zip(&trace.times[1..])
        .filter(|(w, _)| w[0] != w[1])
        .map(|(_, &t)| t)
        .collect()
}

/// `(matching positions, window length)` for `event`.
pub fn window_counts(trace: &SystemTrace, event: &PredictionEvent) -> Result<(u64, u64)> {
    event.check(trace)?;
    let window = event.window(trace);
    let hits = window.iter().filter(|&&s| s == event.value).count() as u64;
    Ok((hits, window.len() as u64))
}

/// Probability that a single bet placed uniformly inside the window wins.
pub fn event_random_prob(trace: &SystemTrace, event: &PredictionEvent) -> Result<Probability> {
    let (hits, len) = window_counts(trace, event)?;
    Probability::new(hits as f64 / len as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependence {
    Dependent,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairClassification {
    pub dependence: Dependence,
    /// The two windows share positions. An overlapping pair with
    /// probability below 1 is still classified independent.
    pub windows_overlap: bool,
}

/// Whether `second` adds evidence beyond `first`. `second` is dependent
/// exactly when a random bet inside its window is certain to win.
pub fn classify_pair(
    trace: &SystemTrace,
    first: &PredictionEvent,
    second: &PredictionEvent,
) -> Result<PairClassification> {
    first.check(trace)?;
    if second.start < first.start {
        return Err(Error::domain(format!(
            "event starting at {} cannot follow one starting at {}",
            second.start, first.start
        )));
    }
    let p = event_random_prob(trace, second)?;
    Ok(PairClassification {
        dependence: if p.value() == 1.0 {
            Dependence::Dependent
        } else {
            Dependence::Independent
        },
        windows_overlap: first.overlaps(second),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventAssessment {
    pub event: PredictionEvent,
    pub favourable: u64,
    pub window_len: u64,
    pub probability: Probability,
    pub dependence: Dependence,
    pub overlaps_earlier: bool,
    /// Factor this event contributes to the compound probability.
    pub factor: Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompoundReport {
    pub change_points: Vec<i64>,
    pub events: Vec<EventAssessment>,
    pub compound: Probability,
    pub warnings: Vec<String>,
}

/// Per-event probabilities, dependence classes and the compound probability
/// of a run of winning predictions.
pub fn assess_events(trace: &SystemTrace, events: &[PredictionEvent]) -> Result<CompoundReport> {
    let mut assessed: Vec<EventAssessment> = Vec::with_capacity(events.len());
    let mut warnings = Vec::new();
    let mut compound = Probability::ONE;
    let mut quoted_compound = 1.0;
    let mut quoted_used = false;

    for (i, event) in events.iter().enumerate() {
        let (favourable, window_len) = window_counts(trace, event)?;
        if favourable == 0 {
            return Err(Error::domain(format!(
                "event {} ([{}, {}] -> {}) cannot be a winning prediction: the value never occurs in its window",
                i + 1,
                event.start,
                event.end,
                event.value
            )));
        }
        let probability = Probability::new(favourable as f64 / window_len as f64)?;

        let (dependence, overlaps_earlier) = match i.checked_sub(1).map(|j| &events[j]) {
            None => (Dependence::Independent, false),
            Some(prev) => {
                let pair = classify_pair(trace, prev, event)?;
                let overlaps = events[..i].iter().any(|e| e.overlaps(event));
                (pair.dependence, overlaps)
            }
        };
        if overlaps_earlier && dependence == Dependence::Independent {
            warnings.push(format!(
                "event {} overlaps an earlier window but is counted as independent",
                i + 1
            ));
        }
        warnings.extend(quoted::window_ratio_warning(favourable, window_len));

        let factor = match dependence {
            Dependence::Dependent => Probability::ONE,
            Dependence::Independent => probability,
        };
        compound = crate::prob::intersect(compound, factor);
        quoted_compound *= match (dependence, quoted::quoted_window_ratio(favourable, window_len)) {
            (Dependence::Independent, Some(q)) => {
                quoted_used = true;
                q
            }
            _ => factor.value(),
        };
        assessed.push(EventAssessment {
            event: *event,
            favourable,
            window_len,
            probability,
            dependence,
            overlaps_earlier,
            factor,
        });
    }

    if quoted_used {
        warnings.push(format!(
            "with the quoted window ratio the compound probability would read {quoted_compound:.3}; \
             the counted fractions give {:.3}",
            compound.value()
        ));
    }

    Ok(CompoundReport {
        change_points: change_points(trace),
        events: assessed,
        compound,
        warnings,
    })
}

/// Compound probability of the winning predictions `events`.
pub fn compound_prob(trace: &SystemTrace, events: &[PredictionEvent]) -> Result<Probability> {
    Ok(assess_events(trace, events)?.compound)
}

/// Lay out a coin game as a trace.
///
/// Each flip `i` (face 1 or 2) occupies positions `2i + 1` (the face it did
/// not land on) and `2i + 2` (the realized face), so a bet covering the flip
/// wins at random half the time. `bets[j]` is the flip during which bet `j`
/// is placed; bets are on the realized face. The first bet of a flip covers
/// the flip itself; later bets on the same flip only see the settled face.
pub fn coin_game(flips: &[u32], bets: &[usize]) -> Result<(SystemTrace, Vec<PredictionEvent>)> {
    if let Some(bad) = flips.iter().find(|&&f| f != 1 && f != 2) {
        return Err(Error::domain(format!("coin face must be 1 or 2, got {bad}")));
    }
    let states: Vec<u32> = flips.iter().flat_map(|&f| [3 - f, f]).collect();
    let trace = SystemTrace::with_cardinality(states, (1..=2 * flips.len() as i64).collect(), 2)?;

    let mut events = Vec::with_capacity(bets.len());
    let mut last_flip = None;
    for &flip in bets {
        let face = *flips
            .get(flip)
            .ok_or_else(|| Error::domain(format!("bet refers to flip {flip} of {}", flips.len())))?;
        if last_flip.is_some_and(|l| flip < l) {
            return Err(Error::domain("bets must be in time order"));
        }
        let settled = 2 * flip + 2;
        let start = if last_flip == Some(flip) { settled } else { settled - 1 };
        events.push(PredictionEvent::new(start, settled, face));
        last_flip = Some(flip);
    }
    Ok((trace, events))
}
