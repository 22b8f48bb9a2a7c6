//! Hypotheses as predictors over a finite sequence space.
//!
//! An experiment observes `N` values of a variable with `C` possible states,
//! so the outcome space holds `C^N` sequences. A hypothesis accepts a subset
//! of them. What matters when judging the latest hypothesis is not its own
//! subset but the union over every hypothesis tried so far: the chance that
//! the whole history "predicts" a uniformly random outcome is
//! `|union| / C^N`, and the probability that it is right for a reason is one
//! minus that.
//!
//! All counts are exact, obtained by enumerating the space, which is capped
//! by an explicit budget.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::Probability;

/// Default cap on `C^N`.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SequenceSpace {
    cardinality: u32,
    length: u32,
    budget: u64,
}

impl SequenceSpace {
    pub fn new(cardinality: u32, length: u32) -> Result<Self> {
        if cardinality < 2 {
            return Err(Error::domain(format!("state cardinality must be at least 2, got {cardinality}")));
        }
        if length < 1 {
            return Err(Error::domain("sequence length must be at least 1"));
        }
        Ok(SequenceSpace {
            cardinality,
            length,
            budget: DEFAULT_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn cardinality(&self) -> u32 {
        self.cardinality
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    /// `C^N`, or a resource error when it exceeds the budget.
    pub fn size(&self) -> Result<u64> {
        u64::from(self.cardinality)
            .checked_pow(self.length)
            .filter(|&s| s <= self.budget)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "{}^{} sequences exceed the enumeration budget of {}",
                    self.cardinality, self.length, self.budget
                ))
            })
    }

    /// Writes the sequence with rank `index` (most significant symbol first).
    fn decode(&self, mut index: u64, out: &mut [u32]) {
        let c = u64::from(self.cardinality);
        for slot in out.iter_mut().rev() {
            *slot = (index % c) as u32;
            index /= c;
        }
    }

    pub fn contains(&self, seq: &[u32]) -> bool {
        seq.len() == self.length as usize && seq.iter().all(|&s| s < self.cardinality)
    }

    fn count_matching<F>(&self, accept: F) -> Result<u64>
    where
        F: Fn(&[u32]) -> bool + Sync,
    {
        let size = self.size()?;
        let len = self.length as usize;
        Ok((0..size)
            .into_par_iter()
            .map_init(
                || vec![0u32; len],
                |buf, i| {
                    self.decode(i, buf);
                    accept(buf)
                },
            )
            .filter(|&hit| hit)
            .count() as u64)
    }
}

type Rule = Arc<dyn Fn(&[u32]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum Predictor {
    /// Explicit set of accepted sequences.
    Table(HashSet<Vec<u32>>),
    /// Any total, deterministic predicate.
    Rule(Rule),
}

impl fmt::Debug for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predictor::Table(t) => f.debug_tuple("Table").field(&t.len()).finish(),
            Predictor::Rule(_) => f.write_str("Rule(..)"),
        }
    }
}

/// A hypothesis developed at time `t`.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    t: i64,
    predictor: Predictor,
}

impl Hypothesis {
    pub fn from_table<I>(t: i64, sequences: I) -> Self
    where
        I: IntoIterator<Item = Vec<u32>>,
    {
        Hypothesis {
            t,
            predictor: Predictor::Table(sequences.into_iter().collect()),
        }
    }

    pub fn from_rule<F>(t: i64, rule: F) -> Self
    where
        F: Fn(&[u32]) -> bool + Send + Sync + 'static,
    {
        Hypothesis {
            t,
            predictor: Predictor::Rule(Arc::new(rule)),
        }
    }

    pub fn t(&self) -> i64 {
        self.t
    }

    pub fn accepts(&self, seq: &[u32]) -> bool {
        match &self.predictor {
            Predictor::Table(set) => set.contains(seq),
            Predictor::Rule(rule) => rule(seq),
        }
    }

    pub fn with_t(mut self, t: i64) -> Self {
        self.t = t;
        self
    }
}

/// Hypotheses in strictly increasing time order.
#[derive(Debug, Clone, Default)]
pub struct HypothesisHistory {
    hypotheses: Vec<Hypothesis>,
}

impl HypothesisHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, h: Hypothesis) -> Result<()> {
        if let Some(last) = self.hypotheses.last() {
            if h.t <= last.t {
                return Err(Error::domain(format!(
                    "hypothesis time {} does not follow previous time {}",
                    h.t, last.t
                )));
            }
        }
        self.hypotheses.push(h);
        Ok(())
    }

    pub fn from_hypotheses<I: IntoIterator<Item = Hypothesis>>(items: I) -> Result<Self> {
        let mut history = HypothesisHistory::new();
        for h in items {
            history.push(h)?;
        }
        Ok(history)
    }

    pub fn latest(&self) -> Option<&Hypothesis> {
        self.hypotheses.last()
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Hypothesis> {
        self.hypotheses.iter()
    }
}

/// Number of sequences `h` predicts.
pub fn nph(h: &Hypothesis, space: &SequenceSpace) -> Result<u64> {
    space.count_matching(|seq| h.accepts(seq))
}

/// Number of sequences predicted by at least one hypothesis of the history.
/// A sequence predicted several times is counted once.
pub fn ntph(history: &HypothesisHistory, space: &SequenceSpace) -> Result<u64> {
    space.count_matching(|seq| history.iter().any(|h| h.accepts(seq)))
}

/// Probability that the history predicts a uniformly random outcome.
pub fn random_predict_prob(history: &HypothesisHistory, space: &SequenceSpace) -> Result<Probability> {
    let covered = ntph(history, space)?;
    Probability::new(covered as f64 / space.size()? as f64)
}

/// Probability that the history is true given that it predicted the
/// outcome: `1 - random_predict_prob`.
pub fn prob_true(history: &HypothesisHistory, space: &SequenceSpace) -> Result<Probability> {
    Ok(random_predict_prob(history, space)?.complement())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    First,
    Second,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HypothesisComparison {
    pub nph: [u64; 2],
    pub ntph: [u64; 2],
    /// Which of the four strict-inequality configurations holds:
    /// 1: NPH1 > NPH2, NTPH1 > NTPH2; 2: NPH1 > NPH2, NTPH1 < NTPH2;
    /// 3: NPH1 < NPH2, NTPH1 < NTPH2; 4: NPH1 < NPH2, NTPH1 > NTPH2.
    /// `None` when either pair is tied.
    pub case: Option<u8>,
    pub nph_tied: bool,
    pub ntph_tied: bool,
    pub preferred: Preference,
}

/// Compare the latest hypotheses of two histories. The history covering
/// fewer sequences wins; on equal coverage the simpler latest hypothesis
/// wins.
pub fn compare(h1: &HypothesisHistory, h2: &HypothesisHistory, space: &SequenceSpace) -> Result<HypothesisComparison> {
    let (Some(last1), Some(last2)) = (h1.latest(), h2.latest()) else {
        return Err(Error::domain("both histories must contain at least one hypothesis"));
    };
    let nph = [nph(last1, space)?, nph(last2, space)?];
    let ntph = [ntph(h1, space)?, ntph(h2, space)?];
    let by_nph = nph[0].cmp(&nph[1]);
    let by_ntph = ntph[0].cmp(&ntph[1]);

    use Ordering::*;
    let case = match (by_nph, by_ntph) {
        (Greater, Greater) => Some(1),
        (Greater, Less) => Some(2),
        (Less, Less) => Some(3),
        (Less, Greater) => Some(4),
        _ => None,
    };
    let preferred = match by_ntph.then(by_nph) {
        Less => Preference::First,
        Greater => Preference::Second,
        Equal => Preference::Tie,
    };
    Ok(HypothesisComparison {
        nph,
        ntph,
        case,
        nph_tied: by_nph == Equal,
        ntph_tied: by_ntph == Equal,
        preferred,
    })
}

/// Parse a rule table: a `C=<c> N=<n>` header followed by one accepted
/// sequence per line, symbols separated by whitespace.
pub fn parse_rule_table(text: &str, source_name: &str, t: i64) -> Result<(SequenceSpace, Hypothesis)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (header_idx, header) = lines
        .next()
        .ok_or_else(|| Error::parse(source_name, 1, "missing `C=<c> N=<n>` header"))?;
    let space = parse_header(header).map_err(|m| Error::parse(source_name, header_idx + 1, m))?;

    let mut accepted = HashSet::new();
    for (idx, line) in lines {
        let seq = line
            .split_whitespace()
            .map(|tok| tok.parse::<u32>().map_err(|_| format!("bad symbol {tok:?}")))
            .collect::<std::result::Result<Vec<u32>, String>>()
            .map_err(|m| Error::parse(source_name, idx + 1, m))?;
        if !space.contains(&seq) {
            return Err(Error::parse(
                source_name,
                idx + 1,
                format!(
                    "sequence must have {} symbols in 0..{}",
                    space.length(),
                    space.cardinality()
                ),
            ));
        }
        accepted.insert(seq);
    }
    Ok((space, Hypothesis::from_table(t, accepted)))
}

fn parse_header(line: &str) -> std::result::Result<SequenceSpace, String> {
    let mut c = None;
    let mut n = None;
    for tok in line.split_whitespace() {
        match tok.split_once('=') {
            Some(("C", v)) => c = v.parse::<u32>().ok(),
            Some(("N", v)) => n = v.parse::<u32>().ok(),
            _ => return Err(format!("unexpected header token {tok:?}")),
        }
    }
    match (c, n) {
        (Some(c), Some(n)) => SequenceSpace::new(c, n).map_err(|e| e.to_string()),
        _ => Err("header must be `C=<c> N=<n>`".into()),
    }
}

/// Load a history from rule-table files ordered by time; the i-th file is
/// the hypothesis at `t = i + 1`. All files must describe the same space.
pub fn load_history<P: AsRef<Path>>(paths: &[P]) -> Result<(SequenceSpace, HypothesisHistory)> {
    let mut space: Option<SequenceSpace> = None;
    let mut history = HypothesisHistory::new();
    for (i, path) in paths.iter().enumerate() {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path.display().to_string();
        let (s, h) = parse_rule_table(&text, &name, i as i64 + 1)?;
        match space {
            Some(prev) if prev != s => {
                return Err(Error::parse(name, 1, "sequence space differs from earlier files"));
            }
            _ => space = Some(s),
        }
        history.push(h)?;
    }
    let space = space.ok_or_else(|| Error::domain("a history needs at least one rule table"))?;
    Ok((space, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(c: u32, n: u32) -> SequenceSpace {
        SequenceSpace::new(c, n).unwrap()
    }

    #[test]
    fn accept_all_and_none() {
        let s = space(3, 4);
        assert_eq!(nph(&Hypothesis::from_rule(0, |_| true), &s).unwrap(), 81);
        assert_eq!(nph(&Hypothesis::from_rule(0, |_| false), &s).unwrap(), 0);
    }

    #[test]
    fn first_symbol_zero() {
        let s = space(2, 3);
        assert_eq!(nph(&Hypothesis::from_rule(0, |x| x[0] == 0), &s).unwrap(), 4);
    }

    #[test]
    fn union_counts_shared_sequences_once() {
        let s = space(2, 3);
        let h = HypothesisHistory::from_hypotheses([
            Hypothesis::from_rule(1, |x| x[0] == 0),
            Hypothesis::from_rule(2, |x| x[2] == 0),
        ])
        .unwrap();
        assert_eq!(ntph(&h, &s).unwrap(), 6);
        assert_eq!(random_predict_prob(&h, &s).unwrap().value(), 0.75);
        assert_eq!(prob_true(&h, &s).unwrap().value(), 0.25);
    }

    #[test]
    fn duplicate_hypothesis_adds_nothing() {
        let s = space(2, 4);
        let rule = |x: &[u32]| x[1] == 1 && x[3] == 0;
        let once = HypothesisHistory::from_hypotheses([Hypothesis::from_rule(1, rule)]).unwrap();
        let twice =
            HypothesisHistory::from_hypotheses([Hypothesis::from_rule(1, rule), Hypothesis::from_rule(2, rule)])
                .unwrap();
        assert_eq!(ntph(&once, &s).unwrap(), ntph(&twice, &s).unwrap());
    }

    #[test]
    fn budget_is_enforced() {
        let s = space(2, 30);
        assert!(matches!(nph(&Hypothesis::from_rule(0, |_| true), &s), Err(Error::Resource(_))));
        let s = space(10, 30);
        assert!(matches!(s.size(), Err(Error::Resource(_))));
        let s = space(2, 4).with_budget(8);
        assert!(s.size().is_err());
    }

    #[test]
    fn history_times_must_increase() {
        let mut h = HypothesisHistory::new();
        h.push(Hypothesis::from_rule(2, |_| true)).unwrap();
        assert!(h.push(Hypothesis::from_rule(2, |_| true)).is_err());
    }

    #[test]
    fn case_four_prefers_second() {
        // H1 is simple but follows two broad attempts; H2 is broader but alone.
        let s = space(2, 4);
        let h1 = HypothesisHistory::from_hypotheses([
            Hypothesis::from_rule(1, |x| x[0] == 0),
            Hypothesis::from_rule(2, |x| x[1] == 0),
            Hypothesis::from_rule(3, |x| x == [1, 1, 1, 1]),
        ])
        .unwrap();
        let h2 = HypothesisHistory::from_hypotheses([Hypothesis::from_rule(1, |x| x[0] == 1 && x[1] == 1)]).unwrap();
        let cmp = compare(&h1, &h2, &s).unwrap();
        assert_eq!(cmp.nph, [1, 4]);
        assert_eq!(cmp.ntph, [13, 4]);
        assert_eq!(cmp.case, Some(4));
        assert_eq!(cmp.preferred, Preference::Second);
    }

    #[test]
    fn identical_histories_tie() {
        let s = space(2, 3);
        let h = HypothesisHistory::from_hypotheses([Hypothesis::from_rule(1, |x| x[0] == 0)]).unwrap();
        let cmp = compare(&h, &h.clone(), &s).unwrap();
        assert_eq!(cmp.case, None);
        assert!(cmp.nph_tied && cmp.ntph_tied);
        assert_eq!(cmp.preferred, Preference::Tie);
    }

    #[test]
    fn equal_union_falls_back_to_simpler_latest() {
        let s = space(2, 3);
        let h1 = HypothesisHistory::from_hypotheses([
            Hypothesis::from_rule(1, |x| x[0] == 0),
            Hypothesis::from_rule(2, |x| x == [0, 0, 0]),
        ])
        .unwrap();
        let h2 = HypothesisHistory::from_hypotheses([Hypothesis::from_rule(1, |x| x[2] == 1)]).unwrap();
        let cmp = compare(&h1, &h2, &s).unwrap();
        assert_eq!(cmp.ntph, [4, 4]);
        assert_eq!(cmp.nph, [1, 4]);
        assert_eq!(cmp.preferred, Preference::First);
    }

    #[test]
    fn empty_history_rejected() {
        let s = space(2, 3);
        let h = HypothesisHistory::from_hypotheses([Hypothesis::from_rule(1, |_| true)]).unwrap();
        assert!(compare(&HypothesisHistory::new(), &h, &s).is_err());
    }

    #[test]
    fn rule_table_parsing() {
        let (s, h) = parse_rule_table("C=2 N=3\n0 0 1\n\n1 1 1\n", "t", 1).unwrap();
        assert_eq!((s.cardinality(), s.length()), (2, 3));
        assert_eq!(nph(&h, &s).unwrap(), 2);
        assert!(matches!(parse_rule_table("C=2 N=3\n0 2 1\n", "t", 1), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_rule_table("C=2 N=3\n0 1\n", "t", 1), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_rule_table("N=3\n", "t", 1), Err(Error::Parse { line: 1, .. })));
        assert!(parse_rule_table("", "t", 1).is_err());
    }
}
