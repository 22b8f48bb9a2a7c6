//! Binomial probability kernel.
//!
//! Point probabilities are evaluated in log space with Loader's saddle-point
//! decomposition (Stirling remainders plus the `bd0` deviance term), which
//! keeps ~14 significant digits for `n` up to 10^7 and beyond. Tails are
//! summed from the smaller side only; the larger tail is its complement.
//!
//! For `n <= 56` the coefficient `C(n, k)` is exact in an `f64`, so the
//! direct product `C(n, k) p^k q^(n-k)` is used instead. With dyadic `p`
//! (e.g. a fair coin) this makes small tails exact rationals.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Informative/non-informative split used by [`combine_results`] when the
/// caller has no reason to pick another one.
pub const DEFAULT_INFORMATIVE_CUTOFF: f64 = 0.05;

/// Complement arithmetic may overshoot [0, 1] by rounding; anything larger
/// than this is a bug, not noise.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Largest `n` for which every `C(n, k)` is exactly representable in an f64.
const EXACT_COEFF_MAX_N: u64 = 56;

/// Number of recurrence steps between exact re-evaluations of a tail term.
const RESYNC_EVERY: u64 = 32;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;
const LN_2PI: f64 = 1.837_877_066_409_345_483_560_659_472_811;

/// A probability in `[0, 1]`.
///
/// Serialized to JSON with 17 significant digits so that reports round-trip
/// bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!("probability {value} is outside [0, 1]")))
        }
    }

    /// Clamp the result of complement arithmetic back into `[0, 1]`.
    pub(crate) fn clamped(value: f64) -> Self {
        debug_assert!(
            (-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&value),
            "probability {value} escaped [0, 1] by more than {CLAMP_TOLERANCE}"
        );
        Probability(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_precise(self.0, serializer)
    }
}

impl<'de> Deserialize<'de> for Probability {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(deserializer)?;
        Probability::new(v).map_err(serde::de::Error::custom)
    }
}

/// Writes a finite float as a JSON number with 17 significant digits.
pub(crate) fn serialize_precise<S: Serializer>(v: f64, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    if !v.is_finite() {
        return serializer.serialize_f64(v);
    }
    let raw = serde_json::value::RawValue::from_string(format!("{v:.16e}"))
        .map_err(serde::ser::Error::custom)?;
    raw.serialize(serializer)
}

/// `k` successes in `n` trials with per-trial success probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialQuery {
    k: u64,
    n: u64,
    p: f64,
}

impl BinomialQuery {
    pub fn new(k: u64, n: u64, p: f64) -> Result<Self> {
        if k > n {
            return Err(Error::domain(format!("success count {k} exceeds trial count {n}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("success probability {p} is outside [0, 1]")));
        }
        Ok(BinomialQuery { k, n, p })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// `P[X = k]`.
pub fn binom_pmf(q: &BinomialQuery) -> Probability {
    Probability::clamped(pmf_raw(q.k, q.n, q.p, 1.0 - q.p))
}

/// `P[X >= k]`.
pub fn binom_sf(q: &BinomialQuery) -> Probability {
    Probability::clamped(split_tails(q.k, q.n, q.p).upper)
}

/// `P[X <= k]`.
pub fn binom_cdf(q: &BinomialQuery) -> Probability {
    Probability::clamped(split_tails(q.k + 1, q.n, q.p).lower)
}

/// `P[X > k]`, the probability of doing strictly better than `k`.
pub fn binom_sf_strict(q: &BinomialQuery) -> Probability {
    Probability::clamped(split_tails(q.k + 1, q.n, q.p).upper)
}

/// Probability that at least one of `m` independent random attempts reaches
/// `k` or more successes: `1 - (1 - P[X >= k])^m`.
pub fn best_of_m(q: &BinomialQuery, m: u64) -> Result<Probability> {
    if m == 0 {
        return Err(Error::domain("attempt count must be at least 1"));
    }
    let single = binom_sf(q);
    if m == 1 {
        return Ok(single);
    }
    Ok(any_of(single, m))
}

/// `1 - (1 - p)^m`, evaluated through `log1p`/`expm1` so tiny `p` keeps its
/// relative precision.
pub fn any_of(p: Probability, m: u64) -> Probability {
    match m {
        0 => Probability::ZERO,
        1 => p,
        _ if p.0 >= 1.0 => Probability::ONE,
        _ => Probability::clamped(-f64::exp_m1(m as f64 * f64::ln_1p(-p.0))),
    }
}

/// Uncertainty of two independent results holding jointly.
pub fn intersect(p1: Probability, p2: Probability) -> Probability {
    Probability::clamped(p1.0 * p2.0)
}

/// Combine several results into one joint uncertainty.
///
/// Results below `informative_cutoff` are intersected. Every result at or
/// above the cutoff contributes nothing but counts as one more random
/// attempt, so the joint value is `1 - (1 - q)^m` with `q` the product of the
/// informative values and `m = 1 + #non-informative`.
pub fn combine_results(ps: &[Probability], informative_cutoff: Probability) -> Result<Probability> {
    if ps.is_empty() {
        return Err(Error::domain("cannot combine an empty list of results"));
    }
    if informative_cutoff.0 <= 0.0 || informative_cutoff.0 >= 1.0 {
        return Err(Error::domain(format!(
            "informative cutoff {} must lie strictly inside (0, 1)",
            informative_cutoff.0
        )));
    }
    let (informative, noise): (Vec<Probability>, Vec<Probability>) =
        ps.iter().partition(|p| p.0 < informative_cutoff.0);
    let joint = informative.into_iter().fold(Probability::ONE, intersect);
    Ok(any_of(joint, 1 + noise.len() as u64))
}

/// A two-sided confidence interval for a proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Probability,
    pub upper: Probability,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower.0 <= x && x <= self.upper.0
    }

    pub fn width(&self) -> f64 {
        self.upper.0 - self.lower.0
    }
}

/// Wilson score interval for `successes` out of `trials` at the given
/// two-sided confidence level.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<Interval> {
    if trials == 0 {
        return Err(Error::domain("Wilson interval needs at least one trial"));
    }
    if successes > trials {
        return Err(Error::domain(format!("{successes} successes exceed {trials} trials")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::domain(format!("confidence {confidence} must lie inside (0, 1)")));
    }
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;

    let lower = if successes == 0 { 0.0 } else { (center - half).max(0.0).min(phat) };
    let upper = if successes == trials { 1.0 } else { (center + half).min(1.0).max(phat) };
    Ok(Interval {
        lower: Probability(lower),
        upper: Probability(upper),
    })
}

struct Tails {
    /// `P[X < split]`
    lower: f64,
    /// `P[X >= split]`
    upper: f64,
}

/// Both tails around `split` (`0 <= split <= n + 1`). The smaller side is
/// summed term by term, the other is its complement.
fn split_tails(split: u64, n: u64, p: f64) -> Tails {
    let whole = |upper: f64| Tails { lower: 1.0 - upper, upper };
    if split == 0 {
        return whole(1.0);
    }
    if split > n {
        return whole(0.0);
    }
    if p == 0.0 {
        return whole(0.0);
    }
    if p == 1.0 {
        return whole(1.0);
    }
    let q = 1.0 - p;
    if split as f64 > n as f64 * p {
        // Terms decrease from `split` upward.
        whole(sum_tail(split, n, p, q, Direction::Up))
    } else {
        // Terms decrease from `split - 1` downward.
        let lower = sum_tail(split - 1, n, p, q, Direction::Down);
        Tails { lower, upper: 1.0 - lower }
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Up,
    Down,
}

/// Sum of pmf terms from `start` outward in `dir` until they stop
/// contributing. Terms must be non-increasing along `dir`.
fn sum_tail(start: u64, n: u64, p: f64, q: f64, dir: Direction) -> f64 {
    if n <= EXACT_COEFF_MAX_N {
        let range: Box<dyn Iterator<Item = u64>> = match dir {
            Direction::Up => Box::new(start..=n),
            Direction::Down => Box::new((0..=start).rev()),
        };
        return range.map(|j| pmf_raw(j, n, p, q)).sum();
    }

    let odds = p / q;
    let mut j = start;
    let mut term = pmf_raw(j, n, p, q);
    let mut sum = 0.0;
    let mut steps = 0u64;
    loop {
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
        let (next, ratio) = match dir {
            Direction::Up if j < n => (j + 1, (n - j) as f64 / (j + 1) as f64 * odds),
            Direction::Down if j > 0 => (j - 1, j as f64 / (n - j + 1) as f64 / odds),
            _ => break,
        };
        steps += 1;
        term = if steps.is_multiple_of(RESYNC_EVERY) {
            pmf_raw(next, n, p, q)
        } else {
            term * ratio
        };
        j = next;
    }
    sum
}

fn pmf_raw(k: u64, n: u64, p: f64, q: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    if n <= EXACT_COEFF_MAX_N {
        return exact_coefficient(n, k) * p.powi(k as i32) * q.powi((n - k) as i32);
    }
    let nf = n as f64;
    if k == 0 {
        return if p > q { (nf * q.ln()).exp() } else { (nf * f64::ln_1p(-p)).exp() };
    }
    if k == n {
        return if p > q { (nf * f64::ln_1p(-q)).exp() } else { (nf * p.ln()).exp() };
    }
    let kf = k as f64;
    let rest = nf - kf;
    let log_core = stirling_remainder(nf)
        - stirling_remainder(kf)
        - stirling_remainder(rest)
        - deviance(kf, nf * p)
        - deviance(rest, nf * q);
    let log_scale = LN_2PI + kf.ln() + f64::ln_1p(-kf / nf);
    (log_core - 0.5 * log_scale).exp()
}

/// `C(n, k)` as an f64; exact for `n <= 56`.
fn exact_coefficient(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * u128::from(n - i) / u128::from(i + 1);
    }
    c as f64
}

/// `ln(x!) - [(x + 1/2) ln x - x + ln sqrt(2 pi)]`.
fn stirling_remainder(x: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if x <= 15.0 {
        return ln_gamma(x + 1.0) - (x + 0.5) * x.ln() + x - LN_SQRT_2PI;
    }
    let xx = x * x;
    if x > 500.0 {
        (S0 - S1 / xx) / x
    } else if x > 80.0 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if x > 35.0 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// `x ln(x / m) + m - x`, computed without cancellation when `x` is close to `m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}
