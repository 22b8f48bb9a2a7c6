//! Figures that circulate for well-known worked examples but do not follow
//! from the formulas they are attached to. Reports compute the correct value
//! and attach a warning when an input matches one of these examples.

/// A best-of-m figure quoted for `attempts` random attempts at `k` of `n`
/// with per-trial probability `p0`.
struct QuotedBestOf {
    k: u64,
    n: u64,
    p0: f64,
    attempts: u64,
    quoted: f64,
}

const QUOTED_BEST_OF: &[QuotedBestOf] = &[QuotedBestOf {
    k: 65,
    n: 100,
    p0: 0.5,
    attempts: 10,
    quoted: 0.16,
}];

/// Warning for a best-of-m evaluation whose inputs match a quoted example
/// with a different value. `single` is the one-attempt tail probability and
/// `computed` the corrected value.
pub fn best_of_m_warning(k: u64, n: u64, p0: f64, attempts: u64, single: f64, computed: f64) -> Option<String> {
    let hit = QUOTED_BEST_OF
        .iter()
        .find(|f| f.k == k && f.n == n && f.p0 == p0 && f.attempts == attempts)?;
    if (computed - hit.quoted).abs() <= 0.005 {
        return None;
    }
    let implied = (1.0 - hit.quoted).ln() / (1.0 - single).ln();
    Some(format!(
        "{k}/{n} at p0 = {p0} over {attempts} attempts: 1 - (1 - {single:.4})^{attempts} = {:.3}%; \
         the figure of {:.0}% quoted for this example corresponds to about {:.0} attempts, not {attempts}",
        computed * 100.0,
        hit.quoted * 100.0,
        implied
    ))
}

/// A window probability quoted as `num/den` for a window of `len`
/// positions of which `favourable` match the prediction.
struct QuotedWindow {
    favourable: u64,
    len: u64,
    num: u64,
    den: u64,
}

const QUOTED_WINDOWS: &[QuotedWindow] = &[QuotedWindow {
    favourable: 5,
    len: 12,
    num: 5,
    den: 7,
}];

/// The quoted ratio for a window, if one circulates.
pub fn quoted_window_ratio(favourable: u64, len: u64) -> Option<f64> {
    QUOTED_WINDOWS
        .iter()
        .find(|w| w.favourable == favourable && w.len == len)
        .map(|w| w.num as f64 / w.den as f64)
}

/// Warning for a window with `favourable` matching positions out of `len`
/// whose quoted ratio divides by the unfavourable count instead of the
/// window length.
pub fn window_ratio_warning(favourable: u64, len: u64) -> Option<String> {
    let hit = QUOTED_WINDOWS.iter().find(|w| w.favourable == favourable && w.len == len)?;
    Some(format!(
        "window probability is {favourable}/{len} = {:.4} (matching positions over window length); \
         the quoted {}/{} = {:.4} divides by the non-matching count instead",
        favourable as f64 / len as f64,
        hit.num,
        hit.den,
        hit.num as f64 / hit.den as f64
    ))
}
