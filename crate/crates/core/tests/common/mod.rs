#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chancecheck::{AttemptRecord, Ledger};

pub const REFERENCE_STATES: [u32; 20] = [1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 1, 1, 1, 1, 1, 1, 1, 2];

pub fn reference_trace_text() -> String {
    let f: Vec<String> = REFERENCE_STATES.iter().map(u32::to_string).collect();
    let t: Vec<String> = (1..=REFERENCE_STATES.len()).map(|i| i.to_string()).collect();
    format!("F: {}\nT: {}\n", f.join(" "), t.join(" "))
}

/// Trades CSV with `wins` wins followed by `losses` losses.
pub fn trades_csv(wins: usize, losses: usize) -> String {
    let mut s = String::from("open,close,direction,outcome\n");
    for i in 0..wins + losses {
        let o = if i < wins { "win" } else { "loss" };
        let _ = writeln!(s, "{},{},long,{o}", i, i + 1);
    }
    s
}

/// Trades CSV with the given outcome pattern.
pub fn trades_csv_from(outcomes: &[bool]) -> String {
    let mut s = String::from("open,close,direction,outcome\n");
    for (i, w) in outcomes.iter().enumerate() {
        let _ = writeln!(s, "{},{},long,{}", i, i + 1, if *w { "win" } else { "loss" });
    }
    s
}

/// Nine failed 100-prediction attempts followed by a 65/100 result.
pub fn ten_attempt_ledger() -> Ledger {
    let mut l = Ledger::new();
    for i in 0..9 {
        l.register(AttemptRecord::new(format!("try{i}"), "analyst", i, 100, 50, 0.5)).unwrap();
    }
    l.register(AttemptRecord::new("result", "analyst", 9, 100, 65, 0.5)).unwrap();
    l
}

/// Two results at 1% each: one success in one prediction at p0 = 0.01.
pub fn two_one_percent_results() -> Ledger {
    let mut l = Ledger::new();
    l.register(AttemptRecord::new("a", "lab-a", 1, 1, 1, 0.01)).unwrap();
    l.register(AttemptRecord::new("b", "lab-b", 2, 1, 1, 0.01)).unwrap();
    l
}

pub fn bundled_prices() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_400.csv")
}
