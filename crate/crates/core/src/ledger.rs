//! Append-only registry of tested hypotheses.
//!
//! Every attempt, failed ones included, raises the number of random attempts
//! a result has to be measured against. Who is asking matters: an agent that
//! only knows its own attempts computes a smaller `m` than a reviewer who
//! knows everybody's.
//!
//! On disk the ledger is JSON lines, one record per line with exactly the
//! keys `id`, `agent`, `ts`, `n`, `k`, `p0`, `note`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{any_of, binom_sf, combine_results, BinomialQuery, Probability};
use crate::quoted;

/// One tested hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttemptRecord {
    pub id: String,
    pub agent: String,
    #[serde(rename = "ts")]
    pub timestamp: i64,
    #[serde(rename = "n")]
    pub n_predictions: u64,
    #[serde(rename = "k")]
    pub n_successes: u64,
    pub p0: f64,
    pub note: String,
}

impl AttemptRecord {
    pub fn new(
        id: impl Into<String>,
        agent: impl Into<String>,
        timestamp: i64,
        n_predictions: u64,
        n_successes: u64,
        p0: f64,
    ) -> Self {
        AttemptRecord {
            id: id.into(),
            agent: agent.into(),
            timestamp,
            n_predictions,
            n_successes,
            p0,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::domain("attempt id must not be empty"));
        }
        self.query().map(|_| ())
    }

    pub fn query(&self) -> Result<BinomialQuery> {
        BinomialQuery::new(self.n_successes, self.n_predictions, self.p0)
    }

    fn order_key(&self) -> (i64, String) {
        (self.timestamp, self.id.clone())
    }
}

/// Whose attempts the evaluator knows about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KnowledgeScope {
    All,
    Agents(BTreeSet<String>),
}

impl KnowledgeScope {
    pub fn agents<I, S>(agents: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = agents.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err(Error::domain("an explicit knowledge scope needs at least one agent"));
        }
        Ok(KnowledgeScope::Agents(set))
    }

    pub fn contains(&self, agent: &str) -> bool {
        match self {
            KnowledgeScope::All => true,
            KnowledgeScope::Agents(set) => set.contains(agent),
        }
    }
}

/// The uncertainty of one result under one knowledge scope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyReport {
    pub result_id: String,
    /// Random attempts the result is measured against, itself included.
    pub attempts: u64,
    /// `P[X >= k]` for a single random attempt.
    pub single_attempt: Probability,
    /// `1 - (1 - single_attempt)^attempts`.
    pub uncertainty: Probability,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombineReport {
    pub parts: Vec<UncertaintyReport>,
    pub cutoff: Probability,
    pub combined: Probability,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    records: BTreeMap<(i64, String), AttemptRecord>,
    timestamps: HashMap<String, i64>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in `(timestamp, id)` order.
    pub fn iter(&self) -> impl Iterator<Item = &AttemptRecord> {
        self.records.values()
    }

    pub fn get(&self, id: &str) -> Option<&AttemptRecord> {
        let ts = *self.timestamps.get(id)?;
        self.records.get(&(ts, id.to_owned()))
    }

    pub fn register(&mut self, record: AttemptRecord) -> Result<String> {
        record.validate()?;
        if self.timestamps.contains_key(&record.id) {
            return Err(Error::Conflict(format!("attempt id {:?} is already registered", record.id)));
        }
        let id = record.id.clone();
        self.timestamps.insert(id.clone(), record.timestamp);
        self.records.insert(record.order_key(), record);
        Ok(id)
    }

    fn require(&self, id: &str) -> Result<&AttemptRecord> {
        self.get(id)
            .ok_or_else(|| Error::NotFound(format!("no attempt with id {id:?}")))
    }

    fn check_scope(&self, scope: &KnowledgeScope) -> Result<()> {
        if let KnowledgeScope::Agents(agents) = scope {
            let known: HashSet<&str> = self.iter().map(|r| r.agent.as_str()).collect();
            if let Some(unknown) = agents.iter().find(|a| !known.contains(a.as_str())) {
                return Err(Error::NotFound(format!("agent {unknown:?} has no attempts in the ledger")));
            }
        }
        Ok(())
    }

    pub fn uncertainty(&self, result_id: &str, scope: &KnowledgeScope) -> Result<Probability> {
        Ok(self.assess(result_id, scope)?.uncertainty)
    }

    /// Uncertainty of `result_id` with every in-scope attempt made up to its
    /// timestamp counted as a competing random attempt.
    pub fn assess(&self, result_id: &str, scope: &KnowledgeScope) -> Result<UncertaintyReport> {
        self.assess_excluding(result_id, scope, &HashSet::new())
    }

    fn assess_excluding(
        &self,
        result_id: &str,
        scope: &KnowledgeScope,
        excluded: &HashSet<&str>,
    ) -> Result<UncertaintyReport> {
        let result = self.require(result_id)?;
        self.check_scope(scope)?;

        let counted: Vec<&AttemptRecord> = self
            .iter()
            .take_while(|r| r.timestamp <= result.timestamp)
            .filter(|r| r.id == result.id || (scope.contains(&r.agent) && !excluded.contains(r.id.as_str())))
            .collect();
        let attempts = counted.len() as u64;

        let single = binom_sf(&result.query()?);
        let uncertainty = any_of(single, attempts);

        let mut warnings = Vec::new();
        let mixed = counted
            .iter()
            .filter(|r| r.n_predictions != result.n_predictions || r.p0 != result.p0)
            .count();
        if mixed > 0 {
            warnings.push(format!(
                "{mixed} of {attempts} counted attempts differ in size or baseline from {:?}; \
                 treating them as {}-prediction attempts at p0 = {} is an approximation",
                result.id, result.n_predictions, result.p0
            ));
        }
        warnings.extend(quoted::best_of_m_warning(
            result.n_successes,
            result.n_predictions,
            result.p0,
            attempts,
            single.value(),
            uncertainty.value(),
        ));

        Ok(UncertaintyReport {
            result_id: result.id.clone(),
            attempts,
            single_attempt: single,
            uncertainty,
            warnings,
        })
    }

    /// Reviewer view: evaluate each result with every known attempt in
    /// scope, then combine them. Results being combined are parts of one
    /// joint result and do not count as competing attempts for each other.
    pub fn reviewer_combine(&self, result_ids: &[&str], cutoff: Probability) -> Result<CombineReport> {
        if result_ids.is_empty() {
            return Err(Error::domain("reviewer_combine needs at least one result"));
        }
        let members: HashSet<&str> = result_ids.iter().copied().collect();
        let parts = result_ids
            .iter()
            .map(|id| {
                let mut others = members.clone();
                others.remove(id);
                self.assess_excluding(id, &KnowledgeScope::All, &others)
            })
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<Probability> = parts.iter().map(|p| p.uncertainty).collect();
        let combined = combine_results(&values, cutoff)?;
        let warnings = parts.iter().flat_map(|p| p.warnings.iter().cloned()).collect();
        Ok(CombineReport {
            parts,
            cutoff,
            combined,
            warnings,
        })
    }

    pub fn from_reader<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let mut ledger = Ledger::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: AttemptRecord =
                serde_json::from_str(&line).map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
            ledger
                .register(record)
                .map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
        }
        Ok(ledger)
    }

    pub fn to_writer<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for record in self.iter() {
            serde_json::to_writer(&mut writer, record)?;
            writer.write_all(b"\n")?;
        }
        writer.flush()
    }

    /// Load a ledger; a missing or empty file is an empty ledger.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        match fs::File::open(path) {
            Ok(file) => Ledger::from_reader(file, &path.display().to_string()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Ledger::new()),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    /// Write the whole ledger to a temporary file next to `path`, then rename
    /// it over `path`. An interrupted save leaves the old file intact.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
        self.to_writer(std::io::BufWriter::new(tmp.as_file_mut()))
            .map_err(|e| Error::io(tmp.path(), e))?;
        tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
        Ok(())
    }
}

/// A ledger bound to a file: every registration is persisted before it
/// becomes visible.
#[derive(Debug)]
pub struct LedgerFile {
    path: PathBuf,
    ledger: Ledger,
}

impl LedgerFile {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let ledger = Ledger::load(&path)?;
        Ok(LedgerFile { path, ledger })
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn register(&mut self, record: AttemptRecord) -> Result<String> {
        let mut next = self.ledger.clone();
        let id = next.register(record)?;
        next.save(&self.path)?;
        self.ledger = next;
        Ok(id)
    }
}
